#ifndef TVEM_DATA_HPP
#define TVEM_DATA_HPP

#include <Eigen/Dense>
#include <string>

#include "tvem/error.hpp"

namespace tvem {

// N datapoints of uniform dimension D, one per row.
struct DataSet {
  Eigen::MatrixXd y;

  DataSet() = default;
  explicit DataSet(Eigen::MatrixXd m) : y(std::move(m)) {
    if (y.rows() < 1 || y.cols() < 1)
      fail(ErrorCode::InvalidInput, "dataset needs N >= 1 and D >= 1");
  }

  int n() const { return int(y.rows()); }
  int dim() const { return int(y.cols()); }
  Eigen::MatrixXd::ConstRowXpr point(int i) const { return y.row(i); }
};

// CSV with header d1..dD, '.' decimal separator, 17 significant digits.
DataSet read_csv(const std::string& path);
void write_csv(const DataSet& data, const std::string& path);

std::string sha256_file(const std::string& path);
std::string sha256_bytes(const std::string& bytes);

// Write via a temp file + rename so readers never observe partial content.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace tvem

#endif
