#include "tvem/data.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace tvem {

DataSet read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open data file: " + path);
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCode::InvalidInput, "empty data file: " + path);
  // header d1..dD
  int dim = 1;
  for (char c : line)
    if (c == ',') ++dim;

  std::vector<double> values;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str())
        fail(ErrorCode::InvalidInput, "non-numeric cell in " + path + ": " + cell);
      values.push_back(v);
      ++cols;
    }
    if (cols != dim)
      fail(ErrorCode::InvalidInput, "ragged row in " + path);
    ++rows;
  }
  if (rows == 0) fail(ErrorCode::InvalidInput, "no datapoints in " + path);
  Eigen::MatrixXd m(rows, dim);
  for (int i = 0; i < rows; ++i)
    for (int d = 0; d < dim; ++d) m(i, d) = values[size_t(i) * dim + d];
  return DataSet(std::move(m));
}

void write_csv(const DataSet& data, const std::string& path) {
  std::ostringstream out;
  for (int d = 0; d < data.dim(); ++d)
    out << (d ? "," : "") << 'd' << (d + 1);
  out << '\n';
  char buf[64];
  for (int i = 0; i < data.n(); ++i) {
    for (int d = 0; d < data.dim(); ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", data.y(i, d));
      out << (d ? "," : "") << buf;
    }
    out << '\n';
  }
  atomic_write(path, out.str());
}

static std::string hex_digest(const unsigned char* md, unsigned len) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string sha256_bytes(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  return hex_digest(md, len);
}

std::string sha256_file(const std::string& path) {
  return sha256_bytes(read_file(path));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write file: " + tmp);
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    fail(ErrorCode::IoError, "cannot rename " + tmp + " to " + path);
}

}  // namespace tvem
