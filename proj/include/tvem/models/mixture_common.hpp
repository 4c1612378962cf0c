#ifndef TVEM_MODELS_MIXTURE_COMMON_HPP
#define TVEM_MODELS_MIXTURE_COMMON_HPP

#include <Eigen/Dense>
#include <vector>

#include "tvem/model.hpp"
#include "tvem/truncated.hpp"

namespace tvem::detail {

// Dense N x C responsibility matrix from truncated weights; zero for
// clusters outside K^(n).
Eigen::MatrixXd mixture_responsibilities(const DataSet& data,
                                         const VariationalCollection& K,
                                         const GenerativeModel& model, int C);

// Maximizer of sum_c R_c log pi_c over the simplex subject to pi_c >= floor.
// Clusters pinned at the floor are removed and the rest re-solved until the
// active set is stable (waterfilling).
Eigen::VectorXd constrained_mixing(const Eigen::VectorXd& R, double floor);

// Index of the datapoint whose best joint probability is lowest under the
// current parameters; used to re-seed starved clusters.
int lowest_max_joint_point(const DataSet& data, const GenerativeModel& model,
                           const VariationalCollection& K);

}  // namespace tvem::detail

#endif
