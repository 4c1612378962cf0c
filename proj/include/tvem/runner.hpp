#ifndef TVEM_RUNNER_HPP
#define TVEM_RUNNER_HPP

#include <string>

#include "tvem/serialize.hpp"

namespace tvem::runner {

// Command implementations shared by the C API and the CLI. Config documents
// arrive as resolved JSON text (flag overrides already applied by the
// caller). Return values are process exit codes: 0 success, 3 reached max
// iterations without convergence. Input and monotonicity failures surface
// as tvem::Error.

int cmd_generate(const std::string& config_text, const std::string& out_dir);

int cmd_train(const std::string& data_csv, const std::string& config_text,
              const std::string& out_dir);

int cmd_compare(const std::string& data_csv, const std::string& config_text,
                const std::string& out_json);

int cmd_eval(const std::string& data_csv, const std::string& params_text,
             const std::string& config_text, const std::string& out_json);

// Parameter-recovery helpers (best assignment over component permutations).
double mixture_mean_recovery_error(const Eigen::MatrixXd& learned,
                                   const Eigen::MatrixXd& truth);
double bsc_min_cosine_similarity(const Eigen::MatrixXd& learned,
                                 const Eigen::MatrixXd& truth);

}  // namespace tvem::runner

#endif
