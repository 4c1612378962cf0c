#include "tvem/models/poisson_mix.hpp"

#include <cmath>

#include "tvem/models/mixture_common.hpp"
#include "tvem/truncated.hpp"

namespace tvem {

void validate_poisson_params(const PoissonMixParams& p) {
  const int C = int(p.pi.size());
  if (C < 1 || p.lambda.rows() != C || p.lambda.cols() < 1)
    fail(ErrorCode::InvalidParams, "inconsistent Poisson mixture shapes");
  if (p.pi.hasNaN() || p.lambda.hasNaN())
    fail(ErrorCode::InvalidParams, "NaN in Poisson mixture parameters");
  if (std::abs(p.pi.sum() - 1.0) > 1e-12)
    fail(ErrorCode::InvalidParams, "mixing proportions do not sum to 1");
  if ((p.pi.array() < 0.0).any())
    fail(ErrorCode::InvalidParams, "negative mixing proportion");
  if ((p.lambda.array() < PoissonMixModel::kRateFloor).any())
    fail(ErrorCode::InvalidParams, "Poisson rate below floor");
}

PoissonMixModel::PoissonMixModel(PoissonMixParams params)
    : params_(std::move(params)) {
  validate_poisson_params(params_);
}

void PoissonMixModel::set_params(PoissonMixParams p) {
  validate_poisson_params(p);
  params_ = std::move(p);
}

double PoissonMixModel::log_joint(LatentState s,
                                  Eigen::Ref<const Eigen::VectorXd> y) const {
  if (!space().contains(s))
    fail(ErrorCode::InvalidInput, "cluster index out of range");
  check_point_dim(y);
  const int c = int(s.code);
  if (params_.pi[c] <= 0.0) return kNegInf;
  double lp = std::log(params_.pi[c]);
  for (int d = 0; d < data_dim(); ++d) {
    const double lam = params_.lambda(c, d);
    lp += y[d] * std::log(lam) - lam - std::lgamma(y[d] + 1.0);
  }
  return lp;
}

LatentState PoissonMixModel::sample_state(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  const int C = int(params_.pi.size());
  for (int c = 0; c < C; ++c) {
    acc += params_.pi[c];
    if (u < acc) return LatentState{std::uint64_t(c)};
  }
  return LatentState{std::uint64_t(C - 1)};
}

Eigen::VectorXd PoissonMixModel::sample_observation(LatentState s,
                                                    Rng& rng) const {
  const int c = int(s.code);
  Eigen::VectorXd y(data_dim());
  for (int d = 0; d < data_dim(); ++d)
    y[d] = double(rng.poisson(params_.lambda(c, d)));
  return y;
}

void PoissonMixModel::m_step(const DataSet& data,
                             const VariationalCollection& K) {
  const int C = int(params_.pi.size());
  const Eigen::MatrixXd r = detail::mixture_responsibilities(data, K, *this, C);
  const Eigen::VectorXd R = r.colwise().sum();

  PoissonMixParams next = params_;
  next.pi = detail::constrained_mixing(R, kMixFloor);
  for (int c = 0; c < C; ++c) {
    if (R[c] <= 0.0) continue;
    next.lambda.row(c) =
        ((r.col(c).transpose() * data.y) / R[c]).cwiseMax(kRateFloor);
  }
  for (int c = 0; c < C; ++c) {
    if (R[c] > 0.0) continue;
    const int i = detail::lowest_max_joint_point(data, *this, K);
    next.lambda.row(c) = data.y.row(i).cwiseMax(kRateFloor);
  }
  set_params(std::move(next));
}

}  // namespace tvem
