#include "tvem/models/gmm.hpp"

#include <cmath>

#include "tvem/models/mixture_common.hpp"
#include "tvem/truncated.hpp"

namespace tvem {

namespace detail {

Eigen::MatrixXd mixture_responsibilities(const DataSet& data,
                                         const VariationalCollection& K,
                                         const GenerativeModel& model, int C) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(data.n(), C);
  for (int i = 0; i < data.n(); ++i) {
    const TruncatedWeights w = truncated_weights(K.set(i), data.point(i), model);
    for (size_t j = 0; j < w.states.size(); ++j)
      r(i, int(w.states[j].code)) = w.weights[j];
  }
  return r;
}

Eigen::VectorXd constrained_mixing(const Eigen::VectorXd& R, double floor) {
  const int C = int(R.size());
  std::vector<bool> pinned(C, false);
  Eigen::VectorXd pi(C);
  for (;;) {
    int n_pinned = 0;
    double free_mass = 0.0;
    for (int c = 0; c < C; ++c) {
      if (pinned[c])
        ++n_pinned;
      else
        free_mass += R[c];
    }
    const double budget = 1.0 - n_pinned * floor;
    if (budget <= 0.0 || free_mass <= 0.0)
      fail(ErrorCode::InvalidParams, "mixing floor infeasible for this C");
    bool changed = false;
    for (int c = 0; c < C; ++c) {
      pi[c] = pinned[c] ? floor : R[c] / free_mass * budget;
      if (!pinned[c] && pi[c] < floor) {
        pinned[c] = true;
        changed = true;
      }
    }
    if (!changed) return pi;
  }
}

int lowest_max_joint_point(const DataSet& data, const GenerativeModel& model,
                           const VariationalCollection& K) {
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < data.n(); ++i) {
    double mx = kNegInf;
    for (LatentState s : K.set(i).states())
      mx = std::max(mx, model.log_joint(s, data.point(i)));
    if (mx < best_val) {
      best_val = mx;
      best = i;
    }
  }
  return best;
}

}  // namespace detail

void validate_gmm_params(const GmmParams& p) {
  const int C = int(p.pi.size());
  if (C < 1 || p.mu.rows() != C || p.sigma2.rows() != C ||
      p.mu.cols() != p.sigma2.cols() || p.mu.cols() < 1)
    fail(ErrorCode::InvalidParams, "inconsistent GMM parameter shapes");
  if (p.pi.hasNaN() || p.mu.hasNaN() || p.sigma2.hasNaN())
    fail(ErrorCode::InvalidParams, "NaN in GMM parameters");
  if (std::abs(p.pi.sum() - 1.0) > 1e-12)
    fail(ErrorCode::InvalidParams, "GMM mixing proportions do not sum to 1");
  if ((p.pi.array() < 0.0).any())
    fail(ErrorCode::InvalidParams, "negative mixing proportion");
  if ((p.sigma2.array() < GmmModel::kVarFloor).any())
    fail(ErrorCode::InvalidParams, "GMM variance below floor");
}

GmmModel::GmmModel(GmmParams params) : params_(std::move(params)) {
  validate_gmm_params(params_);
}

void GmmModel::set_params(GmmParams p) {
  validate_gmm_params(p);
  params_ = std::move(p);
}

double GmmModel::log_joint(LatentState s,
                           Eigen::Ref<const Eigen::VectorXd> y) const {
  if (!space().contains(s))
    fail(ErrorCode::InvalidInput, "cluster index out of range");
  check_point_dim(y);
  const int c = int(s.code);
  if (params_.pi[c] <= 0.0) return kNegInf;
  constexpr double kLog2Pi = 1.8378770664093453;
  double lp = std::log(params_.pi[c]);
  for (int d = 0; d < data_dim(); ++d) {
    const double v = params_.sigma2(c, d);
    const double diff = y[d] - params_.mu(c, d);
    lp -= 0.5 * (kLog2Pi + std::log(v) + diff * diff / v);
  }
  return lp;
}

LatentState GmmModel::sample_state(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  const int C = int(params_.pi.size());
  for (int c = 0; c < C; ++c) {
    acc += params_.pi[c];
    if (u < acc) return LatentState{std::uint64_t(c)};
  }
  return LatentState{std::uint64_t(C - 1)};
}

Eigen::VectorXd GmmModel::sample_observation(LatentState s, Rng& rng) const {
  const int c = int(s.code);
  Eigen::VectorXd y(data_dim());
  for (int d = 0; d < data_dim(); ++d)
    y[d] = params_.mu(c, d) + std::sqrt(params_.sigma2(c, d)) * rng.normal();
  return y;
}

void GmmModel::m_step(const DataSet& data, const VariationalCollection& K) {
  const int C = int(params_.pi.size());
  const int D = data_dim();
  const Eigen::MatrixXd r = detail::mixture_responsibilities(data, K, *this, C);
  const Eigen::VectorXd R = r.colwise().sum();

  GmmParams next = params_;
  next.pi = detail::constrained_mixing(R, kMixFloor);
  for (int c = 0; c < C; ++c) {
    if (R[c] <= 0.0) continue;  // starved, handled below
    next.mu.row(c) = (r.col(c).transpose() * data.y) / R[c];
    for (int d = 0; d < D; ++d) {
      const double ss =
          (r.col(c).array() * (data.y.col(d).array() - next.mu(c, d)).square())
              .sum();
      next.sigma2(c, d) = std::max(ss / R[c], kVarFloor);
    }
  }
  for (int c = 0; c < C; ++c) {
    if (R[c] > 0.0) continue;
    // re-seed at the datapoint the current model explains worst
    const int i = detail::lowest_max_joint_point(data, *this, K);
    next.mu.row(c) = data.y.row(i);
    // variance kept from the previous iteration, pi already at the floor
  }
  set_params(std::move(next));
}

}  // namespace tvem
