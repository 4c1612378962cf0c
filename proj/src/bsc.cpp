#include "tvem/models/bsc.hpp"

#include <cmath>

#include "tvem/truncated.hpp"

namespace tvem {

void validate_bsc_params(const BscParams& p) {
  if (p.W.rows() < 1 || p.W.cols() < 1 || p.W.cols() > 62)
    fail(ErrorCode::InvalidParams, "inconsistent BSC dictionary shape");
  if (p.W.hasNaN() || std::isnan(p.pi) || std::isnan(p.sigma2))
    fail(ErrorCode::InvalidParams, "NaN in BSC parameters");
  // pi = 0 or 1 is permitted on input (degenerate prior); the M-step clamps.
  if (p.pi < 0.0 || p.pi > 1.0)
    fail(ErrorCode::InvalidParams, "BSC prior outside [0, 1]");
  if (p.sigma2 < BscModel::kVarFloor)
    fail(ErrorCode::InvalidParams, "BSC noise variance below floor");
}

BscModel::BscModel(BscParams params) : params_(std::move(params)) {
  validate_bsc_params(params_);
}

void BscModel::set_params(BscParams p) {
  validate_bsc_params(p);
  params_ = std::move(p);
}

Eigen::VectorXd BscModel::mean_for(LatentState s) const {
  const int H = int(params_.W.cols());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(data_dim());
  for (int h = 0; h < H; ++h)
    if (state_bit(s, h, H)) mean += params_.W.col(h);
  return mean;
}

double BscModel::log_joint(LatentState s,
                           Eigen::Ref<const Eigen::VectorXd> y) const {
  if (!space().contains(s))
    fail(ErrorCode::InvalidInput, "binary state out of range");
  check_point_dim(y);
  const int H = int(params_.W.cols());
  const int k = active_count(s);
  double lp = 0.0;
  if (k > 0) {
    if (params_.pi <= 0.0) return kNegInf;
    lp += k * std::log(params_.pi);
  }
  if (k < H) {
    if (params_.pi >= 1.0) return kNegInf;
    lp += (H - k) * std::log(1.0 - params_.pi);
  }
  constexpr double kLog2Pi = 1.8378770664093453;
  const double v = params_.sigma2;
  const Eigen::VectorXd resid = y - mean_for(s);
  lp -= 0.5 * data_dim() * (kLog2Pi + std::log(v));
  lp -= resid.squaredNorm() / (2.0 * v);
  return lp;
}

LatentState BscModel::sample_state(Rng& rng) const {
  const int H = int(params_.W.cols());
  std::uint64_t code = 0;
  for (int h = 0; h < H; ++h) {
    code <<= 1;
    if (rng.bernoulli(params_.pi)) code |= 1u;
  }
  return LatentState{code};
}

Eigen::VectorXd BscModel::sample_observation(LatentState s, Rng& rng) const {
  Eigen::VectorXd y = mean_for(s);
  const double sd = std::sqrt(params_.sigma2);
  for (int d = 0; d < data_dim(); ++d) y[d] += sd * rng.normal();
  return y;
}

void BscModel::m_step(const DataSet& data, const VariationalCollection& K) {
  const int H = int(params_.W.cols());
  const int D = data_dim();
  const int N = data.n();

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(D, H);  // sum_n y <s>^T
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(H, H);  // sum_n <s s^T>
  double active_sum = 0.0;                          // sum_n <sum_h s_h>
  double ysq_sum = 0.0;

  for (int i = 0; i < N; ++i) {
    const auto y = data.point(i);
    ysq_sum += y.squaredNorm();
    const TruncatedWeights w = truncated_weights(K.set(i), y, *this);
    Eigen::VectorXd es = Eigen::VectorXd::Zero(H);
    for (size_t j = 0; j < w.states.size(); ++j) {
      const LatentState s = w.states[j];
      const double wj = w.weights[j];
      if (wj == 0.0) continue;
      for (int a = 0; a < H; ++a) {
        if (!state_bit(s, a, H)) continue;
        es[a] += wj;
        for (int b = 0; b < H; ++b)
          if (state_bit(s, b, H)) G(a, b) += wj;
      }
    }
    A += y.transpose() * es.transpose();
    active_sum += es.sum();
  }

  BscParams next = params_;
  next.pi = std::clamp(active_sum / (double(N) * H), kPiFloor, 1.0 - kPiFloor);

  const double tr = G.trace();
  if (tr > 0.0) {
    const double ridge = 1e-6 * tr / H;
    Eigen::MatrixXd Greg = G;
    Greg.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Greg);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
      fail(ErrorCode::SingularSystem,
           "BSC sufficient-statistic Gram matrix is singular");
    next.W = ldlt.solve(A.transpose()).transpose();
    const double resid = ysq_sum - 2.0 * (next.W.transpose() * A).trace() +
                         (next.W.transpose() * next.W * G).trace();
    next.sigma2 = std::max(resid / (double(N) * D), kVarFloor);
  } else {
    // only the all-zero state carries mass: W is unconstrained, keep it
    next.sigma2 = std::max(ysq_sum / (double(N) * D), kVarFloor);
  }
  set_params(std::move(next));
}

}  // namespace tvem
