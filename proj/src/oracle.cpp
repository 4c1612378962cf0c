#include "tvem/oracle.hpp"

#include <cmath>

#include "tvem/models/bsc.hpp"
#include "tvem/models/gmm.hpp"
#include "tvem/models/poisson_mix.hpp"

namespace tvem::oracle {

namespace {

std::vector<double> joint_table(Eigen::Ref<const Eigen::VectorXd> y,
                                const GenerativeModel& model,
                                const std::vector<LatentState>& omega) {
  std::vector<double> lj;
  lj.reserve(omega.size());
  for (LatentState s : omega) lj.push_back(model.log_joint(s, y));
  return lj;
}

// posterior tables for every datapoint, N x |Omega|
std::vector<std::vector<double>> posterior_tables(
    const DataSet& data, const GenerativeModel& model,
    const std::vector<LatentState>& omega) {
  std::vector<std::vector<double>> post;
  post.reserve(size_t(data.n()));
  for (int i = 0; i < data.n(); ++i) {
    const std::vector<double> lj = joint_table(data.point(i), model, omega);
    const double lse = log_sum_exp(lj);
    if (lse == kNegInf)
      fail(ErrorCode::DegenerateSet,
           "model assigns zero probability to a datapoint");
    std::vector<double> w(lj.size());
    for (size_t j = 0; j < lj.size(); ++j)
      w[j] = lj[j] == kNegInf ? 0.0 : std::exp(lj[j] - lse);
    post.push_back(std::move(w));
  }
  return post;
}

// Independent re-coding of the floor-constrained simplex maximizer.
Eigen::VectorXd simplex_floor(const Eigen::VectorXd& R, double floor) {
  const int C = int(R.size());
  Eigen::VectorXd pi(C);
  std::vector<bool> pinned(C, false);
  bool again = true;
  while (again) {
    again = false;
    double mass = 0.0;
    int npin = 0;
    for (int c = 0; c < C; ++c)
      pinned[c] ? void(++npin) : void(mass += R[c]);
    const double budget = 1.0 - npin * floor;
    for (int c = 0; c < C; ++c) {
      pi[c] = pinned[c] ? floor : R[c] / mass * budget;
      if (!pinned[c] && pi[c] < floor) {
        pinned[c] = true;
        again = true;
      }
    }
  }
  return pi;
}

std::unique_ptr<GenerativeModel> exact_m_step_gmm(
    const DataSet& data, const GmmModel& model,
    const std::vector<std::vector<double>>& post) {
  const int C = model.space().size;
  const int D = data.dim();
  GmmParams p = model.params();
  Eigen::VectorXd R = Eigen::VectorXd::Zero(C);
  for (int i = 0; i < data.n(); ++i)
    for (int c = 0; c < C; ++c) R[c] += post[size_t(i)][size_t(c)];
  p.pi = simplex_floor(R, GmmModel::kMixFloor);
  for (int c = 0; c < C; ++c) {
    if (R[c] <= 0.0) continue;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
    for (int i = 0; i < data.n(); ++i)
      mean += post[size_t(i)][size_t(c)] * data.y.row(i).transpose();
    mean /= R[c];
    Eigen::VectorXd var = Eigen::VectorXd::Zero(D);
    for (int i = 0; i < data.n(); ++i)
      var += post[size_t(i)][size_t(c)] *
             (data.y.row(i).transpose() - mean).array().square().matrix();
    p.mu.row(c) = mean.transpose();
    p.sigma2.row(c) = (var / R[c]).cwiseMax(GmmModel::kVarFloor).transpose();
  }
  return std::make_unique<GmmModel>(std::move(p));
}

std::unique_ptr<GenerativeModel> exact_m_step_poisson(
    const DataSet& data, const PoissonMixModel& model,
    const std::vector<std::vector<double>>& post) {
  const int C = model.space().size;
  PoissonMixParams p = model.params();
  Eigen::VectorXd R = Eigen::VectorXd::Zero(C);
  for (int i = 0; i < data.n(); ++i)
    for (int c = 0; c < C; ++c) R[c] += post[size_t(i)][size_t(c)];
  p.pi = simplex_floor(R, PoissonMixModel::kMixFloor);
  for (int c = 0; c < C; ++c) {
    if (R[c] <= 0.0) continue;
    Eigen::VectorXd num = Eigen::VectorXd::Zero(data.dim());
    for (int i = 0; i < data.n(); ++i)
      num += post[size_t(i)][size_t(c)] * data.y.row(i).transpose();
    p.lambda.row(c) =
        (num / R[c]).cwiseMax(PoissonMixModel::kRateFloor).transpose();
  }
  return std::make_unique<PoissonMixModel>(std::move(p));
}

std::unique_ptr<GenerativeModel> exact_m_step_bsc(
    const DataSet& data, const BscModel& model,
    const std::vector<LatentState>& omega,
    const std::vector<std::vector<double>>& post) {
  const int H = model.space().size;
  const int D = data.dim();
  const int N = data.n();
  BscParams p = model.params();

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(D, H);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(H, H);
  double active = 0.0, ysq = 0.0;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd y = data.y.row(i).transpose();
    ysq += y.squaredNorm();
    Eigen::VectorXd es = Eigen::VectorXd::Zero(H);
    Eigen::MatrixXd ess = Eigen::MatrixXd::Zero(H, H);
    for (size_t j = 0; j < omega.size(); ++j) {
      const double w = post[size_t(i)][j];
      if (w == 0.0) continue;
      Eigen::VectorXd sv(H);
      for (int h = 0; h < H; ++h) sv[h] = state_bit(omega[j], h, H) ? 1.0 : 0.0;
      es += w * sv;
      ess += w * sv * sv.transpose();
    }
    A += y * es.transpose();
    G += ess;
    active += es.sum();
  }
  p.pi = std::clamp(active / (double(N) * H), BscModel::kPiFloor,
                    1.0 - BscModel::kPiFloor);
  const double tr = G.trace();
  if (tr > 0.0) {
    Eigen::MatrixXd Greg = G;
    Greg.diagonal().array() += 1e-6 * tr / H;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Greg);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
      fail(ErrorCode::SingularSystem, "singular Gram in exact BSC M-step");
    p.W = ldlt.solve(A.transpose()).transpose();
    const double resid = ysq - 2.0 * (p.W.transpose() * A).trace() +
                         (p.W.transpose() * p.W * G).trace();
    p.sigma2 = std::max(resid / (double(N) * D), BscModel::kVarFloor);
  } else {
    p.sigma2 = std::max(ysq / (double(N) * D), BscModel::kVarFloor);
  }
  return std::make_unique<BscModel>(std::move(p));
}

}  // namespace

double log_likelihood(const DataSet& data, const GenerativeModel& model) {
  const auto omega = enumerate_states(model.space(), enumeration_cap());
  double ll = 0.0;
  for (int i = 0; i < data.n(); ++i)
    ll += log_sum_exp(joint_table(data.point(i), model, omega));
  return ll;
}

ExactPosterior exact_posterior(Eigen::Ref<const Eigen::VectorXd> y,
                               const GenerativeModel& model) {
  const auto omega = enumerate_states(model.space(), enumeration_cap());
  const std::vector<double> lj = joint_table(y, model, omega);
  const double lse = log_sum_exp(lj);
  if (lse == kNegInf)
    fail(ErrorCode::DegenerateSet, "all joints are zero for this datapoint");
  ExactPosterior post;
  post.weights.resize(lj.size());
  for (size_t j = 0; j < lj.size(); ++j)
    post.weights[j] = lj[j] == kNegInf ? 0.0 : std::exp(lj[j] - lse);
  return post;
}

double kl_divergence(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size())
    fail(ErrorCode::InvalidInput, "KL tables differ in size");
  double kl = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    if (p[i] == 0.0) return std::numeric_limits<double>::infinity();
    kl += q[i] * std::log(q[i] / p[i]);
  }
  return kl;
}

std::unique_ptr<GenerativeModel> exact_em_step(const DataSet& data,
                                               const GenerativeModel& model) {
  const auto omega = enumerate_states(model.space(), enumeration_cap());
  const auto post = posterior_tables(data, model, omega);
  if (auto* gmm = dynamic_cast<const GmmModel*>(&model))
    return exact_m_step_gmm(data, *gmm, post);
  if (auto* pois = dynamic_cast<const PoissonMixModel*>(&model))
    return exact_m_step_poisson(data, *pois, post);
  if (auto* bsc = dynamic_cast<const BscModel*>(&model))
    return exact_m_step_bsc(data, *bsc, omega, post);
  fail(ErrorCode::InvalidInput, "no exact M-step for this model type");
}

VariationalCollection brute_force_best_sets(const DataSet& data,
                                            const GenerativeModel& model,
                                            int S, std::uint64_t budget) {
  const auto omega = enumerate_states(model.space(), enumeration_cap());
  const int M = int(omega.size());
  if (S < 1 || S > M) fail(ErrorCode::InvalidInput, "invalid subset size S");

  double combos = 1.0;
  for (int k = 0; k < S; ++k) combos = combos * (M - k) / (k + 1);
  if (combos * data.n() > double(budget))
    fail(ErrorCode::InvalidInput, "brute-force subset budget exceeded");

  VariationalCollection K;
  for (int i = 0; i < data.n(); ++i) {
    const std::vector<double> lj = joint_table(data.point(i), model, omega);
    std::vector<int> idx(static_cast<size_t>(S));
    for (int k = 0; k < S; ++k) idx[size_t(k)] = k;
    std::vector<int> best;
    double best_val = kNegInf;
    bool first = true;
    for (;;) {
      std::vector<double> sub;
      sub.reserve(size_t(S));
      for (int k : idx) sub.push_back(lj[size_t(k)]);
      const double v = log_sum_exp(sub);
      // lex-first subset wins on exact ties
      if (first || v > best_val) {
        best_val = v;
        best = idx;
        first = false;
      }
      // next combination in lexicographic order
      int pos = S - 1;
      while (pos >= 0 && idx[size_t(pos)] == M - S + pos) --pos;
      if (pos < 0) break;
      ++idx[size_t(pos)];
      for (int k = pos + 1; k < S; ++k) idx[size_t(k)] = idx[size_t(k - 1)] + 1;
    }
    std::vector<LatentState> states;
    for (int k : best) states.push_back(omega[size_t(k)]);
    K.push_back(VariationalStateSet(std::move(states), S, model.space()));
  }
  return K;
}

HardEmResult hard_em_step(const DataSet& data, const GenerativeModel& model) {
  const auto omega = enumerate_states(model.space(), enumeration_cap());
  HardEmResult result;
  VariationalCollection K;
  for (int i = 0; i < data.n(); ++i) {
    const ExactPosterior post = exact_posterior(data.point(i), model);
    size_t best = 0;
    for (size_t j = 1; j < post.weights.size(); ++j)
      if (post.weights[j] > post.weights[best]) best = j;
    result.states.push_back(omega[best]);
    K.push_back(VariationalStateSet({omega[best]}, 1, model.space()));
  }
  result.model = model.clone();
  result.model->m_step(data, K);
  return result;
}

HardEmResult hard_em_partial_step(const DataSet& data,
                                  const GenerativeModel& model,
                                  const std::vector<LatentState>& states_old,
                                  const std::vector<LatentState>& candidates) {
  if (int(states_old.size()) != data.n() ||
      int(candidates.size()) != data.n())
    fail(ErrorCode::InvalidInput, "state lists must have one entry per datapoint");
  HardEmResult result;
  VariationalCollection K;
  for (int i = 0; i < data.n(); ++i) {
    // posterior comparison at fixed y equals the joint comparison
    const double lj_old = model.log_joint(states_old[size_t(i)], data.point(i));
    const double lj_new = model.log_joint(candidates[size_t(i)], data.point(i));
    const LatentState keep =
        lj_new >= lj_old ? candidates[size_t(i)] : states_old[size_t(i)];
    result.states.push_back(keep);
    K.push_back(VariationalStateSet({keep}, 1, model.space()));
  }
  result.model = model.clone();
  result.model->m_step(data, K);
  return result;
}

double hard_em_free_energy(const DataSet& data, const GenerativeModel& model,
                           const std::vector<LatentState>& states) {
  if (int(states.size()) != data.n())
    fail(ErrorCode::InvalidInput, "state list must have one entry per datapoint");
  double f = 0.0;
  for (int i = 0; i < data.n(); ++i)
    f += model.log_joint(states[size_t(i)], data.point(i));
  return f;
}

ExactPosterior annealed_posterior(Eigen::Ref<const Eigen::VectorXd> y,
                                  const GenerativeModel& model, double T) {
  if (!(T > 0.0) || !std::isfinite(T))
    fail(ErrorCode::InvalidInput, "temperature must be positive and finite");
  const auto omega = enumerate_states(model.space(), enumeration_cap());
  std::vector<double> scaled;
  scaled.reserve(omega.size());
  for (LatentState s : omega) {
    const double lj = model.log_joint(s, y);
    scaled.push_back(lj == kNegInf ? kNegInf : lj / T);
  }
  const double lse = log_sum_exp(scaled);
  if (lse == kNegInf)
    fail(ErrorCode::DegenerateSet, "all joints are zero for this datapoint");
  ExactPosterior post;
  post.weights.resize(scaled.size());
  for (size_t j = 0; j < scaled.size(); ++j)
    post.weights[j] = scaled[j] == kNegInf ? 0.0 : std::exp(scaled[j] - lse);
  return post;
}

}  // namespace tvem::oracle
