#include "tvem/truncated.hpp"

#include <cmath>

namespace tvem {

double log_sum_exp(std::span<const double> v) {
  double mx = kNegInf;
  for (double x : v) {
    if (std::isnan(x)) fail(ErrorCode::InvalidParams, "NaN log value");
    if (x > mx) mx = x;
  }
  if (mx == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double x : v)
    if (x != kNegInf) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

VariationalStateSet::VariationalStateSet(std::vector<LatentState> states,
                                         int capacity,
                                         const StateSpace& space)
    : capacity_(capacity) {
  if (capacity < 1) fail(ErrorCode::InvalidInput, "set capacity must be >= 1");
  assign(std::move(states), space);
}

void VariationalStateSet::assign(std::vector<LatentState> states,
                                 const StateSpace& space) {
  if (states.empty())
    fail(ErrorCode::InvalidInput, "variational state set must be nonempty");
  std::sort(states.begin(), states.end());
  if (std::adjacent_find(states.begin(), states.end()) != states.end())
    fail(ErrorCode::InvalidInput, "duplicate states in variational set");
  for (LatentState s : states)
    if (!space.contains(s))
      fail(ErrorCode::InvalidInput, "state outside the model's state space");
  if (int(states.size()) > capacity_)
    fail(ErrorCode::InvalidInput, "variational set exceeds its capacity");
  states_ = std::move(states);
}

std::vector<double> set_log_joints(const VariationalStateSet& set,
                                   Eigen::Ref<const Eigen::VectorXd> y,
                                   const GenerativeModel& model) {
  std::vector<double> lj;
  lj.reserve(set.states().size());
  for (LatentState s : set.states()) lj.push_back(model.log_joint(s, y));
  return lj;
}

std::vector<double> normalize_log_weights(std::span<const double> log_joints) {
  const double lse = log_sum_exp(log_joints);
  if (lse == kNegInf)
    fail(ErrorCode::DegenerateSet,
         "all states in the set have zero joint probability");
  std::vector<double> w(log_joints.size());
  for (size_t i = 0; i < w.size(); ++i)
    w[i] = log_joints[i] == kNegInf ? 0.0 : std::exp(log_joints[i] - lse);
  return w;
}

TruncatedWeights truncated_weights(const VariationalStateSet& set,
                                   Eigen::Ref<const Eigen::VectorXd> y,
                                   const GenerativeModel& model) {
  model.check_point_dim(y);
  const std::vector<double> lj = set_log_joints(set, y, model);
  return TruncatedWeights{set.states(), normalize_log_weights(lj)};
}

double simplified_free_energy(const VariationalCollection& K,
                              const DataSet& data,
                              const GenerativeModel& model) {
  if (K.n() != data.n())
    fail(ErrorCode::InvalidInput, "collection length does not match dataset");
  double f = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const std::vector<double> lj =
        set_log_joints(K.set(i), data.point(i), model);
    f += log_sum_exp(lj);
  }
  return f;
}

double general_free_energy(const VariationalCollection& K,
                           const GenerativeModel& model_old,
                           const GenerativeModel& model_new,
                           const DataSet& data) {
  if (K.n() != data.n())
    fail(ErrorCode::InvalidInput, "collection length does not match dataset");
  double f = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const auto y = data.point(i);
    const std::vector<double> lj_old = set_log_joints(K.set(i), y, model_old);
    const std::vector<double> w = normalize_log_weights(lj_old);
    for (size_t j = 0; j < w.size(); ++j) {
      if (w[j] == 0.0) continue;  // 0 * log 0 = 0
      const double lj_new = model_new.log_joint(K.set(i).states()[j], y);
      if (lj_new == kNegInf) return kNegInf;
      f += w[j] * lj_new;
    }
    f += entropy(w);
  }
  return f;
}

double generalized_free_energy(const std::vector<std::vector<double>>& q,
                               const DataSet& data,
                               const GenerativeModel& model) {
  if (int(q.size()) != data.n())
    fail(ErrorCode::InvalidInput, "q table count does not match dataset");
  const std::vector<LatentState> omega =
      enumerate_states(model.space(), enumeration_cap());
  double f = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const std::vector<double>& qi = q[size_t(i)];
    if (qi.size() != omega.size())
      fail(ErrorCode::InvalidInput, "q table dimension != |Omega|");
    double total = 0.0;
    for (double w : qi) {
      if (w < 0.0) fail(ErrorCode::InvalidInput, "negative q weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
      fail(ErrorCode::InvalidInput, "q table is not normalized");
    const auto y = data.point(i);
    for (size_t j = 0; j < omega.size(); ++j) {
      if (qi[j] == 0.0) continue;
      const double lj = model.log_joint(omega[j], y);
      if (lj == kNegInf) return kNegInf;
      f += qi[j] * lj;
    }
    f += entropy(qi);
  }
  return f;
}

double entropy(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights) {
    if (w < 0.0) fail(ErrorCode::InvalidInput, "negative weight in entropy");
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

}  // namespace tvem
