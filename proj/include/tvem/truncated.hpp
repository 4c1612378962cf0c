#ifndef TVEM_TRUNCATED_HPP
#define TVEM_TRUNCATED_HPP

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "tvem/model.hpp"
#include "tvem/state.hpp"

namespace tvem {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum exp(v_i)) with the max-shift pattern; -inf entries are exact zeros.
double log_sum_exp(std::span<const double> v);

// Per-datapoint set K^(n) of distinct latent states, kept in canonical order.
class VariationalStateSet {
public:
  VariationalStateSet(std::vector<LatentState> states, int capacity,
                      const StateSpace& space);

  const std::vector<LatentState>& states() const { return states_; }
  int size() const { return int(states_.size()); }
  int capacity() const { return capacity_; }
  bool contains(LatentState s) const {
    return std::binary_search(states_.begin(), states_.end(), s);
  }

  // Replaces the whole membership; keeps capacity, re-sorts, checks distinctness.
  void assign(std::vector<LatentState> states, const StateSpace& space);

private:
  std::vector<LatentState> states_;
  int capacity_;
};

class VariationalCollection {
public:
  VariationalCollection() = default;
  explicit VariationalCollection(std::vector<VariationalStateSet> sets)
      : sets_(std::move(sets)) {}

  int n() const { return int(sets_.size()); }
  const VariationalStateSet& set(int i) const { return sets_[size_t(i)]; }
  VariationalStateSet& set(int i) { return sets_[size_t(i)]; }
  void push_back(VariationalStateSet s) { sets_.push_back(std::move(s)); }

private:
  std::vector<VariationalStateSet> sets_;
};

// Normalized posterior weights over one K^(n); ordering matches the set.
struct TruncatedWeights {
  std::vector<LatentState> states;
  std::vector<double> weights;
};

std::vector<double> set_log_joints(const VariationalStateSet& set,
                                   Eigen::Ref<const Eigen::VectorXd> y,
                                   const GenerativeModel& model);

TruncatedWeights truncated_weights(const VariationalStateSet& set,
                                   Eigen::Ref<const Eigen::VectorXd> y,
                                   const GenerativeModel& model);

// Weights from precomputed log-joints aligned with the set's state order.
std::vector<double> normalize_log_weights(std::span<const double> log_joints);

template <typename G>
auto truncated_expectation(const G& g, const VariationalStateSet& set,
                           Eigen::Ref<const Eigen::VectorXd> y,
                           const GenerativeModel& model) {
  const TruncatedWeights w = truncated_weights(set, y, model);
  auto acc = w.weights[0] * g(w.states[0]);
  for (size_t i = 1; i < w.states.size(); ++i)
    acc = acc + w.weights[i] * g(w.states[i]);
  return acc;
}

// F(K, Theta) = sum_n log sum_{s in K^(n)} p(s, y^(n) | Theta).  -inf is a
// legal return when some set carries zero mass.
double simplified_free_energy(const VariationalCollection& K,
                              const DataSet& data,
                              const GenerativeModel& model);

// F(K, Theta_old, Theta): expected new log-joint under the Theta_old
// truncated posteriors plus their entropy.
double general_free_energy(const VariationalCollection& K,
                           const GenerativeModel& model_old,
                           const GenerativeModel& model_new,
                           const DataSet& data);

// F(q, Theta) for explicit per-datapoint weight tables over the enumerated
// state space (hard zeros allowed); reference functional for the oracle.
double generalized_free_energy(const std::vector<std::vector<double>>& q,
                               const DataSet& data,
                               const GenerativeModel& model);

// Shannon entropy with the 0*log 0 = 0 convention.
double entropy(std::span<const double> weights);

}  // namespace tvem

#endif
