#ifndef TVEM_ORACLE_HPP
#define TVEM_ORACLE_HPP

#include <memory>
#include <utility>
#include <vector>

#include "tvem/truncated.hpp"

namespace tvem::oracle {

// Full weight table over the enumerated state space for one datapoint.
struct ExactPosterior {
  std::vector<double> weights;  // aligned with enumerate_states order
};

double log_likelihood(const DataSet& data, const GenerativeModel& model);

ExactPosterior exact_posterior(Eigen::Ref<const Eigen::VectorXd> y,
                               const GenerativeModel& model);

// sum q log(q/p); +inf when q puts mass where p has none.
double kl_divergence(std::span<const double> q, std::span<const double> p);

// One exact-EM step: full posteriors as weights, closed-form updates coded
// directly against the enumeration tables.
std::unique_ptr<GenerativeModel> exact_em_step(const DataSet& data,
                                               const GenerativeModel& model);

// Exhaustive search over all size-S subsets of the state space per
// datapoint; ties resolved toward the lexicographically smallest subset.
VariationalCollection brute_force_best_sets(const DataSet& data,
                                            const GenerativeModel& model,
                                            int S,
                                            std::uint64_t budget = 20000000);

struct HardEmResult {
  std::vector<LatentState> states;
  std::unique_ptr<GenerativeModel> model;
};

// Full hard E-step (posterior argmax by enumeration) plus the hard M-step.
HardEmResult hard_em_step(const DataSet& data, const GenerativeModel& model);

// Partial hard E-step per the memorized-state condition: the candidate is
// accepted only when its posterior is at least that of the previous state.
HardEmResult hard_em_partial_step(const DataSet& data,
                                  const GenerativeModel& model,
                                  const std::vector<LatentState>& states_old,
                                  const std::vector<LatentState>& candidates);

double hard_em_free_energy(const DataSet& data, const GenerativeModel& model,
                           const std::vector<LatentState>& states);

// Boltzmann reweighting of the posterior; T = 1 recovers the exact
// posterior, T -> 0 concentrates on the MAP state. Exponent is
// log-joint / T, i.e. the sharpening direction the zero-temperature limit
// of hard EM requires.
ExactPosterior annealed_posterior(Eigen::Ref<const Eigen::VectorXd> y,
                                  const GenerativeModel& model, double T);

}  // namespace tvem::oracle

#endif
