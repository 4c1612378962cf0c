#ifndef TVEM_ESTEP_HPP
#define TVEM_ESTEP_HPP

#include <vector>

#include "tvem/truncated.hpp"

namespace tvem {

// Latent states proposed for one datapoint; duplicates with the current set
// are filtered inside the merge operations.
using CandidatePool = std::vector<LatentState>;

struct RelevantLatents {
  std::vector<int> indices;  // 0-based, distinct, |indices| = H'
};

struct ReplaceResult {
  bool improved = false;
};

// Single-replacement criterion: the candidate displaces the minimum-joint
// member iff its joint is strictly larger, which strictly increases F.
ReplaceResult replace_if_better(VariationalStateSet& set, LatentState candidate,
                                Eigen::Ref<const Eigen::VectorXd> y,
                                const GenerativeModel& model);

// Keeps the S distinct states with largest log-joints among set + pool,
// ties broken toward the canonically smaller state. Returns the number of
// states that changed.
int merge_top_s(VariationalStateSet& set, const CandidatePool& pool,
                Eigen::Ref<const Eigen::VectorXd> y,
                const GenerativeModel& model);

CandidatePool suggest_blind(const StateSpace& space, int count, Rng& rng);

// Binary spaces only: members of the set with `flips` distinct bits toggled.
CandidatePool suggest_perturb(const VariationalStateSet& set,
                              const StateSpace& space, int flips, int count,
                              Rng& rng);

CandidatePool suggest_prior(const GenerativeModel& model, int count, Rng& rng);

// Top-H' latents by the model's per-latent score, ties toward smaller index.
RelevantLatents select_relevant(Eigen::Ref<const Eigen::VectorXd> y,
                                const GenerativeModel& model, int h_prime);

// All binary states supported on I with at most gamma active units.
CandidatePool construct_sparse(const RelevantLatents& I, int gamma, int H,
                               std::uint64_t pool_cap = 1u << 20);

// full E-step for mixtures: per datapoint the C' clusters with the
// largest joints, ties toward the smaller index.
VariationalCollection mixture_full_estep(const DataSet& data,
                                         const GenerativeModel& model,
                                         int c_prime);

}  // namespace tvem

#endif
