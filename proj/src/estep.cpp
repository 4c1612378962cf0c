#include "tvem/estep.hpp"

#include <algorithm>
#include <numeric>

namespace tvem {

namespace {

// descending joint, ascending state on ties
struct ScoredState {
  LatentState state;
  double log_joint;
  bool operator<(const ScoredState& o) const {
    if (log_joint != o.log_joint) return log_joint > o.log_joint;
    return state < o.state;
  }
};

}  // namespace

ReplaceResult replace_if_better(VariationalStateSet& set, LatentState candidate,
                                Eigen::Ref<const Eigen::VectorXd> y,
                                const GenerativeModel& model) {
  if (!model.space().contains(candidate))
    fail(ErrorCode::InvalidInput, "candidate outside the state space");
  if (set.contains(candidate)) return {false};

  const std::vector<double> lj = set_log_joints(set, y, model);
  size_t worst = 0;
  for (size_t i = 1; i < lj.size(); ++i)
    if (lj[i] <= lj[worst]) worst = i;  // evict the canonically largest minimum
  const double cand_lj = model.log_joint(candidate, y);
  if (!(cand_lj > lj[worst])) return {false};

  std::vector<LatentState> states = set.states();
  states[worst] = candidate;
  set.assign(std::move(states), model.space());
  return {true};
}

int merge_top_s(VariationalStateSet& set, const CandidatePool& pool,
                Eigen::Ref<const Eigen::VectorXd> y,
                const GenerativeModel& model) {
  if (pool.empty()) fail(ErrorCode::InvalidInput, "empty candidate pool");
  std::vector<ScoredState> scored;
  scored.reserve(set.size() + pool.size());
  const std::vector<double> lj = set_log_joints(set, y, model);
  for (int i = 0; i < set.size(); ++i)
    scored.push_back({set.states()[size_t(i)], lj[size_t(i)]});
  for (LatentState s : pool) {
    if (!model.space().contains(s))
      fail(ErrorCode::InvalidInput, "pool state outside the state space");
    if (set.contains(s)) continue;
    const double v = model.log_joint(s, y);
    if (v == kNegInf) continue;  // zero-mass candidates never displace
    scored.push_back({s, v});
  }
  std::sort(scored.begin(), scored.end());
  scored.erase(std::unique(scored.begin(), scored.end(),
                           [](const ScoredState& a, const ScoredState& b) {
                             return a.state == b.state;
                           }),
               scored.end());
  const size_t keep = std::min<size_t>(size_t(set.capacity()), scored.size());

  std::vector<LatentState> result;
  result.reserve(keep);
  for (size_t i = 0; i < keep; ++i) result.push_back(scored[i].state);
  int changed = 0;
  for (LatentState s : result)
    if (!set.contains(s)) ++changed;
  set.assign(std::move(result), model.space());
  return changed;
}

CandidatePool suggest_blind(const StateSpace& space, int count, Rng& rng) {
  if (count < 1) fail(ErrorCode::InvalidInput, "candidate count must be >= 1");
  CandidatePool pool;
  pool.reserve(size_t(count));
  const std::uint64_t card = space.cardinality();
  for (int i = 0; i < count; ++i)
    pool.push_back(LatentState{rng.below(card)});
  return pool;
}

CandidatePool suggest_perturb(const VariationalStateSet& set,
                              const StateSpace& space, int flips, int count,
                              Rng& rng) {
  if (space.kind != SpaceKind::Binary)
    fail(ErrorCode::UnsupportedSpace,
         "perturbation suggestions are defined for binary spaces only");
  const int H = space.size;
  if (flips < 1 || flips > H)
    fail(ErrorCode::InvalidInput, "flips must satisfy 1 <= flips <= H");
  if (count < 1) fail(ErrorCode::InvalidInput, "candidate count must be >= 1");

  std::vector<int> positions(static_cast<size_t>(H));
  std::iota(positions.begin(), positions.end(), 0);
  CandidatePool pool;
  pool.reserve(size_t(count));
  for (int i = 0; i < count; ++i) {
    LatentState s = set.states()[rng.below(std::uint64_t(set.size()))];
    // partial Fisher-Yates: first `flips` entries are distinct positions
    for (int k = 0; k < flips; ++k)
      std::swap(positions[size_t(k)],
                positions[size_t(k) + size_t(rng.below(std::uint64_t(H - k)))]);
    for (int k = 0; k < flips; ++k)
      s.code ^= std::uint64_t{1} << (H - 1 - positions[size_t(k)]);
    pool.push_back(s);
  }
  return pool;
}

CandidatePool suggest_prior(const GenerativeModel& model, int count, Rng& rng) {
  if (count < 1) fail(ErrorCode::InvalidInput, "candidate count must be >= 1");
  CandidatePool pool;
  pool.reserve(size_t(count));
  for (int i = 0; i < count; ++i) pool.push_back(model.sample_state(rng));
  return pool;
}

RelevantLatents select_relevant(Eigen::Ref<const Eigen::VectorXd> y,
                                const GenerativeModel& model, int h_prime) {
  if (model.space().kind != SpaceKind::Binary)
    fail(ErrorCode::UnsupportedSpace, "relevance selection needs a binary model");
  const int H = model.space().size;
  if (h_prime < 1 || h_prime > H)
    fail(ErrorCode::InvalidInput, "H' must satisfy 1 <= H' <= H");
  const Eigen::VectorXd scores = model.latent_scores(y);
  std::vector<int> order(static_cast<size_t>(H));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  order.resize(size_t(h_prime));
  std::sort(order.begin(), order.end());
  return RelevantLatents{std::move(order)};
}

CandidatePool construct_sparse(const RelevantLatents& I, int gamma, int H,
                               std::uint64_t pool_cap) {
  const int hp = int(I.indices.size());
  if (gamma < 1 || gamma > hp)
    fail(ErrorCode::InvalidInput, "gamma must satisfy 1 <= gamma <= H'");
  for (int idx : I.indices)
    if (idx < 0 || idx >= H)
      fail(ErrorCode::InvalidInput, "relevant index out of range");

  std::uint64_t size = 0;
  double binom = 1.0;
  for (int k = 0; k <= gamma; ++k) {
    size += std::uint64_t(binom + 0.5);
    binom = binom * (hp - k) / (k + 1);
    if (size > pool_cap)
      fail(ErrorCode::PoolTooLarge, "sparse construction pool exceeds cap");
  }

  CandidatePool pool;
  pool.reserve(size);
  // enumerate subsets of I by popcount filter over the 2^H' sub-lattice
  const std::uint64_t limit = std::uint64_t{1} << hp;
  for (std::uint64_t mask = 0; mask < limit; ++mask) {
    if (std::popcount(mask) > gamma) continue;
    std::uint64_t code = 0;
    for (int k = 0; k < hp; ++k)
      if ((mask >> k) & 1u)
        code |= std::uint64_t{1} << (H - 1 - I.indices[size_t(k)]);
    pool.push_back(LatentState{code});
  }
  return pool;
}

VariationalCollection mixture_full_estep(const DataSet& data,
                                         const GenerativeModel& model,
                                         int c_prime) {
  if (model.space().kind != SpaceKind::Categorical)
    fail(ErrorCode::UnsupportedSpace, "full mixture E-step needs a categorical model");
  const int C = model.space().size;
  if (c_prime < 1 || c_prime > C)
    fail(ErrorCode::InvalidInput, "C' must satisfy 1 <= C' <= C");

  VariationalCollection K;
  for (int i = 0; i < data.n(); ++i) {
    std::vector<ScoredState> scored;
    scored.reserve(size_t(C));
    for (int c = 0; c < C; ++c) {
      const LatentState s{std::uint64_t(c)};
      scored.push_back({s, model.log_joint(s, data.point(i))});
    }
    std::vector<LatentState> states;
    states.reserve(size_t(c_prime));
    std::partial_sort(scored.begin(), scored.begin() + c_prime, scored.end());
    for (int j = 0; j < c_prime; ++j) states.push_back(scored[size_t(j)].state);
    K.push_back(VariationalStateSet(std::move(states), c_prime, model.space()));
  }
  return K;
}

}  // namespace tvem
