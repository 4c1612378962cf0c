#ifndef TVEM_TESTS_HELPERS_HPP
#define TVEM_TESTS_HELPERS_HPP

#include <memory>
#include <set>
#include <vector>

#include "tvem/models/bsc.hpp"
#include "tvem/models/gmm.hpp"
#include "tvem/models/poisson_mix.hpp"
#include "tvem/truncated.hpp"

namespace tvem::testutil {

inline std::unique_ptr<GmmModel> random_gmm(int C, int D, Rng& rng) {
  GmmParams p;
  p.pi.resize(C);
  for (int c = 0; c < C; ++c) p.pi[c] = 0.2 + rng.uniform();
  p.pi /= p.pi.sum();
  p.mu.resize(C, D);
  p.sigma2.resize(C, D);
  for (int c = 0; c < C; ++c)
    for (int d = 0; d < D; ++d) {
      p.mu(c, d) = 4.0 * rng.normal();
      p.sigma2(c, d) = rng.uniform(0.5, 2.0);
    }
  return std::make_unique<GmmModel>(std::move(p));
}

inline std::unique_ptr<PoissonMixModel> random_poisson(int C, int D, Rng& rng) {
  PoissonMixParams p;
  p.pi.resize(C);
  for (int c = 0; c < C; ++c) p.pi[c] = 0.2 + rng.uniform();
  p.pi /= p.pi.sum();
  p.lambda.resize(C, D);
  for (int c = 0; c < C; ++c)
    for (int d = 0; d < D; ++d) p.lambda(c, d) = rng.uniform(0.5, 10.0);
  return std::make_unique<PoissonMixModel>(std::move(p));
}

inline std::unique_ptr<BscModel> random_bsc(int H, int D, Rng& rng) {
  BscParams p;
  p.W.resize(D, H);
  for (int d = 0; d < D; ++d)
    for (int h = 0; h < H; ++h) p.W(d, h) = rng.normal();
  p.pi = rng.uniform(0.1, 0.6);
  p.sigma2 = rng.uniform(0.2, 1.5);
  return std::make_unique<BscModel>(std::move(p));
}

// One of the three models, cycled by index, at matching toy scale.
inline std::unique_ptr<GenerativeModel> random_model(int which, Rng& rng) {
  switch (which % 3) {
    case 0: return random_gmm(2 + int(rng.below(4)), 1 + int(rng.below(3)), rng);
    case 1:
      return random_poisson(2 + int(rng.below(4)), 1 + int(rng.below(3)), rng);
    default: return random_bsc(2 + int(rng.below(4)), 2 + int(rng.below(4)), rng);
  }
}

inline DataSet sample_dataset(const GenerativeModel& model, int N, Rng& rng) {
  Eigen::MatrixXd y(N, model.data_dim());
  for (int i = 0; i < N; ++i)
    y.row(i) = model.sample_observation(model.sample_state(rng), rng);
  return DataSet(std::move(y));
}

inline VariationalStateSet random_set(const StateSpace& space, int S,
                                      Rng& rng) {
  const std::uint64_t card = space.cardinality();
  std::set<LatentState> states;
  while (int(states.size()) < S) states.insert(LatentState{rng.below(card)});
  return VariationalStateSet(
      std::vector<LatentState>(states.begin(), states.end()), S, space);
}

inline VariationalCollection random_collection(const GenerativeModel& model,
                                               int N, int S, Rng& rng) {
  VariationalCollection K;
  for (int i = 0; i < N; ++i) K.push_back(random_set(model.space(), S, rng));
  return K;
}

// Small multiplicative jitter on every parameter; stays in the valid domain.
inline std::unique_ptr<GenerativeModel> perturb_model(
    const GenerativeModel& model, double scale, Rng& rng) {
  auto jitter = [&](double v) { return v * (1.0 + scale * rng.normal()); };
  if (auto* g = dynamic_cast<const GmmModel*>(&model)) {
    GmmParams p = g->params();
    for (int c = 0; c < p.pi.size(); ++c)
      p.pi[c] = std::max(1e-6, jitter(p.pi[c]));
    p.pi /= p.pi.sum();
    for (int c = 0; c < p.mu.rows(); ++c)
      for (int d = 0; d < p.mu.cols(); ++d) {
        p.mu(c, d) = p.mu(c, d) + scale * rng.normal();
        p.sigma2(c, d) = std::max(GmmModel::kVarFloor, jitter(p.sigma2(c, d)));
      }
    return std::make_unique<GmmModel>(std::move(p));
  }
  if (auto* pm = dynamic_cast<const PoissonMixModel*>(&model)) {
    PoissonMixParams p = pm->params();
    for (int c = 0; c < p.pi.size(); ++c)
      p.pi[c] = std::max(1e-6, jitter(p.pi[c]));
    p.pi /= p.pi.sum();
    for (int c = 0; c < p.lambda.rows(); ++c)
      for (int d = 0; d < p.lambda.cols(); ++d)
        p.lambda(c, d) =
            std::max(PoissonMixModel::kRateFloor, jitter(p.lambda(c, d)));
    return std::make_unique<PoissonMixModel>(std::move(p));
  }
  auto* b = dynamic_cast<const BscModel*>(&model);
  BscParams p = b->params();
  for (int d = 0; d < p.W.rows(); ++d)
    for (int h = 0; h < p.W.cols(); ++h)
      p.W(d, h) = p.W(d, h) + scale * rng.normal();
  p.pi = std::min(1.0 - 1e-4, std::max(1e-4, jitter(p.pi)));
  p.sigma2 = std::max(BscModel::kVarFloor, jitter(p.sigma2));
  return std::make_unique<BscModel>(std::move(p));
}

}  // namespace tvem::testutil

#endif
