#include "tvem/trainer.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <thread>

#include "tvem/models/bsc.hpp"
#include "tvem/models/gmm.hpp"
#include "tvem/models/poisson_mix.hpp"

namespace tvem {

namespace {

// deterministic chunked parallel-for; results only touch index-owned state
void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads == 0) threads = int(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors{size_t(threads)};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += threads) body(i);
      } catch (...) {
        errors[size_t(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<int> distinct_points(const DataSet& data, int k, Rng& rng) {
  if (data.n() < k)
    fail(ErrorCode::InsufficientData,
         "need at least as many datapoints as components");
  std::vector<int> idx;
  std::set<int> used;
  while (int(idx.size()) < k) {
    const int i = int(rng.below(std::uint64_t(data.n())));
    if (used.insert(i).second) idx.push_back(i);
  }
  return idx;
}

}  // namespace

std::unique_ptr<GenerativeModel> init_params(ModelKind kind, int components,
                                             const DataSet& data, Rng& rng) {
  const int D = data.dim();
  const Eigen::RowVectorXd mean = data.y.colwise().mean();
  const Eigen::RowVectorXd var =
      ((data.y.rowwise() - mean).array().square().colwise().sum() /
       std::max(1, data.n() - 1))
          .matrix();

  switch (kind) {
    case ModelKind::Gmm: {
      const auto idx = distinct_points(data, components, rng);
      GmmParams p;
      p.pi = Eigen::VectorXd::Constant(components, 1.0 / components);
      p.mu.resize(components, D);
      p.sigma2.resize(components, D);
      for (int c = 0; c < components; ++c) {
        p.mu.row(c) = data.y.row(idx[size_t(c)]);
        p.sigma2.row(c) = var.cwiseMax(GmmModel::kVarFloor);
      }
      return std::make_unique<GmmModel>(std::move(p));
    }
    case ModelKind::Poisson: {
      const auto idx = distinct_points(data, components, rng);
      PoissonMixParams p;
      p.pi = Eigen::VectorXd::Constant(components, 1.0 / components);
      p.lambda.resize(components, D);
      for (int c = 0; c < components; ++c)
        p.lambda.row(c) =
            data.y.row(idx[size_t(c)]).cwiseMax(PoissonMixModel::kRateFloor);
      return std::make_unique<PoissonMixModel>(std::move(p));
    }
    case ModelKind::Bsc: {
      const int H = components;
      const auto idx = distinct_points(data, std::min(H, data.n()), rng);
      double norm_sum = 0.0;
      for (int i = 0; i < data.n(); ++i) norm_sum += data.y.row(i).norm();
      const double scale = norm_sum / data.n();
      BscParams p;
      p.W.resize(D, H);
      for (int h = 0; h < H; ++h) {
        const Eigen::VectorXd y = data.y.row(idx[size_t(h % idx.size())]);
        const double n = y.norm();
        p.W.col(h) = n > 0.0 ? Eigen::VectorXd(scale * y / n) : y;
      }
      p.pi = 1.0 / H;
      p.sigma2 = std::max(var.mean(), BscModel::kVarFloor);
      return std::make_unique<BscModel>(std::move(p));
    }
  }
  fail(ErrorCode::InvalidInput, "unknown model kind");
}

VariationalCollection Trainer::init_collection(const GenerativeModel& model,
                                               const DataSet& data, int S,
                                               std::uint64_t seed) {
  const StateSpace space = model.space();
  if (space.kind == SpaceKind::Categorical)
    return mixture_full_estep(data, model, std::min(S, space.size));

  // full space when it fits inside the capacity
  if (!space.huge() && space.cardinality() <= std::uint64_t(S)) {
    VariationalCollection K;
    auto omega = enumerate_states(space, enumeration_cap());
    for (int i = 0; i < data.n(); ++i)
      K.push_back(VariationalStateSet(omega, S, space));
    return K;
  }

  VariationalCollection K;
  for (int i = 0; i < data.n(); ++i) {
    Rng rng = Rng::stream(seed, 0xC011EC7, std::uint64_t(i));
    std::set<LatentState> states;
    for (int t = 0; t < 16 * S && int(states.size()) < S; ++t)
      states.insert(model.sample_state(rng));
    const std::uint64_t card = space.huge() ? UINT64_MAX : space.cardinality();
    for (int t = 0; t < 64 * S && int(states.size()) < S; ++t)
      states.insert(LatentState{rng.below(card)});
    for (std::uint64_t c = 0; int(states.size()) < S; ++c)
      states.insert(LatentState{c});  // deterministic fallback
    K.push_back(VariationalStateSet(
        std::vector<LatentState>(states.begin(), states.end()), S, space));
  }
  return K;
}

Trainer::Trainer(std::unique_ptr<GenerativeModel> model, const DataSet& data,
                 TrainerConfig cfg)
    : model_(std::move(model)), data_(data), cfg_(cfg) {
  K_ = init_collection(*model_, data_, cfg_.S, cfg_.seed);
}

Trainer::Trainer(std::unique_ptr<GenerativeModel> model, const DataSet& data,
                 TrainerConfig cfg, VariationalCollection K,
                 int start_iteration, std::vector<IterationRecord> trace)
    : model_(std::move(model)),
      data_(data),
      cfg_(cfg),
      K_(std::move(K)),
      iteration_(start_iteration),
      trace_(std::move(trace)) {
  if (K_.n() != data_.n())
    fail(ErrorCode::InvalidInput, "collection does not match dataset");
}

double Trainer::free_energy() const {
  return simplified_free_energy(K_, data_, *model_);
}

CandidatePool Trainer::build_pool(int n, int round, Rng& rng) const {
  const StateSpace space = model_->space();
  const StrategyParams& sp = cfg_.sp;
  switch (cfg_.strategy) {
    case EStepStrategy::Full:
    case EStepStrategy::MixtureFull:
      return omega_;
    case EStepStrategy::Blind:
      return suggest_blind(space, sp.candidates, rng);
    case EStepStrategy::Perturb:
      return suggest_perturb(K_.set(n), space, sp.flips, sp.candidates, rng);
    case EStepStrategy::PriorSample:
      return suggest_prior(*model_, sp.candidates, rng);
    case EStepStrategy::SparseConstruct: {
      const int hp = sp.h_prime > 0 ? sp.h_prime : space.size;
      const RelevantLatents I =
          select_relevant(data_.point(n), *model_, hp);
      return construct_sparse(I, sp.gamma, space.size);
    }
    case EStepStrategy::Hybrid: {
      CandidatePool pool = suggest_prior(*model_, sp.candidates, rng);
      if (space.kind == SpaceKind::Binary) {
        CandidatePool p2 =
            suggest_perturb(K_.set(n), space, sp.flips, sp.candidates, rng);
        pool.insert(pool.end(), p2.begin(), p2.end());
      }
      CandidatePool p3 = suggest_blind(space, sp.candidates, rng);
      pool.insert(pool.end(), p3.begin(), p3.end());
      return pool;
    }
  }
  fail(ErrorCode::InvalidInput, "unknown E-step strategy");
  (void)round;
}

long Trainer::e_step() {
  const StateSpace space = model_->space();
  const bool wants_full = cfg_.strategy == EStepStrategy::Full ||
                          cfg_.strategy == EStepStrategy::MixtureFull;
  if (cfg_.strategy == EStepStrategy::MixtureFull &&
      space.kind != SpaceKind::Categorical)
    fail(ErrorCode::UnsupportedSpace,
         "mixture-full strategy needs a categorical model");
  if (wants_full && omega_.empty())
    omega_ = enumerate_states(space, enumeration_cap());

  std::vector<long> replaced(size_t(data_.n()), 0);
  const int rounds = wants_full ? 1 : cfg_.inner_rounds;
  parallel_for(data_.n(), cfg_.threads, [&](int n) {
    for (int round = 0; round < rounds; ++round) {
      Rng rng = Rng::stream(cfg_.seed,
                            std::uint64_t(iteration_) * 1000003 + round + 1,
                            std::uint64_t(n));
      const CandidatePool pool = build_pool(n, round, rng);
      replaced[size_t(n)] +=
          merge_top_s(K_.set(n), pool, data_.point(n), *model_);
    }
  });
  long total = 0;
  for (long r : replaced) total += r;
  return total;
}

void Trainer::check_monotone(double before, double after, const char* where) {
  const double eps = 1e-9 * (1.0 + std::abs(before));
  if (after >= before - eps) return;
  const std::string msg =
      std::string("free energy decreased in ") + where + " at iteration " +
      std::to_string(iteration_) + ": " + std::to_string(before) + " -> " +
      std::to_string(after);
  if (cfg_.monotone == MonotoneMode::Assert)
    fail(ErrorCode::MonotonicityViolation, msg);
}

IterationRecord Trainer::iterate() {
  const auto t0 = std::chrono::steady_clock::now();
  IterationRecord rec;
  rec.iter = iteration_;

  const double f_before = free_energy();
  rec.replacements = e_step();
  rec.f_after_e = free_energy();
  check_monotone(f_before, rec.f_after_e, "E-step");

  model_->m_step(data_, K_);  // includes the Theta_old = Theta_new reset
  rec.f_after_m = free_energy();
  check_monotone(rec.f_after_e, rec.f_after_m, "M-step");

  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  ++iteration_;
  trace_.push_back(rec);
  if (on_iteration) on_iteration(*this);
  return rec;
}

TrainResult Trainer::run() {
  int stable = 0;
  double prev_f = trace_.empty() ? free_energy() : trace_.back().f_after_m;
  while (iteration_ < cfg_.max_iters) {
    const IterationRecord rec = iterate();
    const double df = std::abs(rec.f_after_m - prev_f);
    stable = df <= cfg_.eps_rel * (1.0 + std::abs(rec.f_after_m)) ? stable + 1
                                                                  : 0;
    prev_f = rec.f_after_m;
    if (stable >= 3) return {true};
  }
  return {false};
}

}  // namespace tvem
