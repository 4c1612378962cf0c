#ifndef TVEM_TRAINER_HPP
#define TVEM_TRAINER_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tvem/estep.hpp"
#include "tvem/truncated.hpp"

namespace tvem {

enum class ModelKind { Gmm, Poisson, Bsc };

enum class EStepStrategy {
  Full,            // candidate pool = the whole state space (desk scale)
  MixtureFull,     // exact top-C' selection, categorical models
  Blind,
  Perturb,
  PriorSample,
  SparseConstruct,
  Hybrid,          // prior + perturb + blind pools combined
};

enum class MonotoneMode { Assert, Warn };

struct StrategyParams {
  int candidates = 10;  // pool size per datapoint for sampled strategies
  int flips = 1;
  int h_prime = 0;  // 0 = use H
  int gamma = 1;
};

struct TrainerConfig {
  int S = 1;
  EStepStrategy strategy = EStepStrategy::Full;
  StrategyParams sp;
  int inner_rounds = 1;
  int max_iters = 100;
  double eps_rel = 1e-6;
  std::uint64_t seed = 0;
  MonotoneMode monotone = MonotoneMode::Assert;
  int threads = 1;  // 0 = hardware concurrency
};

struct IterationRecord {
  int iter = 0;
  double f_after_e = 0.0;
  double f_after_m = 0.0;
  double wall_ms = 0.0;
  long replacements = 0;
};

struct TrainResult {
  bool converged = false;
};

// Random model initialization from the data: mixture means/rates at distinct
// random datapoints, BSC dictionary from random datapoint directions.
std::unique_ptr<GenerativeModel> init_params(ModelKind kind, int components,
                                             const DataSet& data, Rng& rng);

class Trainer {
public:
  // K_init empty -> default initialization (prior samples topped up with
  // blind ones; mixtures via one full E-step).
  Trainer(std::unique_ptr<GenerativeModel> model, const DataSet& data,
          TrainerConfig cfg);
  Trainer(std::unique_ptr<GenerativeModel> model, const DataSet& data,
          TrainerConfig cfg, VariationalCollection K, int start_iteration,
          std::vector<IterationRecord> trace);

  static VariationalCollection init_collection(const GenerativeModel& model,
                                               const DataSet& data, int S,
                                               std::uint64_t seed);

  // One full TV-EM iteration: E-step per strategy, M-step, Theta reset.
  IterationRecord iterate();

  // Iterates until |dF| <= eps_rel*(1+|F|) holds for 3 consecutive
  // iterations or max_iters is reached.
  TrainResult run();

  // E-step only, Theta frozen; returns the replacement count.
  long optimize_sets() { return e_step(); }

  const GenerativeModel& model() const { return *model_; }
  const VariationalCollection& collection() const { return K_; }
  const std::vector<IterationRecord>& trace() const { return trace_; }
  const TrainerConfig& config() const { return cfg_; }
  int iteration() const { return iteration_; }
  double free_energy() const;

  // invoked after every iteration; used for checkpointing
  std::function<void(const Trainer&)> on_iteration;

private:
  long e_step();
  CandidatePool build_pool(int n, int round, Rng& rng) const;
  void check_monotone(double before, double after, const char* where);

  std::unique_ptr<GenerativeModel> model_;
  const DataSet& data_;
  TrainerConfig cfg_;
  VariationalCollection K_;
  int iteration_ = 0;
  std::vector<IterationRecord> trace_;
  std::vector<LatentState> omega_;  // cached for the Full strategy
};

}  // namespace tvem

#endif
