#include "tvem/runner.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <vector>

#include "tvem/models/bsc.hpp"
#include "tvem/models/gmm.hpp"
#include "tvem/models/poisson_mix.hpp"
#include "tvem/oracle.hpp"

namespace tvem::runner {

namespace fs = std::filesystem;

namespace {

constexpr const char* kArtifactVersion = "1.0.0";

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T field(const json& doc, const std::string& key) {
  if (!doc.contains(key)) fail(ErrorCode::ConfigError, "missing field: " + key);
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, "bad field '" + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const json& doc, const std::string& key, T fallback) {
  return doc.contains(key) ? field<T>(doc, key) : fallback;
}

struct ModelSpec {
  ModelKind kind;
  int components;  // C for mixtures, H for BSC
};

ModelSpec parse_model_spec(const json& doc) {
  if (!doc.contains("model") || !doc.at("model").is_object())
    fail(ErrorCode::ConfigError, "missing 'model' object in config");
  const json& m = doc.at("model");
  ModelSpec spec;
  spec.kind = model_kind_from_name(field<std::string>(m, "kind"));
  const char* key = spec.kind == ModelKind::Bsc ? "H" : "C";
  if (m.contains(key))
    spec.components = field<int>(m, key);
  else
    spec.components = field<int>(m, "components");
  if (spec.components < 1)
    fail(ErrorCode::ConfigError, "model needs at least one component");
  return spec;
}

bool oracle_feasible(const StateSpace& space) {
  return !space.huge() && space.cardinality() <= enumeration_cap();
}

void write_json_file(const std::string& path, const json& doc) {
  atomic_write(path, dump_json(doc));
}

std::string trace_to_csv(const std::vector<IterationRecord>& trace) {
  std::string out = "iter,F_after_E,F_after_M,wall_ms,replacements\n";
  for (const IterationRecord& r : trace) {
    out += std::to_string(r.iter) + "," + g17(r.f_after_e) + "," +
           g17(r.f_after_m) + "," + g17(r.wall_ms) + "," +
           std::to_string(r.replacements) + "\n";
  }
  return out;
}

// --- synthetic parameter draws for cmd_generate ---------------------------

std::unique_ptr<GenerativeModel> randomize_params(const json& spec, Rng& rng) {
  const auto kind = model_kind_from_name(field<std::string>(spec, "kind"));
  switch (kind) {
    case ModelKind::Gmm: {
      const int C = field<int>(spec, "C");
      const int D = field<int>(spec, "D");
      const double sigma2 = field_or<double>(spec, "sigma2", 1.0);
      const double sep = field_or<double>(spec, "separation", 5.0);
      if (C < 1 || D < 1) fail(ErrorCode::ConfigError, "C and D must be >= 1");
      const double gap = sep * std::sqrt(sigma2);
      const double box = gap * std::max(2.0, double(C));
      GmmParams p;
      p.pi = Eigen::VectorXd::Constant(C, 1.0 / C);
      p.mu.resize(C, D);
      p.sigma2 = Eigen::MatrixXd::Constant(C, D, sigma2);
      for (int c = 0; c < C; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
          Eigen::RowVectorXd m(D);
          for (int d = 0; d < D; ++d) m[d] = (2.0 * rng.uniform() - 1.0) * box;
          placed = true;
          for (int o = 0; o < c; ++o)
            if ((m - p.mu.row(o)).norm() < gap) { placed = false; break; }
          if (placed) p.mu.row(c) = m;
        }
        if (!placed)
          fail(ErrorCode::ConfigError,
               "cannot place well-separated means; lower separation or C");
      }
      return std::make_unique<GmmModel>(std::move(p));
    }
    case ModelKind::Poisson: {
      const int C = field<int>(spec, "C");
      const int D = field<int>(spec, "D");
      const double lo = field_or<double>(spec, "rate_low", 1.0);
      const double hi = field_or<double>(spec, "rate_high", 20.0);
      if (C < 1 || D < 1) fail(ErrorCode::ConfigError, "C and D must be >= 1");
      if (!(lo > 0.0) || !(hi >= lo))
        fail(ErrorCode::ConfigError, "need 0 < rate_low <= rate_high");
      PoissonMixParams p;
      p.pi = Eigen::VectorXd::Constant(C, 1.0 / C);
      p.lambda.resize(C, D);
      for (int c = 0; c < C; ++c)
        for (int d = 0; d < D; ++d)
          p.lambda(c, d) = lo + (hi - lo) * rng.uniform();
      return std::make_unique<PoissonMixModel>(std::move(p));
    }
    case ModelKind::Bsc: {
      const int H = field<int>(spec, "H");
      const int D = field<int>(spec, "D");
      if (H < 1 || D < 1) fail(ErrorCode::ConfigError, "H and D must be >= 1");
      BscParams p;
      p.pi = field_or<double>(spec, "pi", 0.2);
      p.sigma2 = field_or<double>(spec, "sigma2", 0.01);
      const double amp = field_or<double>(spec, "amplitude", 1.0);
      p.W.resize(D, H);
      for (int h = 0; h < H; ++h) {
        Eigen::VectorXd col(D);
        for (int d = 0; d < D; ++d) col[d] = rng.normal();
        const double n = col.norm();
        p.W.col(h) = amp * (n > 0.0 ? Eigen::VectorXd(col / n) : col);
      }
      return std::make_unique<BscModel>(std::move(p));
    }
  }
  fail(ErrorCode::ConfigError, "unknown model kind");
}

json manifest_json(const std::string& command, const json& config,
                   std::uint64_t seed,
                   const std::vector<std::pair<std::string, std::string>>& inputs,
                   const std::vector<std::string>& outputs) {
  json in = json::object();
  for (const auto& [name, digest] : inputs) in[name] = {{"sha256", digest}};
  return {{"artifact_version", kArtifactVersion},
          {"command", command},
          {"seed", seed},
          {"config", config},
          {"inputs", in},
          {"outputs", outputs}};
}

std::unique_ptr<GenerativeModel> initial_model(const ModelSpec& spec,
                                               const json& doc,
                                               const DataSet& data,
                                               std::uint64_t seed) {
  if (doc.contains("init_params"))
    return model_from_json(doc.at("init_params"));
  Rng rng = Rng::stream(seed, 0x1A17, 0);
  return init_params(spec.kind, spec.components, data, rng);
}

// same stopping rule the trainer uses so oracle baselines stop in lockstep
struct Convergence {
  double eps_rel;
  int stable = 0;
  bool first = true;
  double prev = 0.0;

  bool done(double f) {
    if (!first) {
      const double df = std::abs(f - prev);
      stable = df <= eps_rel * (1.0 + std::abs(f)) ? stable + 1 : 0;
    }
    first = false;
    prev = f;
    return stable >= 3;
  }
};

json recovery_metrics(const GenerativeModel& learned,
                      const GenerativeModel& truth) {
  json out = json::object();
  if (auto* g = dynamic_cast<const GmmModel*>(&learned)) {
    auto* gt = dynamic_cast<const GmmModel*>(&truth);
    if (gt)
      out["recovery_error"] =
          mixture_mean_recovery_error(g->params().mu, gt->params().mu);
  } else if (auto* p = dynamic_cast<const PoissonMixModel*>(&learned)) {
    auto* pt = dynamic_cast<const PoissonMixModel*>(&truth);
    if (pt)
      out["recovery_error"] =
          mixture_mean_recovery_error(p->params().lambda, pt->params().lambda);
  } else if (auto* b = dynamic_cast<const BscModel*>(&learned)) {
    auto* bt = dynamic_cast<const BscModel*>(&truth);
    if (bt)
      out["recovery_cosine"] =
          bsc_min_cosine_similarity(b->params().W, bt->params().W);
  }
  return out;
}

}  // namespace

double mixture_mean_recovery_error(const Eigen::MatrixXd& learned,
                                   const Eigen::MatrixXd& truth) {
  if (learned.rows() != truth.rows() || learned.cols() != truth.cols())
    fail(ErrorCode::InvalidInput, "recovery shapes differ");
  const int C = int(truth.rows());
  if (C > 10) fail(ErrorCode::InvalidInput, "too many components to match");
  std::vector<int> perm(static_cast<size_t>(C));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int c = 0; c < C; ++c)
      total += (learned.row(perm[size_t(c)]) - truth.row(c)).norm();
    best = std::min(best, total / C);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double bsc_min_cosine_similarity(const Eigen::MatrixXd& learned,
                                 const Eigen::MatrixXd& truth) {
  if (learned.rows() != truth.rows() || learned.cols() != truth.cols())
    fail(ErrorCode::InvalidInput, "recovery shapes differ");
  const int H = int(truth.cols());
  if (H > 10) fail(ErrorCode::InvalidInput, "too many columns to match");
  Eigen::MatrixXd cosab(H, H);  // |cos| absorbs the sign flip
  for (int a = 0; a < H; ++a)
    for (int b = 0; b < H; ++b) {
      const double den = learned.col(a).norm() * truth.col(b).norm();
      cosab(a, b) =
          den > 0.0 ? std::abs(learned.col(a).dot(truth.col(b))) / den : 0.0;
    }
  std::vector<int> perm(static_cast<size_t>(H));
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  do {
    double worst = 2.0;
    for (int b = 0; b < H; ++b)
      worst = std::min(worst, cosab(perm[size_t(b)], b));
    best = std::max(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

int cmd_generate(const std::string& config_text, const std::string& out_dir) {
  const json doc = parse_json(config_text, "generator config");
  const int N = field<int>(doc, "N");
  if (N < 1) fail(ErrorCode::ConfigError, "N must be >= 1");
  const std::uint64_t seed = field_or<std::uint64_t>(doc, "seed", 0);

  std::unique_ptr<GenerativeModel> model;
  if (doc.contains("params")) {
    model = model_from_json(doc.at("params"));
  } else if (doc.contains("randomize")) {
    Rng rng = Rng::stream(seed, 0x9E0, 1);
    model = randomize_params(doc.at("randomize"), rng);
  } else {
    fail(ErrorCode::ConfigError,
         "generator config needs 'params' or 'randomize'");
  }

  const int D = model->data_dim();
  Eigen::MatrixXd y(N, D);
  json states = json::array();
  for (int i = 0; i < N; ++i) {
    Rng rng = Rng::stream(seed, 0x5A3, std::uint64_t(i));
    const LatentState s = model->sample_state(rng);
    y.row(i) = model->sample_observation(s, rng);
    states.push_back(s.code);
  }

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_csv(DataSet(std::move(y)), (dir / "data.csv").string());
  json truth;
  truth["params"] = params_to_json(*model, seed);
  truth["states"] = std::move(states);
  truth["seed"] = seed;
  truth["N"] = N;
  write_json_file((dir / "ground_truth.json").string(), truth);
  return 0;
}

int cmd_train(const std::string& data_csv, const std::string& config_text,
              const std::string& out_dir) {
  const json doc = parse_json(config_text, "train config");
  const ModelSpec spec = parse_model_spec(doc);
  const TrainerConfig cfg = trainer_config_from_json(doc);
  const int checkpoint_every = field_or<int>(doc, "checkpoint_every", 0);
  const DataSet data = read_csv(data_csv);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const std::string params_path = (dir / "params.json").string();
  const std::string trace_path = (dir / "trace.csv").string();
  const std::string checkpoint_path = (dir / "checkpoint.json").string();

  std::vector<std::string> outputs = {params_path, trace_path};
  if (checkpoint_every > 0) outputs.push_back(checkpoint_path);
  write_json_file(
      (dir / "manifest.json").string(),
      manifest_json("train", doc, cfg.seed,
                    {{"data_csv", sha256_file(data_csv)},
                     {"config", sha256_bytes(config_text)}},
                    outputs));

  std::unique_ptr<Trainer> trainer;
  if (doc.contains("resume")) {
    const json ck = parse_json(read_file(field<std::string>(doc, "resume")),
                               "checkpoint");
    trainer = std::make_unique<Trainer>(trainer_from_checkpoint(ck, data));
  } else {
    trainer = std::make_unique<Trainer>(initial_model(spec, doc, data, cfg.seed),
                                        data, cfg);
  }
  if (checkpoint_every > 0) {
    trainer->on_iteration = [&](const Trainer& t) {
      if (t.iteration() % checkpoint_every == 0)
        write_json_file(checkpoint_path, checkpoint_to_json(t));
    };
  }

  TrainResult result;
  try {
    result = trainer->run();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MonotonicityViolation) {
      atomic_write(trace_path, trace_to_csv(trainer->trace()));
      write_json_file((dir / "diagnostic.json").string(),
                      {{"error", "monotonicity violation"},
                       {"what", e.what()},
                       {"iteration", trainer->iteration()},
                       {"params", params_to_json(trainer->model(), cfg.seed)}});
    }
    throw;
  }

  atomic_write(trace_path, trace_to_csv(trainer->trace()));
  write_json_file(params_path, params_to_json(trainer->model(), cfg.seed));
  return result.converged ? 0 : 3;
}

int cmd_compare(const std::string& data_csv, const std::string& config_text,
                const std::string& out_json) {
  const json doc = parse_json(config_text, "compare config");
  const ModelSpec spec = parse_model_spec(doc);
  TrainerConfig base = trainer_config_from_json(doc);
  const DataSet data = read_csv(data_csv);

  std::unique_ptr<GenerativeModel> truth;
  if (doc.contains("truth")) {
    const json t = parse_json(read_file(field<std::string>(doc, "truth")),
                              "ground truth");
    truth = model_from_json(t.contains("params") ? t.at("params") : t);
  }

  const auto init = [&] { return initial_model(spec, doc, data, base.seed); };
  const StateSpace space = init()->space();
  const bool feasible = oracle_feasible(space);

  std::vector<int> s_list;
  if (doc.contains("S_list")) {
    s_list = field<std::vector<int>>(doc, "S_list");
  } else if (feasible) {
    const int omega = int(space.cardinality());
    if (omega <= 16)
      for (int s = 1; s <= omega; ++s) s_list.push_back(s);
    else {
      for (int s = 1; s < omega; s *= 2) s_list.push_back(s);
      s_list.push_back(omega);
    }
  } else {
    s_list = {base.S};
  }

  json rows = json::array();
  for (int S : s_list) {
    if (S < 1) fail(ErrorCode::ConfigError, "S_list entries must be >= 1");
    TrainerConfig cfg = base;
    cfg.S = S;
    Trainer trainer(init(), data, cfg);
    const TrainResult res = trainer.run();
    json row;
    row["method"] = "tvem";
    row["S"] = S;
    const double f = trainer.free_energy();
    row["F"] = f;
    if (feasible) {
      const double L = oracle::log_likelihood(data, trainer.model());
      row["L"] = L;
      row["gap"] = L - f;
    } else {
      row["L"] = nullptr;
      row["gap"] = nullptr;
    }
    row["converged"] = res.converged;
    row["iterations"] = trainer.iteration();
    if (truth) row.update(recovery_metrics(trainer.model(), *truth));
    rows.push_back(std::move(row));
  }

  if (feasible) {
    // exact EM: F and L coincide at every step (full sets make the bound tight)
    auto model = init();
    Convergence conv{base.eps_rel};
    int iters = 0;
    double L = oracle::log_likelihood(data, *model);
    while (iters < base.max_iters && !conv.done(L)) {
      model = oracle::exact_em_step(data, *model);
      L = oracle::log_likelihood(data, *model);
      ++iters;
    }
    json row;
    row["method"] = "exact-em";
    row["S"] = nullptr;
    row["F"] = L;
    row["L"] = L;
    row["gap"] = 0.0;
    row["iterations"] = iters;
    if (truth) row.update(recovery_metrics(*model, *truth));
    rows.push_back(std::move(row));

    auto hard_model = init();
    std::vector<LatentState> states;
    Convergence hconv{base.eps_rel};
    int hiters = 0;
    double f_hard = kNegInf;
    while (hiters < base.max_iters) {
      oracle::HardEmResult step = oracle::hard_em_step(data, *hard_model);
      hard_model = std::move(step.model);
      states = std::move(step.states);
      f_hard = oracle::hard_em_free_energy(data, *hard_model, states);
      ++hiters;
      if (hconv.done(f_hard)) break;
    }
    json hrow;
    hrow["method"] = "hard-em";
    hrow["S"] = 1;
    hrow["F"] = f_hard;
    const double hl = oracle::log_likelihood(data, *hard_model);
    hrow["L"] = hl;
    hrow["gap"] = hl - f_hard;
    hrow["iterations"] = hiters;
    if (truth) hrow.update(recovery_metrics(*hard_model, *truth));
    rows.push_back(std::move(hrow));
  }

  json report;
  report["model"] = model_kind_name(spec.kind);
  report["oracle_feasible"] = feasible;
  report["rows"] = std::move(rows);
  fs::create_directories(fs::path(out_json).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(out_json).parent_path());
  write_json_file(out_json, report);
  return 0;
}

int cmd_eval(const std::string& data_csv, const std::string& params_text,
             const std::string& config_text, const std::string& out_json) {
  const DataSet data = read_csv(data_csv);
  auto model = model_from_json(parse_json(params_text, "params"));
  if (model->data_dim() != data.dim())
    fail(ErrorCode::InvalidInput, "params dimensionality does not match data");

  const StateSpace space = model->space();
  const bool feasible = oracle_feasible(space);
  const json doc = config_text.empty()
                       ? json::object()
                       : parse_json(config_text, "eval config");

  TrainerConfig cfg;
  cfg.S = field_or<int>(doc, "S",
                        feasible ? int(std::min<std::uint64_t>(
                                       space.cardinality(), 64))
                                 : 8);
  if (cfg.S < 1) fail(ErrorCode::ConfigError, "S must be >= 1");
  const std::string default_strategy =
      space.kind == SpaceKind::Categorical
          ? "full"
          : (feasible ? "full" : "hybrid");
  cfg.strategy = strategy_from_name(
      field_or<std::string>(doc, "strategy", default_strategy));
  if (doc.contains("strategy_params")) {
    const json& sp = doc.at("strategy_params");
    cfg.sp.candidates = field_or<int>(sp, "candidates", cfg.sp.candidates);
    cfg.sp.flips = field_or<int>(sp, "flips", cfg.sp.flips);
    cfg.sp.h_prime = field_or<int>(sp, "h_prime", cfg.sp.h_prime);
    cfg.sp.gamma = field_or<int>(sp, "gamma", cfg.sp.gamma);
  }
  cfg.inner_rounds = field_or<int>(doc, "inner_rounds", 4);
  cfg.seed = field_or<std::uint64_t>(doc, "seed", 0);
  cfg.threads = field_or<int>(doc, "threads", 1);
  cfg.monotone = MonotoneMode::Warn;

  Trainer trainer(model->clone(), data, cfg);
  double f = trainer.free_energy();
  for (int round = 0; round < 100; ++round) {
    trainer.optimize_sets();
    const double f2 = trainer.free_energy();
    const bool stable = std::abs(f2 - f) <= 1e-12 * (1.0 + std::abs(f2));
    f = f2;
    if (stable) break;
  }

  json metrics;
  metrics["F"] = f;
  metrics["S"] = cfg.S;
  if (feasible) {
    const double L = oracle::log_likelihood(data, *model);
    metrics["L"] = L;
    metrics["gap"] = L - f;
  } else {
    metrics["L"] = nullptr;
    metrics["gap"] = nullptr;
  }
  write_json_file(out_json, metrics);
  return 0;
}

}  // namespace tvem::runner
