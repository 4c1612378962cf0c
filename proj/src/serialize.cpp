#include "tvem/serialize.hpp"

#include "tvem/models/bsc.hpp"
#include "tvem/models/gmm.hpp"
#include "tvem/models/poisson_mix.hpp"

namespace tvem {

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& doc, const std::string& what) {
  if (!doc.is_array() || doc.empty() || !doc[0].is_array())
    fail(ErrorCode::ConfigError, "expected 2-d array for " + what);
  const int rows = int(doc.size());
  const int cols = int(doc[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (int(doc[size_t(i)].size()) != cols)
      fail(ErrorCode::ConfigError, "ragged array for " + what);
    for (int j = 0; j < cols; ++j) m(i, j) = doc[size_t(i)][size_t(j)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& doc, const std::string& what) {
  if (!doc.is_array() || doc.empty())
    fail(ErrorCode::ConfigError, "expected array for " + what);
  Eigen::VectorXd v(int(doc.size()));
  for (int i = 0; i < int(doc.size()); ++i) v[i] = doc[size_t(i)].get<double>();
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <typename T>
T field(const json& doc, const std::string& key) {
  if (!doc.contains(key))
    fail(ErrorCode::ConfigError, "missing field: " + key);
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

}  // namespace

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Gmm: return "gmm";
    case ModelKind::Poisson: return "poisson";
    case ModelKind::Bsc: return "bsc";
  }
  fail(ErrorCode::InvalidInput, "unknown model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "gmm") return ModelKind::Gmm;
  if (name == "poisson") return ModelKind::Poisson;
  if (name == "bsc") return ModelKind::Bsc;
  fail(ErrorCode::ConfigError, "unknown model kind: " + name);
}

std::string strategy_name(EStepStrategy s) {
  switch (s) {
    case EStepStrategy::Full: return "full";
    case EStepStrategy::MixtureFull: return "mixture-full";
    case EStepStrategy::Blind: return "blind";
    case EStepStrategy::Perturb: return "perturb";
    case EStepStrategy::PriorSample: return "prior-sample";
    case EStepStrategy::SparseConstruct: return "sparse-construct";
    case EStepStrategy::Hybrid: return "hybrid";
  }
  fail(ErrorCode::InvalidInput, "unknown strategy");
}

EStepStrategy strategy_from_name(const std::string& name) {
  if (name == "full") return EStepStrategy::Full;
  if (name == "mixture-full") return EStepStrategy::MixtureFull;
  if (name == "blind") return EStepStrategy::Blind;
  if (name == "perturb") return EStepStrategy::Perturb;
  if (name == "prior-sample") return EStepStrategy::PriorSample;
  if (name == "sparse-construct") return EStepStrategy::SparseConstruct;
  if (name == "hybrid") return EStepStrategy::Hybrid;
  fail(ErrorCode::ConfigError, "unknown E-step strategy: " + name);
}

json params_to_json(const GenerativeModel& model, std::uint64_t seed) {
  json doc;
  doc["seed"] = seed;
  if (auto* gmm = dynamic_cast<const GmmModel*>(&model)) {
    const GmmParams& p = gmm->params();
    doc["model"] = "gmm";
    doc["C"] = int(p.pi.size());
    doc["D"] = int(p.mu.cols());
    doc["pi"] = vector_to_json(p.pi);
    doc["mu"] = matrix_to_json(p.mu);
    doc["sigma2"] = matrix_to_json(p.sigma2);
    doc["floors"] = {{"sigma2", GmmModel::kVarFloor},
                     {"pi", GmmModel::kMixFloor}};
  } else if (auto* pois = dynamic_cast<const PoissonMixModel*>(&model)) {
    const PoissonMixParams& p = pois->params();
    doc["model"] = "poisson";
    doc["C"] = int(p.pi.size());
    doc["D"] = int(p.lambda.cols());
    doc["pi"] = vector_to_json(p.pi);
    doc["lambda"] = matrix_to_json(p.lambda);
    doc["floors"] = {{"lambda", PoissonMixModel::kRateFloor},
                     {"pi", PoissonMixModel::kMixFloor}};
  } else if (auto* bsc = dynamic_cast<const BscModel*>(&model)) {
    const BscParams& p = bsc->params();
    doc["model"] = "bsc";
    doc["H"] = int(p.W.cols());
    doc["D"] = int(p.W.rows());
    doc["W"] = matrix_to_json(p.W);
    doc["pi"] = p.pi;
    doc["sigma2"] = p.sigma2;
    doc["floors"] = {{"sigma2", BscModel::kVarFloor},
                     {"pi", BscModel::kPiFloor}};
  } else {
    fail(ErrorCode::InvalidInput, "unknown model type for serialization");
  }
  return doc;
}

std::unique_ptr<GenerativeModel> model_from_json(const json& doc) {
  const ModelKind kind = model_kind_from_name(field<std::string>(doc, "model"));
  switch (kind) {
    case ModelKind::Gmm: {
      GmmParams p;
      p.pi = vector_from_json(field<json>(doc, "pi"), "pi");
      p.mu = matrix_from_json(field<json>(doc, "mu"), "mu");
      p.sigma2 = matrix_from_json(field<json>(doc, "sigma2"), "sigma2");
      return std::make_unique<GmmModel>(std::move(p));
    }
    case ModelKind::Poisson: {
      PoissonMixParams p;
      p.pi = vector_from_json(field<json>(doc, "pi"), "pi");
      p.lambda = matrix_from_json(field<json>(doc, "lambda"), "lambda");
      return std::make_unique<PoissonMixModel>(std::move(p));
    }
    case ModelKind::Bsc: {
      BscParams p;
      p.W = matrix_from_json(field<json>(doc, "W"), "W");
      p.pi = field<double>(doc, "pi");
      p.sigma2 = field<double>(doc, "sigma2");
      return std::make_unique<BscModel>(std::move(p));
    }
  }
  fail(ErrorCode::ConfigError, "unknown model kind");
}

json trainer_config_to_json(const TrainerConfig& cfg) {
  return {
      {"S", cfg.S},
      {"strategy", strategy_name(cfg.strategy)},
      {"strategy_params",
       {{"candidates", cfg.sp.candidates},
        {"flips", cfg.sp.flips},
        {"h_prime", cfg.sp.h_prime},
        {"gamma", cfg.sp.gamma}}},
      {"inner_rounds", cfg.inner_rounds},
      {"max_iters", cfg.max_iters},
      {"eps_rel", cfg.eps_rel},
      {"seed", cfg.seed},
      {"monotone", cfg.monotone == MonotoneMode::Assert ? "assert" : "warn"},
      {"threads", cfg.threads},
  };
}

TrainerConfig trainer_config_from_json(const json& doc) {
  TrainerConfig cfg;
  cfg.S = field<int>(doc, "S");
  if (cfg.S < 1) fail(ErrorCode::ConfigError, "S must be >= 1");
  cfg.strategy = strategy_from_name(field<std::string>(doc, "strategy"));
  if (doc.contains("strategy_params")) {
    const json& sp = doc.at("strategy_params");
    cfg.sp.candidates = field_or<int>(sp, "candidates", cfg.sp.candidates);
    cfg.sp.flips = field_or<int>(sp, "flips", cfg.sp.flips);
    cfg.sp.h_prime = field_or<int>(sp, "h_prime", cfg.sp.h_prime);
    cfg.sp.gamma = field_or<int>(sp, "gamma", cfg.sp.gamma);
  }
  cfg.inner_rounds = field_or<int>(doc, "inner_rounds", 1);
  cfg.max_iters = field_or<int>(doc, "max_iters", 100);
  cfg.eps_rel = field_or<double>(doc, "eps_rel", 1e-6);
  if (!(cfg.eps_rel > 0.0))
    fail(ErrorCode::ConfigError, "eps_rel must be positive");
  cfg.seed = field_or<std::uint64_t>(doc, "seed", 0);
  const std::string mono = field_or<std::string>(doc, "monotone", "assert");
  if (mono != "assert" && mono != "warn")
    fail(ErrorCode::ConfigError, "monotone must be 'assert' or 'warn'");
  cfg.monotone = mono == "assert" ? MonotoneMode::Assert : MonotoneMode::Warn;
  cfg.threads = field_or<int>(doc, "threads", 1);
  return cfg;
}

json collection_to_json(const VariationalCollection& K) {
  json sets = json::array();
  for (int i = 0; i < K.n(); ++i) {
    json codes = json::array();
    for (LatentState s : K.set(i).states()) codes.push_back(s.code);
    sets.push_back(std::move(codes));
  }
  return sets;
}

VariationalCollection collection_from_json(const json& doc, int S,
                                           const StateSpace& space) {
  if (!doc.is_array()) fail(ErrorCode::ConfigError, "K must be an array");
  VariationalCollection K;
  for (const json& codes : doc) {
    std::vector<LatentState> states;
    for (const json& c : codes)
      states.push_back(LatentState{c.get<std::uint64_t>()});
    K.push_back(VariationalStateSet(std::move(states), S, space));
  }
  return K;
}

json checkpoint_to_json(const Trainer& trainer) {
  json doc;
  doc["config"] = trainer_config_to_json(trainer.config());
  doc["params"] = params_to_json(trainer.model(), trainer.config().seed);
  doc["K"] = collection_to_json(trainer.collection());
  doc["iteration"] = trainer.iteration();
  json trace = json::array();
  for (const IterationRecord& r : trainer.trace())
    trace.push_back({{"iter", r.iter},
                     {"f_after_e", r.f_after_e},
                     {"f_after_m", r.f_after_m},
                     {"wall_ms", r.wall_ms},
                     {"replacements", r.replacements}});
  doc["trace"] = std::move(trace);
  return doc;
}

Trainer trainer_from_checkpoint(const json& doc, const DataSet& data) {
  TrainerConfig cfg = trainer_config_from_json(field<json>(doc, "config"));
  auto model = model_from_json(field<json>(doc, "params"));
  VariationalCollection K =
      collection_from_json(field<json>(doc, "K"), cfg.S, model->space());
  std::vector<IterationRecord> trace;
  for (const json& r : field_or<json>(doc, "trace", json::array())) {
    trace.push_back({field<int>(r, "iter"), field<double>(r, "f_after_e"),
                     field<double>(r, "f_after_m"),
                     field<double>(r, "wall_ms"),
                     field<long>(r, "replacements")});
  }
  return Trainer(std::move(model), data, cfg, std::move(K),
                 field<int>(doc, "iteration"), std::move(trace));
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, "cannot parse " + what + ": " + e.what());
  }
}

}  // namespace tvem
