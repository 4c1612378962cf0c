#include "tvem/tvem_c.h"

#include <cstring>
#include <string>

#include "tvem/runner.hpp"

namespace {

thread_local std::string g_last_error;

tvem_status status_for(tvem::ErrorCode code) {
  switch (code) {
    case tvem::ErrorCode::MonotonicityViolation:
      return TVEM_ERR_MONOTONICITY;
    default:
      return TVEM_ERR_INPUT;
  }
}

template <typename Fn>
tvem_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const tvem::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TVEM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TVEM_ERR_INTERNAL;
  }
}

tvem_status require(const void* p, const char* name) {
  if (p) return TVEM_OK;
  g_last_error = std::string("null argument: ") + name;
  return TVEM_ERR_INPUT;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct tvem_trainer {
  tvem::DataSet data;
  std::unique_ptr<tvem::Trainer> trainer;
};

extern "C" {

const char* tvem_version(void) { return "1.0.0"; }

const char* tvem_last_error(void) { return g_last_error.c_str(); }

void tvem_string_free(char* s) { delete[] s; }

tvem_status tvem_generate(const char* config_json, const char* out_dir) {
  if (require(config_json, "config_json") || require(out_dir, "out_dir"))
    return TVEM_ERR_INPUT;
  return guarded([&] {
    return tvem_status(tvem::runner::cmd_generate(config_json, out_dir));
  });
}

tvem_status tvem_train(const char* data_csv_path, const char* config_json,
                       const char* out_dir) {
  if (require(data_csv_path, "data_csv_path") ||
      require(config_json, "config_json") || require(out_dir, "out_dir"))
    return TVEM_ERR_INPUT;
  return guarded([&] {
    return tvem_status(
        tvem::runner::cmd_train(data_csv_path, config_json, out_dir));
  });
}

tvem_status tvem_compare(const char* data_csv_path, const char* config_json,
                         const char* out_json_path) {
  if (require(data_csv_path, "data_csv_path") ||
      require(config_json, "config_json") ||
      require(out_json_path, "out_json_path"))
    return TVEM_ERR_INPUT;
  return guarded([&] {
    return tvem_status(
        tvem::runner::cmd_compare(data_csv_path, config_json, out_json_path));
  });
}

tvem_status tvem_eval(const char* data_csv_path, const char* params_json,
                      const char* config_json_or_null,
                      const char* out_json_path) {
  if (require(data_csv_path, "data_csv_path") ||
      require(params_json, "params_json") ||
      require(out_json_path, "out_json_path"))
    return TVEM_ERR_INPUT;
  return guarded([&] {
    return tvem_status(tvem::runner::cmd_eval(
        data_csv_path, params_json,
        config_json_or_null ? config_json_or_null : "", out_json_path));
  });
}

tvem_status tvem_trainer_create(const char* data_csv_path,
                                const char* config_json, tvem_trainer** out) {
  if (require(data_csv_path, "data_csv_path") ||
      require(config_json, "config_json") || require(out, "out"))
    return TVEM_ERR_INPUT;
  *out = nullptr;
  return guarded([&]() -> tvem_status {
    const tvem::json doc = tvem::parse_json(config_json, "train config");
    auto handle = std::make_unique<tvem_trainer>();
    handle->data = tvem::read_csv(data_csv_path);
    const tvem::TrainerConfig cfg = tvem::trainer_config_from_json(doc);
    std::unique_ptr<tvem::GenerativeModel> model;
    if (doc.contains("init_params")) {
      model = tvem::model_from_json(doc.at("init_params"));
    } else {
      if (!doc.contains("model") || !doc.at("model").is_object())
        tvem::fail(tvem::ErrorCode::ConfigError,
                   "missing 'model' object in config");
      const tvem::json& m = doc.at("model");
      const tvem::ModelKind kind =
          tvem::model_kind_from_name(m.at("kind").get<std::string>());
      const char* key = kind == tvem::ModelKind::Bsc ? "H" : "C";
      const int components =
          m.contains(key) ? m.at(key).get<int>() : m.at("components").get<int>();
      tvem::Rng rng = tvem::Rng::stream(cfg.seed, 0x1A17, 0);
      model = tvem::init_params(kind, components, handle->data, rng);
    }
    handle->trainer = std::make_unique<tvem::Trainer>(std::move(model),
                                                      handle->data, cfg);
    *out = handle.release();
    return TVEM_OK;
  });
}

tvem_status tvem_trainer_step(tvem_trainer* t) {
  if (require(t, "trainer")) return TVEM_ERR_INPUT;
  return guarded([&] {
    t->trainer->iterate();
    return TVEM_OK;
  });
}

tvem_status tvem_trainer_run(tvem_trainer* t) {
  if (require(t, "trainer")) return TVEM_ERR_INPUT;
  return guarded([&] {
    const tvem::TrainResult res = t->trainer->run();
    return res.converged ? TVEM_OK : TVEM_ERR_NOT_CONVERGED;
  });
}

tvem_status tvem_trainer_free_energy(tvem_trainer* t, double* out) {
  if (require(t, "trainer") || require(out, "out")) return TVEM_ERR_INPUT;
  return guarded([&] {
    *out = t->trainer->free_energy();
    return TVEM_OK;
  });
}

tvem_status tvem_trainer_iteration(tvem_trainer* t, int* out) {
  if (require(t, "trainer") || require(out, "out")) return TVEM_ERR_INPUT;
  *out = t->trainer->iteration();
  return TVEM_OK;
}

tvem_status tvem_trainer_params(tvem_trainer* t, char** out_json) {
  if (require(t, "trainer") || require(out_json, "out_json"))
    return TVEM_ERR_INPUT;
  return guarded([&] {
    const tvem::json doc =
        tvem::params_to_json(t->trainer->model(), t->trainer->config().seed);
    *out_json = copy_string(tvem::dump_json(doc));
    return TVEM_OK;
  });
}

void tvem_trainer_destroy(tvem_trainer* t) { delete t; }

}  // extern "C"
