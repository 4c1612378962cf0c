// Command-line front end for the truncated variational EM library. All
// heavy lifting goes through the C API so the CLI doubles as its smoke test.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "tvem/tvem_c.h"

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> assert_monotone;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* c = cmd->add_option("--config", flags.config_path, "config JSON file");
  if (config_required) c->required();
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "RNG seed override");
  cmd->add_option("--threads", flags.threads, "worker threads, 0 = auto");
  cmd->add_option("--assert-monotone", flags.assert_monotone,
                  "on: abort on free-energy decrease; off: warn only")
      ->check(CLI::IsMember({"on", "off"}));
}

std::string read_file_or_die(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "error: cannot read %s\n", path.c_str());
    std::exit(2);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// flags override config fields one-to-one
std::string resolved_config(const CommonFlags& flags) {
  std::string text =
      flags.config_path.empty() ? "{}" : read_file_or_die(flags.config_path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: cannot parse %s: %s\n",
                 flags.config_path.c_str(), e.what());
    std::exit(2);
  }
  if (flags.seed) doc["seed"] = *flags.seed;
  if (flags.threads) doc["threads"] = *flags.threads;
  if (flags.assert_monotone)
    doc["monotone"] = *flags.assert_monotone == "on" ? "assert" : "warn";
  return doc.dump();
}

int finish(tvem_status status) {
  if (status != TVEM_OK && status != TVEM_ERR_NOT_CONVERGED)
    std::fprintf(stderr, "error: %s\n", tvem_last_error());
  else if (status == TVEM_ERR_NOT_CONVERGED)
    std::fprintf(stderr, "warning: maximum iterations reached before "
                         "convergence\n");
  return int(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated variational EM: training, generation, and "
               "oracle comparisons"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tvem_version());

  CommonFlags gen_flags, train_flags, compare_flags, eval_flags;
  std::string train_data, compare_data, eval_data, eval_params;

  auto* generate = app.add_subcommand(
      "generate", "sample a synthetic dataset with ground truth");
  add_common(generate, gen_flags, true);

  auto* train =
      app.add_subcommand("train", "run TV-EM on a dataset");
  train->add_option("data", train_data, "dataset CSV")->required();
  add_common(train, train_flags, true);

  auto* compare = app.add_subcommand(
      "compare", "TV-EM across S against exact-EM and hard-EM oracles");
  compare->add_option("data", compare_data, "dataset CSV")->required();
  add_common(compare, compare_flags, true);

  auto* eval = app.add_subcommand(
      "eval", "free energy of a fresh E-step at frozen parameters");
  eval->add_option("data", eval_data, "dataset CSV")->required();
  eval->add_option("params", eval_params, "parameter JSON file")->required();
  add_common(eval, eval_flags, false);

  CLI11_PARSE(app, argc, argv);

  namespace fs = std::filesystem;
  if (generate->parsed()) {
    return finish(tvem_generate(resolved_config(gen_flags).c_str(),
                                gen_flags.out_dir.c_str()));
  }
  if (train->parsed()) {
    return finish(tvem_train(train_data.c_str(),
                             resolved_config(train_flags).c_str(),
                             train_flags.out_dir.c_str()));
  }
  if (compare->parsed()) {
    const std::string out =
        (fs::path(compare_flags.out_dir) / "report.json").string();
    fs::create_directories(compare_flags.out_dir);
    return finish(tvem_compare(compare_data.c_str(),
                               resolved_config(compare_flags).c_str(),
                               out.c_str()));
  }
  if (eval->parsed()) {
    const std::string out =
        (fs::path(eval_flags.out_dir) / "metrics.json").string();
    fs::create_directories(eval_flags.out_dir);
    const std::string params = read_file_or_die(eval_params);
    const std::string config = eval_flags.config_path.empty() &&
                                       !eval_flags.seed && !eval_flags.threads
                                   ? std::string()
                                   : resolved_config(eval_flags);
    return finish(tvem_eval(eval_data.c_str(), params.c_str(),
                            config.empty() ? nullptr : config.c_str(),
                            out.c_str()));
  }
  return 0;
}
