#include "newsrec/cli/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "newsrec/common/error.hpp"
#include "newsrec/engine/config.hpp"
#include "newsrec/engine/experiment.hpp"
#include "newsrec/engine/hpo.hpp"
#include "newsrec/engine/runner.hpp"

namespace newsrec::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::string synthetic;
  std::string checkpoint;
  std::optional<std::int64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("-c,--config", c.config, "Experiment config file");
  if (with_out) {
    cmd->add_option("--out", c.out, "Output directory (default: $NEWSREC_OUT or ./runs)");
  }
  cmd->add_option("--synthetic", c.synthetic,
                  "JSON synthetic corpus spec; sets data.kind = synthetic");
  cmd->add_option("--seed", c.seed, "Global seed (same as seed=N)");
  cmd->add_option("overrides", c.overrides, "Config overrides, dot.path=value");
}

// Overrides implied by the flags, followed by the positional ones.
std::vector<std::string> overrides(const Common& c) {
  std::vector<std::string> ov;
  if (!c.synthetic.empty()) {
    std::ifstream in(c.synthetic);
    if (!in) throw ConfigError("cannot read synthetic spec " + c.synthetic);
    nlohmann::ordered_json spec;
    try {
      spec = nlohmann::ordered_json::parse(in);
    } catch (const std::exception& e) {
      throw ConfigError("synthetic spec " + c.synthetic + " is not valid JSON: " + e.what());
    }
    if (!spec.is_object()) throw ConfigError("synthetic spec must be a JSON object");
    ov.push_back("data.kind=synthetic");
    for (const auto& [k, v] : spec.items()) {
      ov.push_back("data.synthetic." + k + "=" + engine::format_config_value(v));
    }
  }
  if (c.seed) ov.push_back("seed=" + std::to_string(*c.seed));
  ov.insert(ov.end(), c.overrides.begin(), c.overrides.end());
  return ov;
}

fs::path out_dir(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("NEWSREC_OUT"); env && *env) return env;
  return "runs";
}

void print_report(const metrics::EvalReport& r, std::ostream& out) {
  out << r.to_json().dump(2) << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train and evaluate neural news recommenders from one config file.", "newsrec"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "newsrec 1.0");

  Common prep_o, train_o, eval_o, hpo_o, inspect_o;
  bool force = false;
  auto* prep = app.add_subcommand("prepare-data", "Parse raw data (or generate a synthetic corpus) into the cache");
  add_common(prep, prep_o);
  prep->add_flag("--force", force, "Rebuild the cache even if it exists");
  auto* tr = app.add_subcommand("train", "Train a model and keep its best checkpoint");
  add_common(tr, train_o);
  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on eval.split");
  add_common(ev, eval_o);
  ev->add_option("--checkpoint", eval_o.checkpoint,
                 "Checkpoint to load (default: the run's checkpoints/best.ckpt)");
  auto* hp = app.add_subcommand("hpo", "Grid or random hyperparameter search over hpo.space");
  add_common(hp, hpo_o);
  auto* ins = app.add_subcommand("inspect-config", "Print the fully merged config and exit");
  add_common(ins, inspect_o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ins) {
      const auto rc = engine::compose_config(inspect_o.config, overrides(inspect_o));
      engine::to_experiment(rc.tree);
      out << rc.text;
      return 0;
    }
    if (*prep) {
      const auto rc = engine::compose_config(prep_o.config, overrides(prep_o));
      const auto ds = engine::prepare_dataset(rc, out_dir(prep_o), force, &err);
      out << (ds.created ? "prepared " : "cached ") << ds.dir.string() << '\n';
      return 0;
    }
    if (*tr) {
      const auto rc = engine::compose_config(train_o.config, overrides(train_o));
      const fs::path out_root = out_dir(train_o);
      const fs::path run_dir = out_root / engine::run_id(rc);
      engine::TrainHooks hooks;
      hooks.log = &err;
      const auto result = engine::train(rc, out_root, run_dir, hooks);
      out << "run " << run_dir.string() << '\n'
          << "parameters trainable=" << result.params.trainable
          << " total=" << result.params.total << " bytes=" << result.params.bytes << '\n'
          << "best epoch " << result.best_epoch << " of " << result.epochs_completed
          << (result.stopped_early ? " (early stop)" : "") << '\n'
          << "checkpoint " << result.checkpoint.string() << '\n';
      print_report(result.final_eval, out);
      return 0;
    }
    if (*ev) {
      const auto rc = engine::compose_config(eval_o.config, overrides(eval_o));
      const fs::path out_root = out_dir(eval_o);
      const fs::path run_dir = out_root / engine::run_id(rc);
      const fs::path ckpt =
          eval_o.checkpoint.empty() ? run_dir / "checkpoints" / "best.ckpt" : fs::path(eval_o.checkpoint);
      print_report(engine::evaluate_checkpoint(rc, out_root, ckpt, run_dir, &err), out);
      return 0;
    }
    if (*hp) {
      const fs::path out_root = out_dir(hpo_o);
      const auto ov = overrides(hpo_o);
      const auto rc = engine::compose_config(hpo_o.config, ov);
      const fs::path run_dir = out_root / engine::run_id(rc);
      const auto result = engine::hpo_search(hpo_o.config, ov, out_root, run_dir, &err);
      out << "trials " << result.table.string() << '\n'
          << "best trial " << result.best().index << " objective " << result.best().objective;
      for (const auto& o : result.best().overrides) out << ' ' << o;
      out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace newsrec::cli
