#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "newsrec/data/cache.hpp"
#include "newsrec/engine/config.hpp"
#include "newsrec/engine/experiment.hpp"
#include "newsrec/engine/model.hpp"
#include "newsrec/metrics/evaluate.hpp"
#include "newsrec/nn/parameter.hpp"

namespace newsrec::engine {

struct Dataset {
  std::filesystem::path dir;
  data::PreparedData data;
  bool created = false;
};

// <out>/data/<data_cache_key>.
std::filesystem::path dataset_dir(const ResolvedConfig& cfg, const std::filesystem::path& out);

// Builds the cache for cfg (synthetic corpora are generated under the cache
// directory first) unless it already exists and force is false.
Dataset prepare_dataset(const ResolvedConfig& cfg, const std::filesystem::path& out,
                        bool force = false, std::ostream* log = nullptr);

// Model for cfg over data, with pretrained tables when configured.
Recommender build_model(const ExperimentConfig& cfg, const data::PreparedData& data,
                        std::ostream* log = nullptr);

// Scores every impression of one split with the model in inference mode.
metrics::EvalReport evaluate_model(const Recommender& model, const data::PreparedData& data,
                                   const std::string& split, const ExperimentConfig& cfg);

const std::vector<data::Impression>& split_by_name(const data::PreparedData& data,
                                                   const std::string& split);

struct TrainHooks {
  // Replaces the monitored validation value for epoch e >= 1 when set.
  std::function<std::optional<double>(int epoch)> validation_override;
  std::ostream* log = nullptr;
};

struct TrainResult {
  std::filesystem::path run_dir;
  std::filesystem::path checkpoint;
  int best_epoch = 0;
  double best_value = 0.0;
  int epochs_completed = 0;
  bool stopped_early = false;
  nn::ParameterCounts params;
  metrics::EvalReport final_eval;  // best checkpoint on eval.split
};

// Writes run_dir/{config.resolved, header.json, metrics.jsonl, timing.jsonl,
// checkpoints/best.ckpt, eval_<split>.json}. config.resolved is written
// before anything else happens.
TrainResult train(const ResolvedConfig& cfg, const std::filesystem::path& out,
                  const std::filesystem::path& run_dir, const TrainHooks& hooks = {});

// Loads a checkpoint into the model described by cfg and evaluates eval.split.
// Results go to run_dir/eval_<split>.json.
metrics::EvalReport evaluate_checkpoint(const ResolvedConfig& cfg,
                                        const std::filesystem::path& out,
                                        const std::filesystem::path& checkpoint,
                                        const std::filesystem::path& run_dir,
                                        std::ostream* log = nullptr);

// Trainable / total parameter counts and f32 byte size.
nn::ParameterCounts count_parameters(const Recommender& model);

}  // namespace newsrec::engine
