#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "newsrec/encoders/news_encoder.hpp"
#include "newsrec/engine/config.hpp"
#include "newsrec/metrics/evaluate.hpp"
#include "newsrec/objectives/losses.hpp"
#include "newsrec/synth/generator.hpp"
#include "newsrec/users/user_model.hpp"

namespace newsrec::engine {

enum class DataKind { kMind, kAdressa, kSynthetic };

struct DataConfig {
  DataKind kind = DataKind::kSynthetic;
  std::string name;
  std::string train_dir, dev_dir, adressa_events, lexicon, word_embeddings, entity_embeddings;
  double val_fraction = 0.1;
  double test_fraction = 0.2;
  std::size_t max_title_len = 30;
  std::size_t max_abstract_len = 50;
  int adressa_negatives = 20;
  synth::SynthSpec synthetic;
};

struct ModelConfig {
  encoders::NewsEncoderConfig news_encoder;
  users::UserModelConfig user_model;
  objectives::LossConfig loss;
};

struct TrainConfig {
  int epochs = 5;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  std::size_t max_history = 50;
  int neg_k = 4;
  std::string early_stop_metric = "auc";
  int patience = 3;
  std::string keep_best_on = "auc";
};

struct EvalConfig {
  std::vector<std::size_t> ks = {5, 10};
  std::vector<metrics::Aspect> aspects = {metrics::Aspect::kCategory,
                                          metrics::Aspect::kSentiment};
  std::string split = "test";
  bool spill_per_impression = false;
};

struct LoggingConfig {
  std::string run_id;
  std::vector<std::string> formats = {"jsonl"};
};

struct HpoConfig {
  std::string sampler = "random";
  int n_trials = 10;
  std::string objective = "auc";
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> space;  // path -> spec, file order
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 42;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  LoggingConfig logging;
  HpoConfig hpo;
};

// Typed view of a resolved tree; validates enums and ranges.
ExperimentConfig to_experiment(const ConfigTree& tree);

// logging.run_id, or "<name>_<first 8 hash chars>".
std::string run_id(const ResolvedConfig& cfg);

// Stable identity of the prepared dataset: data section plus max_history.
std::string data_cache_key(const ResolvedConfig& cfg);

}  // namespace newsrec::engine
