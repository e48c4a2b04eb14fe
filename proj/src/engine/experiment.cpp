#include "newsrec/engine/experiment.hpp"

#include "newsrec/common/error.hpp"
#include "newsrec/common/hash.hpp"

namespace newsrec::engine {

namespace {

using json = nlohmann::ordered_json;

template <typename T>
T get(const ConfigTree& t, const std::string& path) {
  return config_at(t, path).get<T>();
}

std::size_t get_size(const ConfigTree& t, const std::string& path, std::int64_t min = 0) {
  const auto v = get<std::int64_t>(t, path);
  if (v < min) {
    throw ConfigError("'" + path + "' must be >= " + std::to_string(min) + ", got " +
                      std::to_string(v));
  }
  return static_cast<std::size_t>(v);
}

int get_int(const ConfigTree& t, const std::string& path, std::int64_t min) {
  return static_cast<int>(get_size(t, path, min));
}

DataKind parse_kind(const std::string& s) {
  if (s == "mind") return DataKind::kMind;
  if (s == "adressa") return DataKind::kAdressa;
  if (s == "synthetic") return DataKind::kSynthetic;
  throw ConfigError("unknown data.kind '" + s + "' (expected mind, adressa or synthetic)");
}

void check_metric(const std::string& m, const std::string& path) {
  if (m == "auc" || m == "mrr" || m.rfind("ndcg@", 0) == 0 || m.rfind("d_", 0) == 0 ||
      m.rfind("ps_", 0) == 0) {
    return;
  }
  throw ConfigError("'" + path + "': unknown metric '" + m + "'");
}

}  // namespace

ExperimentConfig to_experiment(const ConfigTree& t) {
  ExperimentConfig c;
  c.name = get<std::string>(t, "name");
  c.seed = static_cast<std::uint64_t>(get<std::int64_t>(t, "seed"));

  DataConfig& d = c.data;
  d.kind = parse_kind(get<std::string>(t, "data.kind"));
  d.name = get<std::string>(t, "data.name");
  d.train_dir = get<std::string>(t, "data.train_dir");
  d.dev_dir = get<std::string>(t, "data.dev_dir");
  d.adressa_events = get<std::string>(t, "data.adressa_events");
  d.lexicon = get<std::string>(t, "data.lexicon");
  d.word_embeddings = get<std::string>(t, "data.word_embeddings");
  d.entity_embeddings = get<std::string>(t, "data.entity_embeddings");
  d.val_fraction = get<double>(t, "data.val_fraction");
  d.test_fraction = get<double>(t, "data.test_fraction");
  d.max_title_len = get_size(t, "data.max_title_len", 1);
  d.max_abstract_len = get_size(t, "data.max_abstract_len", 0);
  d.adressa_negatives = get_int(t, "data.adressa_negatives", 1);
  synth::SynthSpec& s = d.synthetic;
  s.n_users = static_cast<int>(get<std::int64_t>(t, "data.synthetic.n_users"));
  s.n_news = static_cast<int>(get<std::int64_t>(t, "data.synthetic.n_news"));
  s.n_topics = static_cast<int>(get<std::int64_t>(t, "data.synthetic.n_topics"));
  s.vocab_size = static_cast<int>(get<std::int64_t>(t, "data.synthetic.vocab_size"));
  s.tokens_per_title = static_cast<int>(get<std::int64_t>(t, "data.synthetic.tokens_per_title"));
  s.affinity_concentration = get<double>(t, "data.synthetic.affinity_concentration");
  s.click_noise = get<double>(t, "data.synthetic.click_noise");
  s.sentiment_skew = get<double>(t, "data.synthetic.sentiment_skew");
  s.impressions_per_user =
      static_cast<int>(get<std::int64_t>(t, "data.synthetic.impressions_per_user"));
  s.history_length = static_cast<int>(get<std::int64_t>(t, "data.synthetic.history_length"));
  s.candidates_per_impression =
      static_cast<int>(get<std::int64_t>(t, "data.synthetic.candidates_per_impression"));
  s.dev_fraction = get<double>(t, "data.synthetic.dev_fraction");
  s.seed = static_cast<std::uint64_t>(get<std::int64_t>(t, "data.synthetic.seed"));

  encoders::NewsEncoderConfig& ne = c.model.news_encoder;
  ne.text_block = encoders::parse_text_block(get<std::string>(t, "model.news_encoder.text_block"));
  ne.use_abstract = get<bool>(t, "model.news_encoder.use_abstract");
  ne.use_category = get<bool>(t, "model.news_encoder.use_category");
  ne.use_entities = get<bool>(t, "model.news_encoder.use_entities");
  ne.d_model = get_size(t, "model.news_encoder.d_model", 1);
  ne.word_dim = get_size(t, "model.news_encoder.word_dim", 1);
  ne.cnn_window = get_size(t, "model.news_encoder.cnn_window", 1);
  ne.heads = get_size(t, "model.news_encoder.heads", 1);
  ne.attention_dim = get_size(t, "model.news_encoder.attention_dim", 1);
  ne.category_dim = get_size(t, "model.news_encoder.category_dim", 1);
  ne.entity_dim = get_size(t, "model.news_encoder.entity_dim", 1);
  ne.fusion = encoders::parse_fusion(get<std::string>(t, "model.news_encoder.fusion"));
  ne.dropout = get<double>(t, "model.news_encoder.dropout");
  if (ne.cnn_window % 2 == 0) {
    throw ConfigError("'model.news_encoder.cnn_window' must be odd, got " +
                      std::to_string(ne.cnn_window));
  }

  users::UserModelConfig& um = c.model.user_model;
  um.kind = users::parse_user_model(get<std::string>(t, "model.user_model.kind"));
  um.d_model = ne.d_model;
  um.heads = get_size(t, "model.user_model.heads", 1);
  um.attention_dim = get_size(t, "model.user_model.attention_dim", 1);
  um.long_term_mask_prob = get<double>(t, "model.user_model.long_term_mask_prob");
  um.user_id_dim = get_size(t, "model.user_model.user_id_dim", 1);
  ne.user_query_dim = um.user_id_dim;
  for (auto [heads, path] : {std::pair{ne.heads, "model.news_encoder.heads"},
                             std::pair{um.heads, "model.user_model.heads"}}) {
    if (ne.d_model % heads != 0) {
      throw ConfigError("'" + std::string(path) + "' = " + std::to_string(heads) +
                        " does not divide d_model " + std::to_string(ne.d_model));
    }
  }

  objectives::LossConfig& l = c.model.loss;
  l.kind = objectives::parse_loss(get<std::string>(t, "model.loss.kind"));
  l.temperature = get<double>(t, "model.loss.temperature");
  l.dual_weight = get<double>(t, "model.loss.dual_weight");
  l.aux = objectives::parse_aux(get<std::string>(t, "model.loss.aux"));
  l.tanr_weight = get<double>(t, "model.loss.tanr_weight");
  l.sentiment_weight = get<double>(t, "model.loss.sentiment_weight");
  l.diversity_weight = get<double>(t, "model.loss.diversity_weight");
  l.validate();

  TrainConfig& tr = c.train;
  tr.epochs = get_int(t, "train.epochs", 0);
  tr.batch_size = get_size(t, "train.batch_size", 1);
  tr.learning_rate = get<double>(t, "train.learning_rate");
  if (!(tr.learning_rate > 0.0)) throw ConfigError("'train.learning_rate' must be > 0");
  tr.max_history = get_size(t, "train.max_history", 0);
  tr.neg_k = get_int(t, "train.neg_k", 1);
  tr.early_stop_metric = get<std::string>(t, "train.early_stop.metric");
  tr.patience = get_int(t, "train.early_stop.patience", 1);
  tr.keep_best_on = get<std::string>(t, "train.checkpoint.keep_best_on");
  check_metric(tr.early_stop_metric, "train.early_stop.metric");
  check_metric(tr.keep_best_on, "train.checkpoint.keep_best_on");

  EvalConfig& ev = c.eval;
  ev.ks.clear();
  for (const auto& k : config_at(t, "eval.ks")) {
    if (k.get<std::int64_t>() < 1) throw ConfigError("'eval.ks' entries must be >= 1");
    ev.ks.push_back(static_cast<std::size_t>(k.get<std::int64_t>()));
  }
  ev.aspects.clear();
  for (const auto& a : config_at(t, "eval.aspects")) {
    ev.aspects.push_back(metrics::parse_aspect(a.get<std::string>()));
  }
  ev.split = get<std::string>(t, "eval.split");
  if (ev.split != "train" && ev.split != "val" && ev.split != "test") {
    throw ConfigError("'eval.split' must be train, val or test, got '" + ev.split + "'");
  }
  ev.spill_per_impression = get<bool>(t, "eval.spill_per_impression");

  c.logging.run_id = get<std::string>(t, "logging.run_id");
  c.logging.formats.clear();
  for (const auto& f : config_at(t, "logging.formats")) {
    const auto name = f.get<std::string>();
    if (name != "jsonl" && name != "csv") {
      throw ConfigError("'logging.formats' entries must be jsonl or csv, got '" + name + "'");
    }
    c.logging.formats.push_back(name);
  }

  HpoConfig& h = c.hpo;
  h.sampler = get<std::string>(t, "hpo.sampler");
  if (h.sampler != "grid" && h.sampler != "random") {
    throw ConfigError("'hpo.sampler' must be grid or random, got '" + h.sampler + "'");
  }
  h.n_trials = get_int(t, "hpo.n_trials", 1);
  h.objective = get<std::string>(t, "hpo.objective");
  check_metric(h.objective, "hpo.objective");
  h.seed = static_cast<std::uint64_t>(get<std::int64_t>(t, "hpo.seed"));
  for (const auto& [k, v] : config_at(t, "hpo.space").items()) {
    h.space.emplace_back(k, v.get<std::string>());
  }
  return c;
}

std::string run_id(const ResolvedConfig& cfg) {
  const std::string id = get<std::string>(cfg.tree, "logging.run_id");
  if (!id.empty()) {
    if (id.find("..") != std::string::npos || id.front() == '/') {
      throw ConfigError("logging.run_id must be a relative name, got '" + id + "'");
    }
    return id;
  }
  return get<std::string>(cfg.tree, "name") + "_" + cfg.hash.substr(0, 8);
}

std::string data_cache_key(const ResolvedConfig& cfg) {
  ConfigTree key;
  key["data"] = config_at(cfg.tree, "data");
  key["max_history"] = config_at(cfg.tree, "train.max_history");
  const std::string name = get<std::string>(cfg.tree, "data.name");
  const std::string base = name.empty() ? get<std::string>(cfg.tree, "data.kind") : name;
  return base + "_" + fnv1a64_hex(key.dump()).substr(0, 8);
}

}  // namespace newsrec::engine
