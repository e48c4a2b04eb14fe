#include "newsrec/engine/runner.hpp"

#include <sys/utsname.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <unordered_map>

#include "newsrec/common/error.hpp"
#include "newsrec/common/hash.hpp"
#include "newsrec/data/prepare.hpp"
#include "newsrec/data/split.hpp"
#include "newsrec/nn/checkpoint.hpp"
#include "newsrec/nn/ops.hpp"
#include "newsrec/nn/optim.hpp"
#include "newsrec/objectives/losses.hpp"
#include "newsrec/synth/generator.hpp"

namespace newsrec::engine {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using nn::Tensor;

namespace {

void say(std::ostream* log, const std::string& line) {
  if (log) *log << line << '\n' << std::flush;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::size_t rss_bytes() {
  std::ifstream in("/proc/self/statm");
  std::size_t pages = 0, resident = 0;
  if (!(in >> pages >> resident)) return 0;
  return resident * static_cast<std::size_t>(sysconf(_SC_PAGESIZE));
}

json environment() {
  json env;
  utsname u{};
  if (uname(&u) == 0) {
    env["os"] = std::string(u.sysname) + " " + u.release;
    env["machine"] = u.machine;
  }
#ifdef __VERSION__
  env["compiler"] = __VERSION__;
#endif
  env["cxx_standard"] = static_cast<long>(__cplusplus);
#ifdef NDEBUG
  env["build"] = "release";
#else
  env["build"] = "debug";
#endif
  env["threads"] = 1;
  env["precision"] = "float32";
  return env;
}

// Index of each news id in the corpus; throws on dangling references.
std::size_t position(const data::PreparedData& d, const std::string& id) {
  auto p = d.split.news_index.position(id);
  if (!p) throw DataError("news id '" + id + "' missing from the news index");
  return *p;
}

Tensor primary_loss(const Tensor& scores, std::size_t m, const objectives::LossConfig& loss) {
  std::vector<int> labels(m, 0);
  labels[0] = 1;
  switch (loss.kind) {
    case objectives::LossKind::kCe:
      return objectives::ce_loss(scores, 0);
    case objectives::LossKind::kScl:
      return objectives::scl_loss(scores, labels, loss.temperature);
    case objectives::LossKind::kDual:
      return objectives::dual_loss(objectives::ce_loss(scores, 0),
                                   objectives::scl_loss(scores, labels, loss.temperature),
                                   loss.dual_weight);
  }
  throw Error("unknown loss");
}

struct Sample {
  std::size_t impression = 0;
  data::TrainingTuple tuple;
};

class Trainer {
 public:
  Trainer(const ExperimentConfig& cfg, const data::PreparedData& data, Recommender& model)
      : cfg_(cfg), data_(data), model_(model),
        adam_(model.store(), nn::AdamOptions{cfg.train.learning_rate}) {}

  std::vector<Sample> epoch_samples(int epoch, std::size_t& skipped) const {
    std::vector<Sample> samples;
    const auto& train = data_.split.train;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const auto seed = mix_seed(cfg_.seed, static_cast<std::uint64_t>(epoch), i);
      auto tuples = data::negative_sample_training(train[i], cfg_.train.neg_k, seed);
      if (!tuples) {
        ++skipped;
        continue;
      }
      if (model_.late_fusion() && train[i].history.empty()) {
        skipped += tuples->size();
        continue;
      }
      for (auto& t : *tuples) samples.push_back({i, std::move(t)});
    }
    std::mt19937_64 rng(mix_seed(cfg_.seed, static_cast<std::uint64_t>(epoch), 0x5u));
    std::shuffle(samples.begin(), samples.end(), rng);
    return samples;
  }

  // One optimizer step; returns the batch loss.
  double step(std::span<const Sample> batch, std::uint64_t batch_seed, long global_step) {
    std::mt19937_64 rng(batch_seed);
    const nn::ForwardContext ctx{true, &rng, cfg_.model.news_encoder.dropout};
    const auto& loss_cfg = cfg_.model.loss;

    // Embeddings for every (sample, news) the batch touches.
    std::vector<std::vector<Tensor>> hist(batch.size()), cands(batch.size());
    std::vector<Tensor> aux_rows;
    std::vector<const data::NewsItem*> aux_items;
    if (!model_.personalized_news()) {
      std::unordered_map<std::string, std::size_t> slot;
      std::vector<Tensor> rows;
      auto embed = [&](const std::string& id) {
        auto [it, fresh] = slot.emplace(id, rows.size());
        if (fresh) {
          const data::NewsItem& item = data_.split.news_index.at(position(data_, id));
          rows.push_back(model_.encode(item, ctx, 0));
          aux_rows.push_back(rows.back());
          aux_items.push_back(&item);
        }
        return rows[it->second];
      };
      for (std::size_t s = 0; s < batch.size(); ++s) {
        const auto& imp = data_.split.train[batch[s].impression];
        for (const auto& h : imp.history) hist[s].push_back(embed(h));
        cands[s].push_back(embed(batch[s].tuple.positive));
        for (const auto& n : batch[s].tuple.negatives) cands[s].push_back(embed(n));
      }
    } else {
      for (std::size_t s = 0; s < batch.size(); ++s) {
        const auto& imp = data_.split.train[batch[s].impression];
        auto enc = [&](const std::string& id) {
          return model_.encode(data_.split.news_index.at(position(data_, id)), ctx, imp.user_id);
        };
        for (const auto& h : imp.history) hist[s].push_back(enc(h));
        cands[s].push_back(enc(batch[s].tuple.positive));
        aux_rows.push_back(cands[s].back());
        aux_items.push_back(&data_.split.news_index.at(position(data_, batch[s].tuple.positive)));
        for (const auto& n : batch[s].tuple.negatives) cands[s].push_back(enc(n));
      }
    }

    Tensor total;
    auto accumulate = [](Tensor& acc, const Tensor& t) { acc = acc.defined() ? nn::add(acc, t) : t; };
    Tensor reg_total;
    for (std::size_t s = 0; s < batch.size(); ++s) {
      const auto& imp = data_.split.train[batch[s].impression];
      const Tensor h = hist[s].empty() ? Tensor() : nn::stack_rows(hist[s]);
      const Tensor c = nn::stack_rows(cands[s]);
      const Tensor scores = model_.score(h, c, imp.user_id, ctx);
      accumulate(total, primary_loss(scores, cands[s].size(), loss_cfg));
      if (loss_cfg.aux == objectives::AuxKind::kSentiRec && loss_cfg.diversity_weight > 0.0) {
        double hist_mean = 0.0;
        for (const auto& id : imp.history) {
          hist_mean += data_.split.news_index.at(position(data_, id)).sentiment_score;
        }
        if (!imp.history.empty()) hist_mean /= static_cast<double>(imp.history.size());
        std::vector<double> sent;
        sent.push_back(data_.split.news_index.at(position(data_, batch[s].tuple.positive)).sentiment_score);
        for (const auto& n : batch[s].tuple.negatives) {
          sent.push_back(data_.split.news_index.at(position(data_, n)).sentiment_score);
        }
        accumulate(reg_total, objectives::sentiment_diversity_regularizer(scores, sent, hist_mean));
      }
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Tensor loss = nn::scale(total, inv_b);

    if (loss_cfg.aux == objectives::AuxKind::kTanr && loss_cfg.tanr_weight > 0.0) {
      Tensor tanr;
      for (std::size_t i = 0; i < aux_rows.size(); ++i) {
        const Tensor logits = encoders::topic_logits(aux_rows[i], model_.topic_weight(),
                                                     model_.topic_bias());
        accumulate(tanr, objectives::tanr_aux(logits, aux_items[i]->category_id));
      }
      loss = nn::add(loss, nn::scale(tanr, loss_cfg.tanr_weight /
                                               static_cast<double>(aux_rows.size())));
    }
    if (loss_cfg.aux == objectives::AuxKind::kSentiRec) {
      std::vector<double> truth;
      for (const auto* item : aux_items) truth.push_back(item->sentiment_score);
      const Tensor pred = objectives::predict_sentiment(nn::stack_rows(aux_rows),
                                                        model_.sentiment_weight(),
                                                        model_.sentiment_bias());
      const Tensor target = Tensor::from_data({truth.size()}, truth);
      const Tensor mse = nn::mean(nn::square(nn::sub(pred, target)));
      loss = nn::add(loss, nn::scale(mse, loss_cfg.sentiment_weight));
      if (reg_total.defined()) {
        loss = nn::add(loss, nn::scale(reg_total, loss_cfg.diversity_weight * inv_b));
      }
    }

    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw Error("non-finite training loss at step " + std::to_string(global_step));
    }
    loss.backward();
    adam_.step();
    model_.store().zero_grad();
    return value;
  }

  long steps() const { return adam_.steps(); }

 private:
  const ExperimentConfig& cfg_;
  const data::PreparedData& data_;
  Recommender& model_;
  nn::Adam adam_;
};

double monitored(const metrics::EvalReport& r, const std::string& metric) {
  return r.at(metric).mean;
}

json metric_means(const metrics::EvalReport& r) {
  json m = json::object();
  for (const auto& name : r.order) m[name] = r.metrics.at(name).mean;
  return m;
}

metrics::EvalOptions eval_options(const ExperimentConfig& cfg, const data::PreparedData& data) {
  metrics::EvalOptions o;
  o.ks = cfg.eval.ks;
  o.aspects = cfg.eval.aspects;
  o.n_categories = data.tables.categories.size();
  o.keep_per_impression = cfg.eval.spill_per_impression;
  return o;
}

void write_eval(const metrics::EvalReport& report, const fs::path& run_dir, bool spill) {
  report.write_json(run_dir / ("eval_" + report.split + ".json"));
  if (spill) report.write_csv(run_dir / ("eval_" + report.split + "_impressions.csv"));
}

}  // namespace

fs::path dataset_dir(const ResolvedConfig& cfg, const fs::path& out) {
  return out / "data" / data_cache_key(cfg);
}

Dataset prepare_dataset(const ResolvedConfig& rc, const fs::path& out, bool force,
                        std::ostream* log) {
  const ExperimentConfig cfg = to_experiment(rc.tree);
  Dataset ds;
  ds.dir = dataset_dir(rc, out);
  if (!force && data::cache_exists(ds.dir)) {
    ds.data = data::load_cache(ds.dir);
    return ds;
  }
  data::PrepareOptions opts;
  opts.val_fraction = cfg.data.val_fraction;
  opts.test_fraction = cfg.data.test_fraction;
  opts.max_title_len = cfg.data.max_title_len;
  opts.max_abstract_len = cfg.data.max_abstract_len;
  opts.max_history = cfg.train.max_history;
  opts.adressa_negatives = cfg.data.adressa_negatives;
  opts.seed = cfg.seed;
  opts.lexicon = cfg.data.lexicon;
  data::PrepareReport report;
  switch (cfg.data.kind) {
    case DataKind::kSynthetic: {
      const auto files = synth::generate(cfg.data.synthetic, ds.dir / "raw");
      for (const auto& w : files.warnings) say(log, "warning: " + w);
      if (opts.lexicon.empty()) opts.lexicon = files.lexicon;
      ds.data = data::prepare_mind(files.train_dir, files.dev_dir, opts, &report);
      break;
    }
    case DataKind::kMind:
      if (cfg.data.train_dir.empty() || cfg.data.dev_dir.empty()) {
        throw ConfigError("data.kind = mind needs data.train_dir and data.dev_dir");
      }
      ds.data = data::prepare_mind(cfg.data.train_dir, cfg.data.dev_dir, opts, &report);
      break;
    case DataKind::kAdressa:
      if (cfg.data.adressa_events.empty()) {
        throw ConfigError("data.kind = adressa needs data.adressa_events");
      }
      ds.data = data::prepare_adressa(cfg.data.adressa_events, opts, &report);
      break;
  }
  for (const auto& m : report.messages) say(log, "row error: " + m);
  if (report.news_row_errors + report.behavior_row_errors + report.dropped_references +
          report.dropped_impressions > 0) {
    say(log, "prepare: " + std::to_string(report.news_row_errors) + " news row errors, " +
                 std::to_string(report.behavior_row_errors) + " behavior row errors, " +
                 std::to_string(report.dropped_references) + " dangling references, " +
                 std::to_string(report.dropped_impressions) + " dropped impressions");
  }
  data::save_cache(ds.data, ds.dir);
  ds.created = true;
  say(log, "prepared " + ds.dir.string() + ": " + std::to_string(ds.data.split.news_index.size()) +
               " news, " + std::to_string(ds.data.split.train.size()) + "/" +
               std::to_string(ds.data.split.validation.size()) + "/" +
               std::to_string(ds.data.split.test.size()) + " train/val/test impressions");
  return ds;
}

Recommender build_model(const ExperimentConfig& cfg, const data::PreparedData& data,
                        std::ostream* log) {
  encoders::PretrainedTables pre;
  const auto ne = cfg.model.news_encoder;
  if (!cfg.data.word_embeddings.empty()) {
    auto p = encoders::load_pretrained_embeddings(cfg.data.word_embeddings, data.tables.words,
                                                  mix_seed(cfg.seed, 0x77u));
    if (p.dim != ne.word_dim) {
      throw ConfigError("word embeddings have width " + std::to_string(p.dim) +
                        " but model.news_encoder.word_dim is " + std::to_string(ne.word_dim));
    }
    say(log, "word embedding coverage " + std::to_string(p.coverage));
    pre.words = p.table;
  }
  if (ne.use_entities && !cfg.data.entity_embeddings.empty()) {
    auto p = encoders::load_pretrained_embeddings(cfg.data.entity_embeddings,
                                                  data.tables.entities, mix_seed(cfg.seed, 0x65u));
    if (p.dim != ne.entity_dim) {
      throw ConfigError("entity embeddings have width " + std::to_string(p.dim) +
                        " but model.news_encoder.entity_dim is " + std::to_string(ne.entity_dim));
    }
    say(log, "entity embedding coverage " + std::to_string(p.coverage));
    pre.entities = p.table;
  }
  return Recommender(cfg.model, model_sizes(data), cfg.seed, pre);
}

const std::vector<data::Impression>& split_by_name(const data::PreparedData& data,
                                                   const std::string& split) {
  if (split == "train") return data.split.train;
  if (split == "val") return data.split.validation;
  if (split == "test") return data.split.test;
  throw ConfigError("unknown split '" + split + "'");
}

metrics::EvalReport evaluate_model(const Recommender& model, const data::PreparedData& data,
                                   const std::string& split, const ExperimentConfig& cfg) {
  nn::NoGradScope no_grad;
  const nn::ForwardContext ctx{};
  const auto& news = data.split.news_index;
  const auto& imps = split_by_name(data, split);
  if (imps.empty()) throw Error("split '" + split + "' is empty");

  metrics::Scorer scorer;
  Tensor all, fallback;
  if (!model.personalized_news()) {
    std::vector<Tensor> rows;
    rows.reserve(news.size());
    for (const auto& item : news.items()) rows.push_back(model.encode(item, ctx, 0));
    all = nn::stack_rows(rows);
    fallback = nn::mean_rows(all);
    scorer = [&](const data::Impression& imp) {
      std::vector<std::size_t> h, c;
      for (const auto& id : imp.history) h.push_back(position(data, id));
      for (const auto& cand : imp.candidates) c.push_back(position(data, cand.news_id));
      const Tensor hist = h.empty() ? Tensor() : nn::gather_rows(all, h);
      const Tensor s = model.score(hist, nn::gather_rows(all, c), imp.user_id, ctx, fallback);
      return std::vector<double>(s.data().begin(), s.data().end());
    };
  } else {
    scorer = [&](const data::Impression& imp) {
      auto enc = [&](const std::string& id) {
        return model.encode(news.at(position(data, id)), ctx, imp.user_id);
      };
      std::vector<Tensor> h, c;
      for (const auto& id : imp.history) h.push_back(enc(id));
      for (const auto& cand : imp.candidates) c.push_back(enc(cand.news_id));
      if (h.empty() && model.late_fusion() && !fallback.defined()) {
        std::vector<Tensor> rows;
        for (const auto& item : news.items()) {
          rows.push_back(model.encode(item, ctx, data.users.cold_id));
        }
        fallback = nn::mean_rows(nn::stack_rows(rows));
      }
      const Tensor s = model.score(h.empty() ? Tensor() : nn::stack_rows(h), nn::stack_rows(c),
                                   imp.user_id, ctx, fallback);
      return std::vector<double>(s.data().begin(), s.data().end());
    };
  }
  auto report = metrics::evaluate_split(scorer, imps, news, eval_options(cfg, data));
  report.split = split;
  report.seed = cfg.seed;
  return report;
}

nn::ParameterCounts count_parameters(const Recommender& model) {
  return model.store().count(sizeof(float));
}

TrainResult train(const ResolvedConfig& rc, const fs::path& out, const fs::path& run_dir,
                  const TrainHooks& hooks) {
  fs::create_directories(run_dir);
  write_text(run_dir / "config.resolved", rc.text);
  const ExperimentConfig cfg = to_experiment(rc.tree);
  std::ostream* log = hooks.log;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const Dataset ds = prepare_dataset(rc, out, false, log);
  const data::PreparedData& data = ds.data;
  if (data.split.train.empty()) throw DataError("training split is empty");

  nn::PrecisionScope f32(nn::Precision::kFloat32);
  Recommender model = build_model(cfg, data, log);
  TrainResult result;
  result.run_dir = run_dir;
  result.params = count_parameters(model);

  json header;
  header["run_id"] = run_dir.filename().string();
  header["config_hash"] = rc.hash;
  header["param_count"] = {{"trainable", result.params.trainable},
                           {"total", result.params.total},
                           {"non_trainable", result.params.total - result.params.trainable}};
  header["model_bytes"] = result.params.bytes;
  header["environment"] = environment();
  header["dataset"] = {{"cache", ds.dir.string()},
                       {"news", data.split.news_index.size()},
                       {"train", data.split.train.size()},
                       {"val", data.split.validation.size()},
                       {"test", data.split.test.size()},
                       {"users", data.users.n_users}};
  write_text(run_dir / "header.json", header.dump(2) + "\n");

  const bool csv = std::find(cfg.logging.formats.begin(), cfg.logging.formats.end(), "csv") !=
                   cfg.logging.formats.end();
  std::ofstream metrics_log(run_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  std::ofstream timing_log(run_dir / "timing.jsonl", std::ios::binary | std::ios::trunc);
  std::ofstream csv_log;
  const std::vector<std::string> names = metrics::metric_names(eval_options(cfg, data));
  if (csv) {
    csv_log.open(run_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    csv_log << "step,epoch,train_loss";
    for (const auto& n : names) csv_log << ',' << n;
    csv_log << '\n';
  }
  auto record = [&](int epoch, long step, std::optional<double> train_loss,
                    const metrics::EvalReport& val) {
    json r;
    r["step"] = step;
    r["epoch"] = epoch;
    r["train_loss"] = train_loss ? json(*train_loss) : json(nullptr);
    r["val_metrics"] = metric_means(val);
    metrics_log << r.dump() << '\n' << std::flush;
    json t = {{"epoch", epoch}, {"step", step}, {"wall_time", elapsed()}, {"rss_bytes", rss_bytes()}};
    timing_log << t.dump() << '\n' << std::flush;
    if (csv) {
      csv_log << step << ',' << epoch << ',';
      if (train_loss) csv_log << json(*train_loss).dump();
      for (const auto& n : names) csv_log << ',' << json(val.at(n).mean).dump();
      csv_log << '\n' << std::flush;
    }
    if (!metrics_log || !timing_log) throw Error("failed writing run log in " + run_dir.string());
  };

  const fs::path ckpt_dir = run_dir / "checkpoints";
  fs::create_directories(ckpt_dir);
  result.checkpoint = ckpt_dir / "best.ckpt";

  metrics::EvalReport val = evaluate_model(model, data, "val", cfg);
  record(0, 0, std::nullopt, val);
  double best = monitored(val, cfg.train.keep_best_on);
  result.best_epoch = 0;
  result.best_value = best;
  nn::save_checkpoint(model.store(), result.checkpoint, nn::DType::kF32);
  say(log, "epoch 0: val " + cfg.train.keep_best_on + " " + std::to_string(best));

  Trainer trainer(cfg, data, model);
  std::optional<double> es_best;
  int bad_epochs = 0;
  for (int epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    std::size_t skipped = 0;
    const auto samples = trainer.epoch_samples(epoch, skipped);
    if (samples.empty()) throw DataError("no trainable samples in the training split");
    double loss_sum = 0.0;
    const std::size_t bs = cfg.train.batch_size;
    for (std::size_t b = 0, batch = 0; b < samples.size(); b += bs, ++batch) {
      const std::size_t e = std::min(samples.size(), b + bs);
      const double l = trainer.step(std::span(samples).subspan(b, e - b),
                                    mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch), batch + 1),
                                    trainer.steps() + 1);
      loss_sum += l * static_cast<double>(e - b);
    }
    const double train_loss = loss_sum / static_cast<double>(samples.size());
    val = evaluate_model(model, data, "val", cfg);
    record(epoch, trainer.steps(), train_loss, val);
    result.epochs_completed = epoch;

    double keep = monitored(val, cfg.train.keep_best_on);
    double watch = monitored(val, cfg.train.early_stop_metric);
    if (hooks.validation_override) {
      if (auto v = hooks.validation_override(epoch)) keep = watch = *v;
    }
    say(log, "epoch " + std::to_string(epoch) + ": loss " + std::to_string(train_loss) +
                 ", val " + cfg.train.keep_best_on + " " + std::to_string(keep) +
                 (skipped ? ", skipped " + std::to_string(skipped) : ""));
    if (keep > best) {
      best = keep;
      result.best_epoch = epoch;
      result.best_value = keep;
      nn::save_checkpoint(model.store(), result.checkpoint, nn::DType::kF32);
    }
    if (!es_best || watch > *es_best) {
      es_best = watch;
      bad_epochs = 0;
    } else if (++bad_epochs >= cfg.train.patience && epoch < cfg.train.epochs) {
      result.stopped_early = true;
      say(log, "early stop after epoch " + std::to_string(epoch));
      break;
    }
  }

  nn::load_checkpoint(model.store(), result.checkpoint);
  result.final_eval = evaluate_model(model, data, cfg.eval.split, cfg);
  result.final_eval.checkpoint = result.checkpoint.string();
  write_eval(result.final_eval, run_dir, cfg.eval.spill_per_impression);
  json t = {{"event", "done"}, {"wall_time", elapsed()}, {"rss_bytes", rss_bytes()}};
  timing_log << t.dump() << '\n';
  return result;
}

metrics::EvalReport evaluate_checkpoint(const ResolvedConfig& rc, const fs::path& out,
                                        const fs::path& checkpoint, const fs::path& run_dir,
                                        std::ostream* log) {
  if (!fs::exists(checkpoint)) throw Error("checkpoint not found: " + checkpoint.string());
  const ExperimentConfig cfg = to_experiment(rc.tree);
  const Dataset ds = prepare_dataset(rc, out, false, log);
  nn::PrecisionScope f32(nn::Precision::kFloat32);
  Recommender model = build_model(cfg, ds.data, log);
  const auto loaded = nn::load_checkpoint(model.store(), checkpoint);
  if (!loaded.unused.empty()) {
    std::string names;
    for (const auto& n : loaded.unused) names += (names.empty() ? "" : ", ") + n;
    say(log, "checkpoint tensors not used by this model: " + names);
  }
  auto report = evaluate_model(model, ds.data, cfg.eval.split, cfg);
  report.checkpoint = checkpoint.string();
  fs::create_directories(run_dir);
  write_eval(report, run_dir, cfg.eval.spill_per_impression);
  return report;
}

}  // namespace newsrec::engine
