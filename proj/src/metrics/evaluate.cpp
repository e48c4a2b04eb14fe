#include "newsrec/metrics/evaluate.hpp"

#include <cmath>
#include <fstream>

#include "newsrec/common/error.hpp"
#include "newsrec/metrics/ranking.hpp"

namespace newsrec::metrics {

void RunningStat::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningStat::stddev() const {
  return n_ == 0 ? 0.0 : std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_)));
}

const MetricSummary& EvalReport::at(const std::string& metric) const {
  auto it = metrics.find(metric);
  if (it == metrics.end()) throw Error("metric '" + metric + "' not in report");
  return it->second;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["split"] = split;
  j["checkpoint"] = checkpoint;
  j["seed"] = seed;
  j["impressions"] = impressions;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& name : order) {
    const auto& s = metrics.at(name);
    m[name] = {{"mean", s.mean}, {"std", s.std}, {"n", s.n}, {"skipped", s.skipped}};
  }
  j["metrics"] = m;
  return j;
}

void EvalReport::write_json(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  out << to_json().dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  out << "impression_id,metric,value\n";
  char buf[32];
  for (const auto& r : per_impression) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.impression_id << ',' << r.metric << ',' << buf << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

Aspect parse_aspect(const std::string& s) {
  if (s == "category") return Aspect::kCategory;
  if (s == "sentiment") return Aspect::kSentiment;
  throw ConfigError("unknown aspect '" + s + "' (expected category or sentiment)");
}

std::string aspect_tag(Aspect a) { return a == Aspect::kCategory ? "ctg" : "snt"; }

std::vector<std::string> metric_names(const EvalOptions& options) {
  std::vector<std::string> names = {"auc", "mrr"};
  for (auto k : options.ks) names.push_back("ndcg@" + std::to_string(k));
  for (auto a : options.aspects) {
    for (auto k : options.ks) names.push_back("d_" + aspect_tag(a) + "@" + std::to_string(k));
  }
  for (auto a : options.aspects) {
    for (auto k : options.ks) names.push_back("ps_" + aspect_tag(a) + "@" + std::to_string(k));
  }
  return names;
}

EvalReport evaluate_split(const Scorer& scorer, std::span<const data::Impression> impressions,
                          const data::NewsIndex& news, const EvalOptions& options) {
  for (auto k : options.ks) {
    if (k == 0) throw ConfigError("evaluation cutoffs must be >= 1");
  }
  EvalReport report;
  report.order = metric_names(options);
  std::map<std::string, RunningStat> stats;
  std::map<std::string, std::size_t> skipped;
  for (const auto& name : report.order) skipped[name] = 0;

  auto aspect_of = [&](const std::string& id, Aspect a) {
    const data::NewsItem* item = news.find(id);
    if (!item) throw DataError("news id '" + id + "' missing from the news index");
    return a == Aspect::kCategory ? item->category_id : static_cast<int>(item->sentiment_class);
  };
  auto n_classes = [&](Aspect a) {
    return a == Aspect::kCategory ? options.n_categories
                                  : static_cast<std::size_t>(data::kSentimentClasses);
  };

  for (const data::Impression& imp : impressions) {
    const std::vector<double> scores = scorer(imp);
    if (scores.size() != imp.candidates.size()) {
      throw Error("scorer returned " + std::to_string(scores.size()) + " scores for " +
                  std::to_string(imp.candidates.size()) + " candidates");
    }
    for (double s : scores) {
      if (!std::isfinite(s)) throw Error("non-finite score in impression " + imp.impression_id);
    }
    std::vector<int> labels;
    for (const auto& c : imp.candidates) labels.push_back(c.label);
    auto record = [&](const std::string& name, std::optional<double> v) {
      if (!v) {
        ++skipped[name];
        return;
      }
      stats[name].add(*v);
      if (options.keep_per_impression) {
        report.per_impression.push_back({imp.impression_id, name, *v});
      }
    };
    record("auc", auc(scores, labels));
    record("mrr", mrr(scores, labels));
    for (auto k : options.ks) record("ndcg@" + std::to_string(k), ndcg_at_k(scores, labels, k));

    const auto order = rank_order(scores);
    for (auto a : options.aspects) {
      std::vector<int> hist;
      for (const auto& h : imp.history) hist.push_back(aspect_of(h, a));
      for (auto k : options.ks) {
        std::vector<int> top;
        for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
          top.push_back(aspect_of(imp.candidates[order[r]].news_id, a));
        }
        const std::string suffix = aspect_tag(a) + "@" + std::to_string(k);
        record("d_" + suffix, aspect_diversity_at_k(top, n_classes(a)));
        record("ps_" + suffix, aspect_personalization_at_k(top, hist));
      }
    }
    ++report.impressions;
  }

  bool any = false;
  for (const auto& name : report.order) {
    MetricSummary s;
    s.skipped = skipped[name];
    if (auto it = stats.find(name); it != stats.end()) {
      s.mean = it->second.mean();
      s.std = it->second.stddev();
      s.n = it->second.count();
      any = any || s.n > 0;
    }
    report.metrics[name] = s;
  }
  if (!any || report.metrics["auc"].n == 0) {
    throw Error("evaluation skipped every impression (no impression with both clicks and "
                "non-clicks)");
  }
  return report;
}

}  // namespace newsrec::metrics
