#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsrec/data/types.hpp"

namespace newsrec::metrics {

// Single-pass mean / population standard deviation (Welford).
class RunningStat {
 public:
  void add(double x);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double stddev() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  std::size_t skipped = 0;
};

struct ImpressionValue {
  std::string impression_id;
  std::string metric;
  double value = 0.0;
};

struct EvalReport {
  std::string split;
  std::string checkpoint;
  std::uint64_t seed = 0;
  std::size_t impressions = 0;
  std::vector<std::string> order;  // metric names in report order
  std::map<std::string, MetricSummary> metrics;
  std::vector<ImpressionValue> per_impression;  // filled when requested

  const MetricSummary& at(const std::string& metric) const;
  nlohmann::ordered_json to_json() const;
  void write_json(const std::filesystem::path& path) const;
  // Columns: impression_id,metric,value.
  void write_csv(const std::filesystem::path& path) const;
};

enum class Aspect { kCategory, kSentiment };
Aspect parse_aspect(const std::string& s);
std::string aspect_tag(Aspect a);  // "ctg" / "snt"

struct EvalOptions {
  std::vector<std::size_t> ks = {5, 10};
  std::vector<Aspect> aspects = {Aspect::kCategory, Aspect::kSentiment};
  std::size_t n_categories = 1;
  bool keep_per_impression = false;
};

// Metric names produced for the given options, in report order.
std::vector<std::string> metric_names(const EvalOptions& options);

using Scorer = std::function<std::vector<double>(const data::Impression&)>;

// Macro averages over impressions. Impressions undefined for a metric are
// counted as skipped for it; throws when no impression yields any value.
EvalReport evaluate_split(const Scorer& scorer, std::span<const data::Impression> impressions,
                          const data::NewsIndex& news, const EvalOptions& options);

}  // namespace newsrec::metrics
