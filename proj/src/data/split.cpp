#include "newsrec/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "newsrec/common/error.hpp"

namespace newsrec::data {

DatasetSplit temporal_split(std::vector<Impression> impressions, double val_fraction) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw DataError("val_fraction must lie in (0, 1), got " + std::to_string(val_fraction));
  }
  if (impressions.size() < 2) {
    throw DataError("temporal split needs at least 2 impressions, got " +
                    std::to_string(impressions.size()));
  }
  std::stable_sort(impressions.begin(), impressions.end(),
                   [](const Impression& a, const Impression& b) { return a.timestamp < b.timestamp; });
  if (impressions.front().timestamp == impressions.back().timestamp) {
    throw DataError("temporal split impossible: all impressions share timestamp " +
                    std::to_string(impressions.front().timestamp));
  }
  const std::size_t n = impressions.size();
  const auto n_val = static_cast<std::size_t>(std::ceil(val_fraction * static_cast<double>(n)));
  const std::int64_t boundary = impressions[n - std::min(n_val, n)].timestamp;
  auto first_val = std::lower_bound(
      impressions.begin(), impressions.end(), boundary,
      [](const Impression& imp, std::int64_t ts) { return imp.timestamp < ts; });
  if (first_val == impressions.begin()) {
    throw DataError("temporal split leaves the training portion empty (boundary timestamp " +
                    std::to_string(boundary) + " is the earliest)");
  }
  DatasetSplit split;
  split.validation.assign(std::make_move_iterator(first_val),
                          std::make_move_iterator(impressions.end()));
  impressions.erase(first_val, impressions.end());
  split.train = std::move(impressions);
  return split;
}

void truncate_history(Impression& impression, std::size_t max_history) {
  auto& h = impression.history;
  if (h.size() > max_history) h.erase(h.begin(), h.end() - static_cast<std::ptrdiff_t>(max_history));
}

std::optional<std::vector<TrainingTuple>> negative_sample_training(const Impression& impression,
                                                                   int k, std::uint64_t seed) {
  if (k < 1) throw DataError("negative sample count must be >= 1");
  std::vector<const std::string*> positives, negatives;
  for (const Candidate& c : impression.candidates)
    (c.label == 1 ? positives : negatives).push_back(&c.news_id);
  if (positives.empty() || negatives.empty()) return std::nullopt;

  std::mt19937_64 rng(seed);
  const auto kk = static_cast<std::size_t>(k);
  std::vector<TrainingTuple> tuples;
  tuples.reserve(positives.size());
  for (const std::string* pos : positives) {
    TrainingTuple t;
    t.positive = *pos;
    if (negatives.size() >= kk) {
      std::vector<const std::string*> pool = negatives;
      for (std::size_t i = 0; i < kk; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        t.negatives.push_back(*pool[i]);
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, negatives.size() - 1);
      for (std::size_t i = 0; i < kk; ++i) t.negatives.push_back(*negatives[pick(rng)]);
    }
    tuples.push_back(std::move(t));
  }
  return tuples;
}

UserAssignment assign_user_ids(DatasetSplit& split) {
  UserAssignment out;
  std::unordered_map<std::string, std::int64_t> ids;
  for (Impression& imp : split.train) {
    auto [it, inserted] = ids.emplace(imp.user_key, static_cast<std::int64_t>(ids.size()));
    if (inserted) out.users.push_back(imp.user_key);
    imp.user_id = it->second;
  }
  out.n_users = ids.size();
  out.cold_id = static_cast<std::int64_t>(out.n_users);
  for (auto* part : {&split.validation, &split.test}) {
    for (Impression& imp : *part) {
      auto it = ids.find(imp.user_key);
      imp.user_id = it == ids.end() ? out.cold_id : it->second;
    }
  }
  return out;
}

}  // namespace newsrec::data
