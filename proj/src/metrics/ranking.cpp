#include "newsrec/metrics/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "newsrec/common/error.hpp"

namespace newsrec::metrics {
namespace {

void check(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error("metric: " + std::to_string(scores.size()) + " scores vs " +
                std::to_string(labels.size()) + " labels");
  }
}

std::map<int, double> distribution(std::span<const int> aspects) {
  std::map<int, double> p;
  for (int a : aspects) p[a] += 1.0;
  for (auto& [a, v] : p) v /= static_cast<double>(aspects.size());
  return p;
}

}  // namespace

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::optional<double> auc(std::span<const double> scores, std::span<const int> labels) {
  check(scores, labels);
  // Rank-sum with midranks for ties.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + j) + 1.0) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum += midrank;
        ++pos;
      } else {
        ++neg;
      }
    }
    i = j;
  }
  if (pos == 0 || neg == 0) return std::nullopt;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::optional<double> mrr(std::span<const double> scores, std::span<const int> labels) {
  check(scores, labels);
  const auto order = rank_order(scores);
  double total = 0;
  std::size_t positives = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] == 1) {
      total += 1.0 / static_cast<double>(r + 1);
      ++positives;
    }
  }
  if (positives == 0) return std::nullopt;
  return total / static_cast<double>(positives);
}

std::optional<double> ndcg_at_k(std::span<const double> scores, std::span<const int> labels,
                                std::size_t k) {
  check(scores, labels);
  if (k == 0) throw Error("ndcg_at_k: k must be >= 1");
  const auto order = rank_order(scores);
  const std::size_t positives =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0) return std::nullopt;
  double dcg = 0, idcg = 0;
  for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
    const double discount = 1.0 / std::log2(static_cast<double>(r) + 2.0);
    if (labels[order[r]] == 1) dcg += discount;
    if (r < positives) idcg += discount;
  }
  return dcg / idcg;
}

double aspect_diversity_at_k(std::span<const int> topk_aspects, std::size_t n_classes) {
  const std::size_t support = std::min(topk_aspects.size(), n_classes);
  if (support < 2) return 0.0;
  double h = 0;
  for (const auto& [a, p] : distribution(topk_aspects)) h -= p * std::log(p);
  return std::clamp(h / std::log(static_cast<double>(support)), 0.0, 1.0);
}

std::optional<double> aspect_personalization_at_k(std::span<const int> topk_aspects,
                                                  std::span<const int> history_aspects) {
  if (topk_aspects.empty() || history_aspects.empty()) return std::nullopt;
  const auto p = distribution(topk_aspects);
  const auto q = distribution(history_aspects);
  std::map<int, std::pair<double, double>> joint;
  for (const auto& [a, v] : p) joint[a].first = v;
  for (const auto& [a, v] : q) joint[a].second = v;
  double lo = 0, hi = 0;
  for (const auto& [a, pq] : joint) {
    lo += std::min(pq.first, pq.second);
    hi += std::max(pq.first, pq.second);
  }
  return lo / hi;
}

}  // namespace newsrec::metrics
