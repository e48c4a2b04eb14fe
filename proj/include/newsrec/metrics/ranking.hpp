#pragma once

#include <optional>
#include <span>
#include <vector>

namespace newsrec::metrics {

// Per-impression metrics. Each returns nullopt when the impression is
// undefined for that metric (e.g. single-class for AUC); callers count those
// as skipped.

// Fraction of (positive, negative) pairs ordered correctly, ties count 1/2.
std::optional<double> auc(std::span<const double> scores, std::span<const int> labels);

// Mean reciprocal rank over all positives. Ranks sort by descending score,
// ties broken by input order.
std::optional<double> mrr(std::span<const double> scores, std::span<const int> labels);

// Binary-relevance nDCG over the top k of the same ranking.
std::optional<double> ndcg_at_k(std::span<const double> scores, std::span<const int> labels,
                                std::size_t k);

// Normalized Shannon entropy of the aspect distribution of the top-k list:
// H(p) / ln(min(k, n_classes)). Zero when the normalizer is below 2 classes.
double aspect_diversity_at_k(std::span<const int> topk_aspects, std::size_t n_classes);

// Generalized Jaccard sum_a min(p_a, q_a) / sum_a max(p_a, q_a) between the
// aspect frequency distributions. nullopt if either list is empty.
std::optional<double> aspect_personalization_at_k(std::span<const int> topk_aspects,
                                                  std::span<const int> history_aspects);

// Candidate indices by descending score, ties in input order.
std::vector<std::size_t> rank_order(std::span<const double> scores);

}  // namespace newsrec::metrics
