#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "newsrec/metrics/evaluate.hpp"
#include "newsrec/metrics/ranking.hpp"

using namespace newsrec;
using namespace newsrec::metrics;

namespace {

// Pairwise enumeration, ties worth one half.
double auc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double good = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      if (s[i] > s[j]) good += 1;
      if (s[i] == s[j]) good += 0.5;
    }
  }
  return good / pairs;
}

// Rank of candidate i: 1 + items scored higher + tied items earlier in input.
std::size_t rank_of(const std::vector<double>& s, std::size_t i) {
  std::size_t r = 1;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] > s[i] || (s[j] == s[i] && j < i)) ++r;
  }
  return r;
}

double mrr_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double total = 0;
  int n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] == 1) {
      total += 1.0 / static_cast<double>(rank_of(s, i));
      ++n;
    }
  }
  return total / n;
}

double ndcg_oracle(const std::vector<double>& s, const std::vector<int>& y, std::size_t k) {
  std::vector<int> by_rank(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) by_rank[rank_of(s, i) - 1] = y[i];
  std::vector<int> ideal(y);
  std::sort(ideal.rbegin(), ideal.rend());
  double dcg = 0, idcg = 0;
  for (std::size_t r = 0; r < k && r < s.size(); ++r) {
    dcg += by_rank[r] / std::log2(r + 2.0);
    idcg += ideal[r] / std::log2(r + 2.0);
  }
  return dcg / idcg;
}

struct RandomImpression {
  std::vector<double> scores;
  std::vector<int> labels;
};

RandomImpression random_impression(std::mt19937_64& rng, bool coarse) {
  std::uniform_int_distribution<int> len(2, 20);
  const int m = len(rng);
  RandomImpression r;
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_int_distribution<int> grid(0, 4);
  std::bernoulli_distribution click(0.3);
  for (int i = 0; i < m; ++i) {
    r.scores.push_back(coarse ? grid(rng) : u(rng));
    r.labels.push_back(click(rng));
  }
  r.labels[0] = 1;
  r.labels[1] = 0;
  std::shuffle(r.labels.begin(), r.labels.end(), rng);
  return r;
}

}  // namespace

TEST(Auc, PerfectOrder) { EXPECT_DOUBLE_EQ(*auc(std::vector{0.9, 0.2}, std::vector{1, 0}), 1.0); }

TEST(Auc, TieCountsHalf) { EXPECT_DOUBLE_EQ(*auc(std::vector{0.5, 0.5}, std::vector{1, 0}), 0.5); }

TEST(Auc, FourPairs) {
  EXPECT_DOUBLE_EQ(*auc(std::vector{0.9, 0.8, 0.3, 0.1}, std::vector{1, 0, 1, 0}), 0.75);
}

TEST(Auc, SingleClassUndefined) {
  EXPECT_FALSE(auc(std::vector{0.1, 0.2}, std::vector{1, 1}).has_value());
  EXPECT_FALSE(auc(std::vector{0.1, 0.2}, std::vector{0, 0}).has_value());
}

TEST(Mrr, Definition) {
  EXPECT_DOUBLE_EQ(*mrr(std::vector{0.9, 0.1, 0.2}, std::vector{1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(*mrr(std::vector{0.5, 0.9, 0.1, 0.8, 0.2}, std::vector{1, 0, 0, 0, 0}),
                   1.0 / 3.0);
  EXPECT_DOUBLE_EQ(*mrr(std::vector{0.9, 0.8, 0.7, 0.6, 0.5}, std::vector{1, 0, 0, 1, 0}), 0.625);
}

TEST(Ndcg, HandValues) {
  EXPECT_DOUBLE_EQ(*ndcg_at_k(std::vector{0.9, 0.5, 0.1}, std::vector{1, 1, 0}, 3), 1.0);
  const double v = *ndcg_at_k(std::vector{0.9, 0.5, 0.1}, std::vector{1, 0, 1}, 3);
  EXPECT_NEAR(v, 1.5 / (1.0 + 1.0 / std::log2(3.0)), 1e-15);
  EXPECT_NEAR(v, 0.9197, 1e-4);
  EXPECT_DOUBLE_EQ(*ndcg_at_k(std::vector{0.9, 0.5, 0.1}, std::vector{1, 0, 1}, 1), 1.0);
}

TEST(RankingMetrics, MatchBruteForceOracles) {
  std::mt19937_64 rng(20240611);
  for (int n = 0; n < 1000; ++n) {
    const auto r = random_impression(rng, n % 2 == 0);
    ASSERT_NEAR(*auc(r.scores, r.labels), auc_oracle(r.scores, r.labels), 1e-9);
    ASSERT_NEAR(*mrr(r.scores, r.labels), mrr_oracle(r.scores, r.labels), 1e-9);
    for (std::size_t k : {5u, 10u}) {
      ASSERT_NEAR(*ndcg_at_k(r.scores, r.labels, k), ndcg_oracle(r.scores, r.labels, k), 1e-9);
    }
  }
}

TEST(RankingMetrics, Bounded) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 300; ++n) {
    const auto r = random_impression(rng, n % 3 == 0);
    for (double v : {*auc(r.scores, r.labels), *mrr(r.scores, r.labels)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    for (std::size_t k = 1; k <= r.scores.size() + 2; ++k) {
      const double v = *ndcg_at_k(r.scores, r.labels, k);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0 + 1e-15);
    }
  }
}

TEST(RankingMetrics, NdcgMonotoneInKWithOnePositive) {
  std::mt19937_64 rng(6);
  for (int n = 0; n < 300; ++n) {
    auto r = random_impression(rng, n % 3 == 0);
    std::fill(r.labels.begin(), r.labels.end(), 0);
    r.labels[n % r.labels.size()] = 1;
    double prev = 0.0;
    for (std::size_t k = 1; k <= r.scores.size() + 2; ++k) {
      const double v = *ndcg_at_k(r.scores, r.labels, k);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(RankingMetrics, NdcgCutoffNormalizerCanDropWithSeveralPositives) {
  // ideal DCG is cut at k too, so a hit at rank 1 then a miss lowers the value
  const std::vector<double> s = {0.9, 0.5, 0.1};
  const std::vector<int> y = {1, 0, 1};
  EXPECT_DOUBLE_EQ(*ndcg_at_k(s, y, 1), 1.0);
  EXPECT_NEAR(*ndcg_at_k(s, y, 2), 1.0 / (1.0 + 1.0 / std::log2(3.0)), 1e-15);
}

TEST(RankingMetrics, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(77);
  for (int n = 0; n < 300; ++n) {
    const auto r = random_impression(rng, n % 2 == 0);
    std::vector<double> t(r.scores.size());
    std::transform(r.scores.begin(), r.scores.end(), t.begin(),
                   [](double x) { return std::exp(0.5 * x) + 3.0; });
    EXPECT_DOUBLE_EQ(*auc(r.scores, r.labels), *auc(t, r.labels));
    EXPECT_DOUBLE_EQ(*mrr(r.scores, r.labels), *mrr(t, r.labels));
    EXPECT_DOUBLE_EQ(*ndcg_at_k(r.scores, r.labels, 5), *ndcg_at_k(t, r.labels, 5));
  }
}

TEST(RankOrder, StableOnTies) {
  const auto order = rank_order(std::vector{0.1, 0.5, 0.5, 0.9});
  EXPECT_EQ(order, (std::vector<std::size_t>{3, 1, 2, 0}));
}

TEST(AspectDiversity, Extremes) {
  EXPECT_DOUBLE_EQ(aspect_diversity_at_k(std::vector{3, 3, 3, 3}, 5), 0.0);
  std::vector<int> all(10);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_NEAR(aspect_diversity_at_k(all, 10), 1.0, 1e-15);
}

TEST(AspectDiversity, HandEntropy) {
  const double h = -(0.5 * std::log(0.5) + 2 * 0.25 * std::log(0.25));
  EXPECT_NEAR(h, 1.0397, 1e-4);
  const double d = aspect_diversity_at_k(std::vector{0, 0, 1, 2}, 5);
  EXPECT_NEAR(d, h / std::log(4.0), 1e-15);
  EXPECT_NEAR(d, 0.75, 1e-12);
}

TEST(AspectDiversity, NormalizerUsesFewerOfKAndClasses) {
  // three sentiment classes, ten items: ln 3 normalizer
  const std::vector<int> even = {0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  const double h = -(0.4 * std::log(0.4) + 2 * 0.3 * std::log(0.3));
  EXPECT_NEAR(aspect_diversity_at_k(even, 3), h / std::log(3.0), 1e-15);
  EXPECT_DOUBLE_EQ(aspect_diversity_at_k(std::vector{0}, 3), 0.0);
}

TEST(AspectPersonalization, HandValues) {
  EXPECT_DOUBLE_EQ(*aspect_personalization_at_k(std::vector{0, 1, 1}, std::vector{1, 0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(*aspect_personalization_at_k(std::vector{0, 0}, std::vector{1, 2}), 0.0);
  EXPECT_NEAR(*aspect_personalization_at_k(std::vector{0, 1}, std::vector{0, 2}), 1.0 / 3.0,
              1e-15);
  EXPECT_FALSE(aspect_personalization_at_k(std::vector<int>{}, std::vector{1}).has_value());
}

TEST(RunningStat, MatchesTwoPass) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(4.0, 2.0);
  std::vector<double> xs(500);
  RunningStat s;
  for (double& x : xs) s.add(x = d(rng));
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  EXPECT_NEAR(s.mean(), m, 1e-12);
  EXPECT_NEAR(s.stddev(), std::sqrt(v / xs.size()), 1e-12);
}

namespace {

struct SplitFixture {
  data::NewsIndex news;
  std::vector<data::Impression> impressions;
};

SplitFixture balanced_split(std::size_t n, std::uint64_t seed, int positives = 5) {
  SplitFixture f;
  for (int i = 0; i < 40; ++i) {
    data::NewsItem item;
    item.news_id = "N" + std::to_string(i);
    item.title_tokens = {2};
    item.category_id = i % 4;
    item.sentiment_class = static_cast<data::SentimentClass>(i % 3);
    f.news.add(item);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 39);
  for (std::size_t i = 0; i < n; ++i) {
    data::Impression imp;
    imp.impression_id = std::to_string(i);
    for (int h = 0; h < 5; ++h) imp.history.push_back("N" + std::to_string(pick(rng)));
    for (int c = 0; c < 10; ++c) {
      imp.candidates.push_back({"N" + std::to_string(pick(rng)), c < positives ? 1 : 0});
    }
    f.impressions.push_back(imp);
  }
  return f;
}

}  // namespace

TEST(EvaluateSplit, OracleScorerIsPerfect) {
  const auto f = balanced_split(100, 1, 1);
  EvalOptions opt;
  opt.n_categories = 4;
  const Scorer oracle = [](const data::Impression& imp) {
    std::vector<double> s;
    for (const auto& c : imp.candidates) s.push_back(c.label);
    return s;
  };
  const auto r = evaluate_split(oracle, f.impressions, f.news, opt);
  for (const char* m : {"auc", "mrr", "ndcg@5", "ndcg@10"}) EXPECT_DOUBLE_EQ(r.at(m).mean, 1.0) << m;
  EXPECT_EQ(r.impressions, 100u);
  EXPECT_EQ(r.order, metric_names(opt));
}

TEST(EvaluateSplit, RandomScorerNearHalf) {
  const auto f = balanced_split(1000, 2);
  std::mt19937_64 rng(99);
  const Scorer random = [&](const data::Impression& imp) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> s(imp.candidates.size());
    for (double& x : s) x = u(rng);
    return s;
  };
  EvalOptions opt;
  opt.n_categories = 4;
  const auto r = evaluate_split(random, f.impressions, f.news, opt);
  EXPECT_NEAR(r.at("auc").mean, 0.5, 0.05);
}

TEST(EvaluateSplit, MetricNamesAndSkips) {
  EvalOptions opt;
  opt.ks = {3};
  opt.aspects = {Aspect::kSentiment};
  EXPECT_EQ(metric_names(opt), (std::vector<std::string>{"auc", "mrr", "ndcg@3", "d_snt@3", "ps_snt@3"}));

  auto f = balanced_split(3, 4);
  f.impressions[1].candidates = {{"N1", 1}, {"N2", 1}};
  f.impressions[2].history.clear();
  const Scorer flat = [](const data::Impression& imp) {
    return std::vector<double>(imp.candidates.size(), 0.0);
  };
  const auto r = evaluate_split(flat, f.impressions, f.news, opt);
  EXPECT_EQ(r.at("auc").n, 2u);
  EXPECT_EQ(r.at("auc").skipped, 1u);
  EXPECT_EQ(r.at("ps_snt@3").skipped, 1u);
}

TEST(EvalReport, CsvSpill) {
  const auto f = balanced_split(2, 5);
  EvalOptions opt;
  opt.ks = {5};
  opt.aspects = {};
  opt.keep_per_impression = true;
  const Scorer flat = [](const data::Impression& imp) {
    return std::vector<double>(imp.candidates.size(), 1.0);
  };
  const auto r = evaluate_split(flat, f.impressions, f.news, opt);
  EXPECT_EQ(r.per_impression.size(), 6u);
  const auto dir = std::filesystem::temp_directory_path() / "newsrec_spill.csv";
  r.write_csv(dir);
  std::ifstream in(dir);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "impression_id,metric,value");
  std::filesystem::remove(dir);
}
