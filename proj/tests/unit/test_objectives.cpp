#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "newsrec/common/error.hpp"
#include "newsrec/nn/grad_check.hpp"
#include "newsrec/nn/ops.hpp"
#include "newsrec/objectives/losses.hpp"
#include "test_support.hpp"

using namespace newsrec;
using namespace newsrec::objectives;
using newsrec::testing::random_tensor;
using nn::Tensor;

namespace {

Tensor vec(std::vector<double> v, bool grad = false) {
  const std::size_t n = v.size();
  return Tensor::from_data({n}, std::move(v), grad);
}

double logsumexp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

double grad_norm(const Tensor& t) {
  double s = 0;
  for (double g : t.grad()) s += g * g;
  return std::sqrt(s);
}

}  // namespace

TEST(CeLoss, EqualScoresGiveLogK) {
  EXPECT_NEAR(ce_loss(vec({0.3, 0.3, 0.3, 0.3, 0.3})).item(), std::log(5.0), 1e-12);
}

TEST(CeLoss, LargeMarginIsNearZero) {
  EXPECT_LT(ce_loss(vec({20, 0, 0, 0, 0})).item(), 1e-8);
  EXPECT_GE(ce_loss(vec({20, 0, 0, 0, 0})).item(), 0.0);
}

TEST(CeLoss, MatchesOracleAndGradCheck) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_vec(2 + trial % 6, rng, 3.0);
    const std::size_t pos = trial % s.size();
    EXPECT_NEAR(ce_loss(vec(s), pos).item(), logsumexp(s) - s[pos], 1e-12);
    const auto r = nn::grad_check(
        [pos](std::span<const Tensor> in) { return ce_loss(in[0], pos); }, {vec(s, true)});
    EXPECT_TRUE(r.passed) << r.max_rel_error;
  }
}

TEST(CeLoss, RejectsDegenerateInput) {
  EXPECT_THROW(ce_loss(vec({1.0})), Error);
  EXPECT_THROW(ce_loss(vec({1.0, 2.0}), 2), Error);
  EXPECT_THROW(ce_loss(vec({1.0, std::nan("")})), Error);
}

TEST(SclLoss, EqualScoresGiveLogK) {
  const std::vector<int> y = {1, 0, 0, 0, 0};
  EXPECT_NEAR(scl_loss(vec({1, 1, 1, 1, 1}), y, 0.1).item(), std::log(5.0), 1e-12);
}

TEST(SclLoss, GradientScalesInverselyWithTemperature) {
  const std::vector<int> y = {1, 0, 0, 0};
  double norms[2];
  const double taus[2] = {0.1, 0.05};
  for (int i = 0; i < 2; ++i) {
    const Tensor s = vec({0.5, 0.5, 0.5, 0.5}, true);
    scl_loss(s, y, taus[i]).backward();
    norms[i] = grad_norm(s);
  }
  EXPECT_NEAR(norms[1] / norms[0], 2.0, 1e-12);
}

TEST(SclLoss, TwoPositivesMatchOracle) {
  std::mt19937_64 rng(2);
  const std::vector<int> y = {1, 0, 1, 0, 0};
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_vec(5, rng);
    const double tau = 0.05 + 0.1 * trial;
    std::vector<double> scaled(s);
    for (double& v : scaled) v /= tau;
    const double lse = logsumexp(scaled);
    const double oracle = 0.5 * ((lse - scaled[0]) + (lse - scaled[2]));
    EXPECT_NEAR(scl_loss(vec(s), y, tau).item(), oracle, 1e-9);
    const auto r = nn::grad_check(
        [&](std::span<const Tensor> in) { return scl_loss(in[0], y, tau); }, {vec(s, true)});
    EXPECT_TRUE(r.passed) << r.max_rel_error;
  }
}

TEST(SclLoss, RejectsSingleClassImpressions) {
  EXPECT_THROW(scl_loss(vec({1, 2}), std::vector<int>{1, 1}, 0.1), Error);
  EXPECT_THROW(scl_loss(vec({1, 2}), std::vector<int>{0, 0}, 0.1), Error);
  EXPECT_THROW(scl_loss(vec({1, 2}), std::vector<int>{1, 0}, 0.0), Error);
}

TEST(DualLoss, EndpointsAndMidpoint) {
  std::mt19937_64 rng(3);
  const std::vector<int> y = {1, 0, 0, 1};
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor s = vec(random_vec(4, rng));
    const Tensor ce = ce_loss(s, 0);
    const Tensor scl = scl_loss(s, y, 0.2);
    EXPECT_EQ(dual_loss(ce, scl, 0.0).item(), ce.item());
    EXPECT_EQ(dual_loss(ce, scl, 1.0).item(), scl.item());
  }
  EXPECT_DOUBLE_EQ(dual_loss(Tensor::scalar(2.0), Tensor::scalar(4.0), 0.5).item(), 3.0);
  EXPECT_THROW(dual_loss(Tensor::scalar(2.0), Tensor::scalar(4.0), 1.5), Error);
}

TEST(TanrAux, UniformLogitsGiveLogC) {
  EXPECT_NEAR(tanr_aux(Tensor::zeros({10}), 3).item(), std::log(10.0), 1e-12);
}

TEST(TanrAux, ConfidentCorrectLogitIsNearZero) {
  std::vector<double> l(10, 0.0);
  l[7] = 40.0;
  EXPECT_LT(tanr_aux(vec(l), 7).item(), 1e-12);
  EXPECT_THROW(tanr_aux(vec(l), 10), Error);
}

TEST(TanrAux, GradCheck) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = nn::grad_check(
        [trial](std::span<const Tensor> in) { return tanr_aux(in[0], trial % 6); },
        {vec(random_vec(6, rng, 2.0), true)});
    EXPECT_TRUE(r.passed) << r.max_rel_error;
  }
}

TEST(SentiRec, ZeroWeightsGiveZero) {
  std::mt19937_64 rng(5);
  const Tensor e = random_tensor({3, 4}, rng);
  const Tensor w = random_tensor({4, 1}, rng), b = random_tensor({1}, rng);
  const std::vector<double> truth = {0.1, -0.4, 0.9};
  const std::vector<double> cs = {0.5, -0.5, 0.2};
  EXPECT_EQ(sentirec_aux(e, w, b, truth, vec({1, 2, 3}), cs, 0.7, 0.0, 0.0).item(), 0.0);
}

TEST(SentiRec, PerfectPredictionAndNeutralHistoryGiveZero) {
  // w = 0 and b = atanh(t) predict t for every row
  const double t = 0.3;
  const Tensor e = Tensor::full({2, 4}, 1.0);
  const Tensor w = Tensor::zeros({4, 1});
  const Tensor b = vec({std::atanh(t)});
  const std::vector<double> truth = {t, t};
  const std::vector<double> cs = {0.8, -0.6};
  EXPECT_NEAR(sentirec_aux(e, w, b, truth, vec({1, 2}), cs, 0.0, 0.4, 0.4).item(), 0.0, 1e-15);
}

TEST(SentiRec, OpposedSentimentsAreNotPenalized) {
  const std::vector<double> cs = {-0.8, -0.1, -0.5};
  EXPECT_EQ(sentiment_diversity_regularizer(vec({3, 1, 2}), cs, 0.6).item(), 0.0);
  const std::vector<double> same = {0.5, 0.5, 0.5};
  EXPECT_NEAR(sentiment_diversity_regularizer(vec({3, 1, 2}), same, 0.6).item(), 0.3, 1e-12);
}

TEST(SentiRec, RegularizerMatchesOracle) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_vec(6, rng);
    const auto cs = random_vec(6, rng, 0.5);
    const double hist = random_vec(1, rng, 0.5)[0];
    const double lse = logsumexp(s);
    double oracle = 0;
    for (std::size_t i = 0; i < 6; ++i) oracle += std::exp(s[i] - lse) * std::max(0.0, cs[i] * hist);
    EXPECT_NEAR(sentiment_diversity_regularizer(vec(s), cs, hist).item(), oracle, 1e-12);
  }
}

TEST(SentiRec, GradCheck) {
  std::mt19937_64 rng(7);
  const std::vector<double> truth = {0.2, -0.3, 0.5};
  const std::vector<double> cs = {0.4, -0.2, 0.9, 0.1};
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = nn::grad_check(
        [&](std::span<const Tensor> in) {
          return sentirec_aux(in[0], in[1], in[2], truth, in[3], cs, 0.35, 0.4, 0.4);
        },
        {random_tensor({3, 4}, rng, 0.5, true), random_tensor({4, 1}, rng, 0.5, true),
         random_tensor({1}, rng, 0.5, true), random_tensor({4}, rng, 1.0, true)});
    EXPECT_TRUE(r.passed) << r.max_rel_error;
  }
}

TEST(Objectives, PermutationAndShiftInvariance) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = random_vec(6, rng, 2.0);
    std::vector<int> y = {1, 0, 1, 0, 0, 0};
    const double ce = ce_loss(vec(s), 0).item();
    const double scl = scl_loss(vec(s), y, 0.3).item();

    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> ps(6);
    std::vector<int> py(6);
    std::size_t new_pos = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      ps[i] = s[perm[i]];
      py[i] = y[perm[i]];
      if (perm[i] == 0) new_pos = i;
    }
    EXPECT_NEAR(ce_loss(vec(ps), new_pos).item(), ce, 1e-12);
    EXPECT_NEAR(scl_loss(vec(ps), py, 0.3).item(), scl, 1e-12);

    const double c = random_vec(1, rng, 10.0)[0];
    for (double& v : s) v += c;
    EXPECT_NEAR(ce_loss(vec(s), 0).item(), ce, 1e-9);
    EXPECT_NEAR(scl_loss(vec(s), y, 0.3).item(), scl, 1e-9);
    EXPECT_GE(ce, 0.0);
    EXPECT_GE(scl, 0.0);
  }
}

TEST(Objectives, ConfigValidationAndParsing) {
  LossConfig c;
  EXPECT_NO_THROW(c.validate());
  c.temperature = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.dual_weight = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.tanr_weight = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  for (auto k : {LossKind::kCe, LossKind::kScl, LossKind::kDual})
    EXPECT_EQ(parse_loss(to_string(k)), k);
  for (auto k : {AuxKind::kNone, AuxKind::kTanr, AuxKind::kSentiRec})
    EXPECT_EQ(parse_aux(to_string(k)), k);
  EXPECT_THROW(parse_loss("bpr"), ConfigError);
  EXPECT_THROW(parse_aux("dro"), ConfigError);
}
