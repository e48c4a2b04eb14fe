#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "newsrec/common/error.hpp"
#include "newsrec/nn/blocks.hpp"
#include "newsrec/nn/checkpoint.hpp"
#include "newsrec/nn/grad_check.hpp"
#include "newsrec/nn/ops.hpp"
#include "newsrec/nn/optim.hpp"
#include "test_support.hpp"

using namespace newsrec;
using namespace newsrec::nn;
using newsrec::testing::random_tensor;

namespace {

using Mat = std::vector<std::vector<double>>;

Mat to_mat(const Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

std::vector<double> to_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Mat mat_mul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void expect_close(const Tensor& t, const Mat& m, double tol) {
  ASSERT_EQ(t.rows(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) EXPECT_NEAR(t.at(i, j), m[i][j], tol);
}

void expect_close(const Tensor& t, const std::vector<double>& v, double tol) {
  ASSERT_EQ(t.numel(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(t.at(i), v[i], tol);
}

constexpr int kSeeds = 20;

void expect_grad_ok(const DifferentiableFn& fn, std::vector<Tensor> inputs, int seed) {
  const auto r = grad_check(fn, std::move(inputs));
  EXPECT_TRUE(r.passed) << "seed " << seed << " rel " << r.max_rel_error << " at "
                        << r.worst_location << " " << r.failure;
}

Mask random_mask(std::size_t n, std::mt19937_64& rng) {
  Mask m(n, 1);
  std::bernoulli_distribution drop(0.3);
  for (std::size_t i = 1; i < n; ++i) m[i] = drop(rng) ? 0 : 1;
  return m;
}

}  // namespace

// ---- tensor basics

TEST(Tensor, BackwardThroughSharedNode) {
  const Tensor x = Tensor::from_data({2}, {1.5, -2.0}, true);
  const Tensor y = sum(mul(x, x));
  y.backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 3.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], -4.0);
}

TEST(Tensor, NoGradScopeBuildsNoGraph) {
  const Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
  NoGradScope guard;
  const Tensor y = sum(x);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Tensor, Float32ModeRoundsOutputs) {
  const Tensor a = Tensor::scalar(1.0);
  const Tensor b = Tensor::scalar(1e-10);
  EXPECT_NE(add(a, b).item(), 1.0);
  PrecisionScope f32(Precision::kFloat32);
  EXPECT_EQ(add(a, b).item(), 1.0);
  EXPECT_EQ(scale(Tensor::scalar(0.1), 1.0).item(), static_cast<double>(0.1f));
}

TEST(Ops, ShapeMismatchThrows) {
  EXPECT_THROW(add(Tensor::zeros({2}), Tensor::zeros({3})), Error);
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), Error);
}

TEST(Ops, MaskedSoftmaxSumsToOne) {
  std::mt19937_64 rng(1);
  for (int s = 0; s < 50; ++s) {
    const Tensor x = random_tensor({7}, rng, 3.0);
    const Mask m = random_mask(7, rng);
    const Tensor p = masked_softmax(x, m);
    double total = 0;
    for (std::size_t i = 0; i < 7; ++i) {
      if (!m[i]) EXPECT_EQ(p.at(i), 0.0);
      total += p.at(i);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_THROW(masked_softmax(Tensor::zeros({2}), Mask{0, 0}), Error);
}

TEST(Ops, LogSoftmaxStableForLargeInputs) {
  const Tensor x = Tensor::from_data({3}, {1000.0, 999.0, -1000.0});
  const Tensor l = log_softmax(x);
  EXPECT_TRUE(std::isfinite(l.at(2)));
  EXPECT_NEAR(l.at(0), -std::log(1.0 + std::exp(-1.0)), 1e-12);
}

TEST(Ops, DropoutIdentityAtZeroAndScaled) {
  std::mt19937_64 rng(2);
  const Tensor x = Tensor::full({1000}, 1.0);
  EXPECT_EQ(to_vec(dropout(x, 0.0, rng)), to_vec(x));
  const Tensor y = dropout(x, 0.5, rng);
  for (double v : y.data()) EXPECT_TRUE(v == 0.0 || v == 2.0);
}

TEST(GradOps, ElementwiseAndReductions) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    const Tensor a = random_tensor({3, 4}, rng);
    const Tensor b = random_tensor({3, 4}, rng);
    const Tensor c = random_tensor({4, 2}, rng);
    expect_grad_ok(
        [](std::span<const Tensor> in) {
          const Tensor t = add(mul(tanh(in[0]), sigmoid(in[1])), square(relu(sub(in[0], in[1]))));
          return concat(std::vector{mean_rows(matmul(t, in[2])), reshape(logsumexp(reshape(t, {12})), {1})});
        },
        {a, b, c}, seed);
  }
}

// ---- embedding

TEST(Embedding, PadRowIsZeroAndIdentityPicksRow) {
  Tensor table = Tensor::from_data({4, 4}, {0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  const std::vector<std::int64_t> ids = {2, 0};
  const Tensor out = embedding_lookup(table, ids, 0);
  expect_close(out, Mat{{0, 0, 1, 0}, {0, 0, 0, 0}}, 0.0);

  std::mt19937_64 rng(3);
  const Tensor rnd = random_tensor({5, 3}, rng);
  const std::vector<std::int64_t> pad = {0};
  EXPECT_EQ(to_vec(embedding_lookup(rnd, pad, 0)), std::vector<double>(3, 0.0));
  const std::vector<std::int64_t> bad = {5};
  EXPECT_THROW(embedding_lookup(rnd, bad, 0), Error);
}

TEST(Embedding, GradientOfSumMarksLookedUpRows) {
  std::mt19937_64 rng(4);
  const Tensor table = random_tensor({6, 3}, rng, 1.0, true);
  const std::vector<std::int64_t> ids = {2, 0, 4, 2};
  sum(embedding_lookup(table, ids, 0)).backward();
  for (std::size_t r = 0; r < 6; ++r) {
    const double expected = r == 2 ? 2.0 : (r == 4 ? 1.0 : 0.0);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(table.grad()[r * 3 + j], expected);
  }
}

TEST(Embedding, GradCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    const Tensor table = random_tensor({7, 4}, rng);
    const std::vector<std::int64_t> ids = {1, 3, 0, 3, 6};
    expect_grad_ok(
        [&](std::span<const Tensor> in) { return embedding_lookup(in[0], ids, 0); }, {table},
        seed);
  }
}

// ---- conv

namespace {

Mat conv_oracle(const Mat& x, const Mat& filters, const std::vector<double>& bias,
                std::size_t window) {
  const long n = static_cast<long>(x.size()), d = static_cast<long>(x[0].size());
  const long half = static_cast<long>(window) / 2;
  Mat out(n, std::vector<double>(bias.size()));
  for (long t = 0; t < n; ++t) {
    for (std::size_t o = 0; o < bias.size(); ++o) {
      double acc = bias[o];
      for (long w = 0; w < static_cast<long>(window); ++w) {
        const long src = t - half + w;
        if (src < 0 || src >= n) continue;
        for (long j = 0; j < d; ++j) acc += x[src][j] * filters[w * d + j][o];
      }
      out[t][o] = std::max(0.0, acc);
    }
  }
  return out;
}

}  // namespace

TEST(Conv1d, IdentityWindowOne) {
  std::mt19937_64 rng(5);
  Tensor x = random_tensor({4, 3}, rng);
  for (double& v : x.mutable_data()) v = std::abs(v);
  const Tensor eye = Tensor::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  expect_close(conv1d_same(x, eye, Tensor::zeros({3}), 1), to_mat(x), 0.0);
}

TEST(Conv1d, ZeroInputZeroOutput) {
  std::mt19937_64 rng(6);
  const Tensor f = random_tensor({9, 2}, rng);
  const Tensor y = conv1d_same(Tensor::zeros({5, 3}), f, Tensor::zeros({2}), 3);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv1d, MatchesSlidingWindowOracle) {
  std::mt19937_64 rng(7);
  const Tensor x = random_tensor({5, 8}, rng);
  const Tensor f = random_tensor({24, 6}, rng);
  const Tensor b = random_tensor({6}, rng);
  expect_close(conv1d_same(x, f, b, 3), conv_oracle(to_mat(x), to_mat(f), to_vec(b), 3), 1e-12);
  const Tensor f5 = random_tensor({40, 6}, rng);
  expect_close(conv1d_same(x, f5, b, 5), conv_oracle(to_mat(x), to_mat(f5), to_vec(b), 5), 1e-12);
}

TEST(Conv1d, EvenWindowRejected) {
  EXPECT_THROW(conv1d_same(Tensor::zeros({2, 2}), Tensor::zeros({4, 1}), Tensor::zeros({1}), 2),
               Error);
}

TEST(Conv1d, GradCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    expect_grad_ok(
        [](std::span<const Tensor> in) { return conv1d_same(in[0], in[1], in[2], 3); },
        {random_tensor({5, 4}, rng), random_tensor({12, 3}, rng), random_tensor({3}, rng)}, seed);
  }
}

// ---- additive attention

TEST(AdditiveAttention, ZeroQueryIsMeanOfUnmasked) {
  std::mt19937_64 rng(8);
  const Tensor h = random_tensor({4, 3}, rng);
  const Tensor w = random_tensor({3, 5}, rng);
  const Mask mask = {1, 0, 1, 1};
  const auto r = additive_attention(h, w, Tensor::zeros({5}), mask);
  const Mat hm = to_mat(h);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(r.output.at(j), (hm[0][j] + hm[2][j] + hm[3][j]) / 3.0, 1e-15);
  }
  expect_close(r.weights, {1.0 / 3, 0.0, 1.0 / 3, 1.0 / 3}, 1e-15);
}

TEST(AdditiveAttention, SingleRow) {
  std::mt19937_64 rng(9);
  const Tensor h = random_tensor({1, 4}, rng);
  const auto r = additive_attention(h, random_tensor({4, 3}, rng), random_tensor({3}, rng), {});
  EXPECT_EQ(r.weights.at(0), 1.0);
  expect_close(r.output, to_vec(h), 0.0);
}

TEST(AdditiveAttention, MatchesFormulaOracle) {
  std::mt19937_64 rng(10);
  const Tensor h = random_tensor({4, 6}, rng);
  const Tensor w = random_tensor({6, 5}, rng);
  const Tensor q = random_tensor({5}, rng);
  const auto r = additive_attention(h, w, q, {});
  const Mat p = mat_mul(to_mat(h), to_mat(w));
  std::vector<double> e(4);
  double z = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (std::size_t a = 0; a < 5; ++a) s += q.at(a) * std::tanh(p[i][a]);
    e[i] = std::exp(s);
    z += e[i];
  }
  std::vector<double> out(6, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    e[i] /= z;
    for (std::size_t j = 0; j < 6; ++j) out[j] += e[i] * h.at(i, j);
  }
  expect_close(r.weights, e, 1e-12);
  expect_close(r.output, out, 1e-12);
}

TEST(AdditiveAttention, GradCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    const Mask mask = random_mask(5, rng);
    expect_grad_ok(
        [&](std::span<const Tensor> in) {
          return additive_attention(in[0], in[1], in[2], mask).output;
        },
        {random_tensor({5, 4}, rng), random_tensor({4, 3}, rng), random_tensor({3}, rng)}, seed);
  }
}

// ---- multi-head self-attention

namespace {

Mat mhsa_oracle(const Mat& h, std::size_t heads, const Mat& wq, const Mat& wk, const Mat& wv,
                const Mask& mask) {
  const std::size_t n = h.size(), d = h[0].size(), dh = d / heads;
  const Mat q = mat_mul(h, wq), k = mat_mul(h, wk), v = mat_mul(h, wv);
  Mat out(n, std::vector<double>(d, 0.0));
  for (std::size_t head = 0; head < heads; ++head) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask.empty() && !mask[i]) continue;
      std::vector<double> w(n, 0.0);
      double mx = -1e300;
      for (std::size_t j = 0; j < n; ++j) {
        if (!mask.empty() && !mask[j]) continue;
        double s = 0;
        for (std::size_t c = head * dh; c < (head + 1) * dh; ++c) s += q[i][c] * k[j][c];
        w[j] = s / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, w[j]);
      }
      double z = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!mask.empty() && !mask[j]) {
          w[j] = 0;
          continue;
        }
        w[j] = std::exp(w[j] - mx);
        z += w[j];
      }
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = head * dh; c < (head + 1) * dh; ++c) out[i][c] += w[j] / z * v[j][c];
    }
  }
  return out;
}

MhsaWeights random_mhsa(std::size_t d, std::mt19937_64& rng) {
  return {random_tensor({d, d}, rng, 0.5), random_tensor({d, d}, rng, 0.5),
          random_tensor({d, d}, rng, 0.5)};
}

}  // namespace

TEST(Mhsa, SingleRowIsValueProjection) {
  std::mt19937_64 rng(11);
  const Tensor h = random_tensor({1, 8}, rng);
  const auto w = random_mhsa(8, rng);
  expect_close(multi_head_self_attention(h, 2, w, {}), to_mat(matmul(h, w.wv)), 1e-15);
}

TEST(Mhsa, PermutationEquivariant) {
  std::mt19937_64 rng(12);
  const Tensor h = random_tensor({4, 8}, rng);
  const auto w = random_mhsa(8, rng);
  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  const Tensor a = gather_rows(multi_head_self_attention(h, 4, w, {}), perm);
  const Tensor b = multi_head_self_attention(gather_rows(h, perm), 4, w, {});
  expect_close(a, to_mat(b), 1e-12);
}

TEST(Mhsa, MatchesLoopOracle) {
  std::mt19937_64 rng(13);
  const Tensor h = random_tensor({3, 8}, rng);
  const auto w = random_mhsa(8, rng);
  expect_close(multi_head_self_attention(h, 2, w, {}),
               mhsa_oracle(to_mat(h), 2, to_mat(w.wq), to_mat(w.wk), to_mat(w.wv), {}), 1e-12);
  const Mask mask = {1, 1, 0};
  expect_close(multi_head_self_attention(h, 2, w, mask),
               mhsa_oracle(to_mat(h), 2, to_mat(w.wq), to_mat(w.wk), to_mat(w.wv), mask), 1e-12);
}

TEST(Mhsa, HeadsMustDivideWidth) {
  std::mt19937_64 rng(14);
  EXPECT_THROW(multi_head_self_attention(random_tensor({2, 6}, rng), 4, random_mhsa(6, rng), {}),
               Error);
}

TEST(Mhsa, GradCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    const Mask mask = random_mask(4, rng);
    expect_grad_ok(
        [&](std::span<const Tensor> in) {
          return multi_head_self_attention(in[0], 2, {in[1], in[2], in[3]}, mask);
        },
        {random_tensor({4, 4}, rng), random_tensor({4, 4}, rng, 0.5),
         random_tensor({4, 4}, rng, 0.5), random_tensor({4, 4}, rng, 0.5)},
        seed);
  }
}

// ---- GRU

namespace {

std::vector<double> gru_oracle(const Mat& x, std::vector<double> h, const Mat& wi, const Mat& wh,
                               const std::vector<double>& b) {
  const std::size_t hd = h.size();
  for (const auto& xt : x) {
    std::vector<double> z(hd), r(hd), c(hd), next(hd);
    for (std::size_t k = 0; k < hd; ++k) {
      double az = b[k], ar = b[hd + k];
      for (std::size_t j = 0; j < xt.size(); ++j) {
        az += xt[j] * wi[j][k];
        ar += xt[j] * wi[j][hd + k];
      }
      for (std::size_t j = 0; j < hd; ++j) {
        az += h[j] * wh[j][k];
        ar += h[j] * wh[j][hd + k];
      }
      z[k] = sigm(az);
      r[k] = sigm(ar);
    }
    for (std::size_t k = 0; k < hd; ++k) {
      double ac = b[2 * hd + k];
      for (std::size_t j = 0; j < xt.size(); ++j) ac += xt[j] * wi[j][2 * hd + k];
      for (std::size_t j = 0; j < hd; ++j) ac += r[j] * h[j] * wh[j][2 * hd + k];
      c[k] = std::tanh(ac);
      next[k] = z[k] * h[k] + (1.0 - z[k]) * c[k];
    }
    h = next;
  }
  return h;
}

}  // namespace

TEST(Gru, EmptySequenceReturnsH0) {
  std::mt19937_64 rng(15);
  const Tensor h0 = random_tensor({3}, rng);
  const GruWeights w{random_tensor({2, 9}, rng), random_tensor({3, 9}, rng), Tensor::zeros({9})};
  EXPECT_EQ(to_vec(gru_sequence(Tensor::zeros({0, 2}), h0, w)), to_vec(h0));
}

TEST(Gru, ZeroInputZeroStateStaysZero) {
  std::mt19937_64 rng(16);
  const GruWeights w{random_tensor({2, 9}, rng), random_tensor({3, 9}, rng), Tensor::zeros({9})};
  const Tensor h = gru_sequence(Tensor::zeros({4, 2}), Tensor::zeros({3}), w);
  for (double v : h.data()) EXPECT_EQ(v, 0.0);
}

TEST(Gru, MatchesUnrolledOracle) {
  std::mt19937_64 rng(17);
  const Tensor x = random_tensor({3, 4}, rng);
  const Tensor h0 = random_tensor({5}, rng);
  const GruWeights w{random_tensor({4, 15}, rng), random_tensor({5, 15}, rng),
                     random_tensor({15}, rng)};
  expect_close(gru_sequence(x, h0, w),
               gru_oracle(to_mat(x), to_vec(h0), to_mat(w.w_input), to_mat(w.w_hidden),
                          to_vec(w.bias)),
               1e-12);
}

TEST(Gru, GradCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    expect_grad_ok(
        [](std::span<const Tensor> in) {
          return gru_sequence(in[0], in[1], {in[2], in[3], in[4]});
        },
        {random_tensor({3, 2}, rng), random_tensor({3}, rng), random_tensor({2, 9}, rng),
         random_tensor({3, 9}, rng), random_tensor({9}, rng)},
        seed);
  }
}

// ---- dense + grad_check itself

TEST(Dense, GradCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    expect_grad_ok([](std::span<const Tensor> in) { return dense(in[0], in[1], in[2]); },
                   {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng), random_tensor({2}, rng)},
                   seed);
  }
}

TEST(GradCheck, LinearLayerIsNearExact) {
  std::mt19937_64 rng(18);
  const auto r = grad_check([](std::span<const Tensor> in) { return dense(in[0], in[1], in[2]); },
                            {random_tensor({2, 3}, rng), random_tensor({3, 3}, rng),
                             random_tensor({3}, rng)},
                            1e-6, 1e-6);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
  EXPECT_LT(r.max_rel_error, 1e-6);
  EXPECT_EQ(r.elements_checked, 6u + 9u + 3u);
}

TEST(GradCheck, CorruptedGradientFails) {
  std::mt19937_64 rng(19);
  // forward x^2, backward claims 4x instead of 2x
  const DifferentiableFn broken = [](std::span<const Tensor> in) {
    const Tensor& x = in[0];
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) * x.at(i);
    return Tensor::make_op(x.shape(), std::move(out), {x}, [](Node& self) {
      Node* p = self.parents[0].get();
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * 2.0 * p->data[i] * self.grad[i];
    });
  };
  const auto r = grad_check(broken, {random_tensor({4}, rng)});
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_rel_error, 0.1);
}

TEST(GradCheck, Requires64Bit) {
  PrecisionScope f32(Precision::kFloat32);
  EXPECT_THROW(grad_check([](std::span<const Tensor> in) { return sum(in[0]); },
                          {Tensor::zeros({1})}),
               Error);
}

// ---- parameters, checkpoint, optimizer

TEST(ParameterStore, InitializersAndCounts) {
  ParameterStore store(1);
  const std::size_t d = 6;
  Dense layer(store, "layer", d, d);
  EXPECT_EQ(store.count().trainable, d * d + d);
  const Parameter* bias = store.find("layer.bias");
  ASSERT_NE(bias, nullptr);
  for (double v : bias->value.data()) EXPECT_EQ(v, 0.0);
  const double limit = std::sqrt(6.0 / (2.0 * d));
  for (double v : store.find("layer.weight")->value.data()) EXPECT_LE(std::abs(v), limit);

  const Tensor frozen = Tensor::zeros({11, 100});
  store.add_pretrained("entities", frozen, false);
  const auto c = store.count();
  EXPECT_EQ(c.total - c.trainable, 100u * 11u);
  EXPECT_EQ(c.bytes, c.total * 4);
  EXPECT_THROW(store.create("layer.bias", {1}, Init::kZeros), Error);
}

TEST(Checkpoint, BitExactRoundTripAndByName) {
  newsrec::testing::TempDir tmp("ckpt");
  ParameterStore a(3);
  a.create("x", {3, 4}, Init::kNormal);
  a.create("y", {5}, Init::kGlorotUniform);
  save_checkpoint(a, tmp / "m.ckpt", DType::kF64);

  ParameterStore b(99);
  b.create("y", {5}, Init::kZeros);
  b.create("x", {3, 4}, Init::kZeros);
  const auto rep = load_checkpoint(b, tmp / "m.ckpt");
  EXPECT_EQ(rep.loaded, 2u);
  EXPECT_TRUE(rep.unused.empty());
  EXPECT_EQ(to_vec(b.find("x")->value), to_vec(a.find("x")->value));
  EXPECT_EQ(to_vec(b.find("y")->value), to_vec(a.find("y")->value));

  ParameterStore c;
  c.create("x", {3, 4}, Init::kZeros);
  EXPECT_EQ(load_checkpoint(c, tmp / "m.ckpt").unused, std::vector<std::string>{"y"});

  ParameterStore wrong;
  wrong.create("x", {4, 3}, Init::kZeros);
  EXPECT_THROW(load_checkpoint(wrong, tmp / "m.ckpt"), Error);
  ParameterStore missing;
  missing.create("z", {1}, Init::kZeros);
  EXPECT_THROW(load_checkpoint(missing, tmp / "m.ckpt"), Error);
}

TEST(Checkpoint, F32RoundTripOfF32Values) {
  newsrec::testing::TempDir tmp("ckpt32");
  PrecisionScope f32(Precision::kFloat32);
  ParameterStore a(4);
  a.create("w", {7}, Init::kNormal);
  save_checkpoint(a, tmp / "m.ckpt", DType::kF32);
  ParameterStore b;
  b.create("w", {7}, Init::kZeros);
  load_checkpoint(b, tmp / "m.ckpt");
  EXPECT_EQ(to_vec(b.find("w")->value), to_vec(a.find("w")->value));
  EXPECT_EQ(std::filesystem::file_size(tmp / "m.ckpt"), 7u * 4u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterStore store;
  Tensor w = store.create("w", {2}, Init::kZeros);
  w.mutable_data()[0] = 1.0;
  w.mutable_data()[1] = -1.0;
  Adam opt(store, {.learning_rate = 0.1});
  sum(square(w)).backward();
  opt.step();
  EXPECT_NEAR(w.at(0), 0.9, 1e-7);
  EXPECT_NEAR(w.at(1), -0.9, 1e-7);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, MinimizesQuadratic) {
  ParameterStore store;
  Tensor w = store.create("w", {3}, Init::kGlorotUniform);
  const Tensor target = Tensor::from_data({3}, {0.5, -0.25, 2.0});
  Adam opt(store, {.learning_rate = 0.05});
  for (int i = 0; i < 2000; ++i) {
    store.zero_grad();
    sum(square(sub(w, target))).backward();
    opt.step();
  }
  expect_close(w, to_vec(target), 1e-3);
}

TEST(Adam, FrozenParametersUntouched) {
  ParameterStore store;
  Tensor frozen = store.add_pretrained("f", Tensor::full({2}, 1.0), false);
  Tensor w = store.create("w", {2}, Init::kZeros);
  Adam opt(store, {.learning_rate = 0.1});
  sum(mul(frozen, add_scalar(w, 1.0))).backward();
  opt.step();
  EXPECT_EQ(to_vec(frozen), (std::vector<double>{1.0, 1.0}));
}
