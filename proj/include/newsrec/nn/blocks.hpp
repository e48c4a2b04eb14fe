#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "newsrec/nn/ops.hpp"
#include "newsrec/nn/parameter.hpp"
#include "newsrec/nn/tensor.hpp"

namespace newsrec::nn {

// Per-forward state: train/eval switch and the dropout stream.
struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;
  double dropout_rate = 0.0;

  Tensor maybe_dropout(const Tensor& x) const;
};

// Rows of table for ids. Rows for pad_id are zero and pass no gradient.
Tensor embedding_lookup(const Tensor& table, std::span<const std::int64_t> ids,
                        std::int64_t pad_id);

// ReLU(conv) with odd window, zero padding, same output length.
// filters: [window*d_in x d_out], bias: [d_out].
Tensor conv1d_same(const Tensor& x, const Tensor& filters, const Tensor& bias,
                   std::size_t window);

struct AttentionResult {
  Tensor output;   // [d]
  Tensor weights;  // [n]
};

// score_i = q . tanh(H_i W); softmax over unmasked rows; output = sum_i w_i H_i.
AttentionResult additive_attention(const Tensor& h, const Tensor& proj, const Tensor& query,
                                   const Mask& mask);

// Attention with an externally supplied query vector of width d:
// score_i = H_i . query.
AttentionResult dot_attention(const Tensor& h, const Tensor& query, const Mask& mask);

struct MhsaWeights {
  Tensor wq;  // [d x d]
  Tensor wk;
  Tensor wv;
};

// Scaled dot-product self-attention per head, heads concatenated. Masked rows
// are excluded as keys and zeroed in the output.
Tensor multi_head_self_attention(const Tensor& h, std::size_t heads, const MhsaWeights& w,
                                 const Mask& mask);

struct GruWeights {
  Tensor w_input;   // [d_in x 3h], gate blocks ordered update | reset | candidate
  Tensor w_hidden;  // [h x 3h]
  Tensor bias;      // [3h]
};

// z = sigma(x Wz + h Uz + bz), r = sigma(x Wr + h Ur + br),
// c = tanh(x Wc + (r * h) Uc + bc), h' = z * h + (1 - z) * c.
// Returns the final state; an empty sequence returns h0.
Tensor gru_sequence(const Tensor& x, const Tensor& h0, const GruWeights& w);

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Parameter-owning wrappers.

class Dense {
 public:
  Dense() = default;
  Dense(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
        bool bias = true);
  Tensor operator()(const Tensor& x) const;
  Tensor forward_vector(const Tensor& v) const;

 private:
  Tensor weight_;
  Tensor bias_;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParameterStore& store, const std::string& name, std::size_t d_in, std::size_t d_out,
         std::size_t window);
  Tensor operator()(const Tensor& x) const;

 private:
  Tensor filters_;
  Tensor bias_;
  std::size_t window_ = 1;
};

class AdditiveAttention {
 public:
  AdditiveAttention() = default;
  AdditiveAttention(ParameterStore& store, const std::string& name, std::size_t d,
                    std::size_t attention_dim);
  AttentionResult operator()(const Tensor& h, const Mask& mask) const;

 private:
  Tensor proj_;
  Tensor query_;
};

class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(ParameterStore& store, const std::string& name, std::size_t d,
                         std::size_t heads);
  Tensor operator()(const Tensor& h, const Mask& mask) const;

 private:
  MhsaWeights w_;
  std::size_t heads_ = 1;
};

class Gru {
 public:
  Gru() = default;
  Gru(ParameterStore& store, const std::string& name, std::size_t d_in, std::size_t d_hidden);
  Tensor operator()(const Tensor& x, const Tensor& h0) const;

 private:
  GruWeights w_;
};

}  // namespace newsrec::nn
