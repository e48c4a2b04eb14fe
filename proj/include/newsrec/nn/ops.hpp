#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "newsrec/nn/tensor.hpp"

// Differentiable primitives. Matrices are row-major [rows x cols]; vectors
// are rank-1. Every op checks shapes and throws newsrec::Error on mismatch.
namespace newsrec::nn {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

// x [n x m] + b [m] broadcast over rows.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);

// [n x k] . [k x m]
Tensor matmul(const Tensor& a, const Tensor& b);
// [n x k] . [k] -> [n]
Tensor matvec(const Tensor& a, const Tensor& v);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor square(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// [n x m] -> [m]
Tensor mean_rows(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);

// Element i of a rank-1 tensor as a scalar.
Tensor pick(const Tensor& a, std::size_t i);
Tensor row(const Tensor& a, std::size_t i);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
// Stacks rank-1 tensors of equal length into [k x m].
Tensor stack_rows(std::span<const Tensor> vectors);
// Concatenates rank-1 tensors.
Tensor concat(std::span<const Tensor> vectors);
Tensor concat_cols(std::span<const Tensor> mats);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
// Sets rows with mask 0 to zero.
Tensor zero_masked_rows(const Tensor& a, const Mask& mask);

// Softmax over entries with mask 1; masked entries get weight 0.
// Empty mask means all valid. Throws when every entry is masked.
Tensor masked_softmax(const Tensor& a, const Mask& mask);
// Row-wise softmax of [n x m] over columns with key_mask 1.
Tensor masked_softmax_rows(const Tensor& a, const Mask& key_mask);
Tensor log_softmax(const Tensor& a);
Tensor logsumexp(const Tensor& a);

// Inverted dropout. Identity when rate == 0.
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng);

// Same-padded sliding window rows: row t holds x[t - w/2 .. t + w/2]
// flattened, with zeros outside [0, n). Output [n x window*d].
Tensor im2col_same(const Tensor& x, std::size_t window);

}  // namespace newsrec::nn
