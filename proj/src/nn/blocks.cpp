#include "newsrec/nn/blocks.hpp"

#include <cmath>

#include "newsrec/common/error.hpp"

namespace newsrec::nn {

Tensor ForwardContext::maybe_dropout(const Tensor& x) const {
  if (!training || dropout_rate <= 0.0 || rng == nullptr) return x;
  return dropout(x, dropout_rate, *rng);
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::int64_t> ids,
                        std::int64_t pad_id) {
  if (table.dim() != 2) throw Error("embedding_lookup: table must be a matrix");
  const std::size_t vocab = table.rows(), d = table.cols();
  std::vector<double> out(ids.size() * d, 0.0);
  auto x = table.data();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const std::int64_t id = ids[r];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw Error("embedding_lookup: id " + std::to_string(id) + " out of range for table with " +
                  std::to_string(vocab) + " rows");
    }
    if (id == pad_id) continue;
    std::copy_n(x.begin() + id * static_cast<std::int64_t>(d), d,
                out.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  std::vector<std::int64_t> idx(ids.begin(), ids.end());
  return Tensor::make_op({ids.size(), d}, std::move(out), {table},
                         [idx = std::move(idx), d, pad_id](Node& self) {
                           Node* p = self.parents[0].get();
                           if (!p->requires_grad) return;
                           auto& g = p->grad_buffer();
                           for (std::size_t r = 0; r < idx.size(); ++r) {
                             if (idx[r] == pad_id) continue;
                             const std::size_t base = static_cast<std::size_t>(idx[r]) * d;
                             for (std::size_t j = 0; j < d; ++j) g[base + j] += self.grad[r * d + j];
                           }
                         });
}

Tensor conv1d_same(const Tensor& x, const Tensor& filters, const Tensor& bias,
                   std::size_t window) {
  if (window % 2 == 0) {
    throw Error("conv1d_same: window must be odd, got " + std::to_string(window));
  }
  if (filters.dim() != 2 || filters.rows() != window * x.cols()) {
    throw Error("conv1d_same: filters shape " + shape_string(filters.shape()) +
                " does not match window " + std::to_string(window) + " x d_in " +
                std::to_string(x.cols()));
  }
  return relu(add_row_bias(matmul(im2col_same(x, window), filters), bias));
}

AttentionResult additive_attention(const Tensor& h, const Tensor& proj, const Tensor& query,
                                   const Mask& mask) {
  if (h.dim() != 2 || h.rows() == 0) throw Error("additive_attention: empty input");
  const Tensor scores = matvec(tanh(matmul(h, proj)), query);
  Tensor weights = masked_softmax(scores, mask);
  Tensor out = reshape(matmul(reshape(weights, {1, h.rows()}), h), {h.cols()});
  return {out, weights};
}

AttentionResult dot_attention(const Tensor& h, const Tensor& query, const Mask& mask) {
  if (h.dim() != 2 || h.rows() == 0) throw Error("dot_attention: empty input");
  Tensor weights = masked_softmax(matvec(h, query), mask);
  Tensor out = reshape(matmul(reshape(weights, {1, h.rows()}), h), {h.cols()});
  return {out, weights};
}

Tensor multi_head_self_attention(const Tensor& h, std::size_t heads, const MhsaWeights& w,
                                 const Mask& mask) {
  if (h.dim() != 2) throw Error("multi_head_self_attention: input must be a matrix");
  const std::size_t d = h.cols();
  if (heads == 0 || d % heads != 0) {
    throw Error("multi_head_self_attention: d_model " + std::to_string(d) +
                " is not divisible by heads " + std::to_string(heads));
  }
  const std::size_t dh = d / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Tensor q = matmul(h, w.wq);
  const Tensor k = matmul(h, w.wk);
  const Tensor v = matmul(h, w.wv);
  std::vector<Tensor> outputs;
  outputs.reserve(heads);
  for (std::size_t head = 0; head < heads; ++head) {
    const std::size_t b = head * dh, e = b + dh;
    const Tensor qh = slice_cols(q, b, e);
    const Tensor kh = slice_cols(k, b, e);
    const Tensor vh = slice_cols(v, b, e);
    const Tensor attn =
        masked_softmax_rows(scale(matmul(qh, transpose(kh)), inv_scale), mask);
    outputs.push_back(matmul(attn, vh));
  }
  Tensor out = heads == 1 ? outputs[0] : concat_cols(outputs);
  return zero_masked_rows(out, mask);
}

Tensor gru_sequence(const Tensor& x, const Tensor& h0, const GruWeights& w) {
  if (h0.dim() != 1) throw Error("gru_sequence: h0 must be a vector");
  const std::size_t hd = h0.size(0);
  if (w.w_hidden.dim() != 2 || w.w_hidden.rows() != hd || w.w_hidden.cols() != 3 * hd) {
    throw Error("gru_sequence: hidden weights shape " + shape_string(w.w_hidden.shape()));
  }
  if (x.dim() != 2 || x.rows() == 0) return h0;
  const Tensor gx = add_row_bias(matmul(x, w.w_input), w.bias);  // [n x 3h]
  const Tensor u_zr = slice_cols(w.w_hidden, 0, 2 * hd);
  const Tensor u_c = slice_cols(w.w_hidden, 2 * hd, 3 * hd);
  Tensor h = reshape(h0, {1, hd});
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const std::size_t idx[] = {t};
    const Tensor gxt = gather_rows(gx, idx);  // [1 x 3h]
    const Tensor zr = sigmoid(add(slice_cols(gxt, 0, 2 * hd), matmul(h, u_zr)));
    const Tensor z = slice_cols(zr, 0, hd);
    const Tensor r = slice_cols(zr, hd, 2 * hd);
    const Tensor c = tanh(add(slice_cols(gxt, 2 * hd, 3 * hd), matmul(mul(r, h), u_c)));
    // h' = c + z * (h - c)
    h = add(c, mul(z, sub(h, c)));
  }
  return reshape(h, {hd});
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  Tensor y = matmul(x, weight);
  return bias.defined() ? add_row_bias(y, bias) : y;
}

Dense::Dense(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
             bool bias)
    : weight_(store.create(name + ".weight", {in, out}, Init::kGlorotUniform)) {
  if (bias) bias_ = store.create(name + ".bias", {out}, Init::kZeros);
}

Tensor Dense::operator()(const Tensor& x) const { return dense(x, weight_, bias_); }

Tensor Dense::forward_vector(const Tensor& v) const {
  return reshape(dense(reshape(v, {1, v.numel()}), weight_, bias_), {weight_.cols()});
}

Conv1d::Conv1d(ParameterStore& store, const std::string& name, std::size_t d_in,
               std::size_t d_out, std::size_t window)
    : window_(window) {
  if (window % 2 == 0) {
    throw Error("conv1d '" + name + "': window must be odd, got " + std::to_string(window));
  }
  filters_ = store.create(name + ".filters", {window * d_in, d_out}, Init::kGlorotUniform);
  bias_ = store.create(name + ".bias", {d_out}, Init::kZeros);
}

Tensor Conv1d::operator()(const Tensor& x) const {
  return conv1d_same(x, filters_, bias_, window_);
}

AdditiveAttention::AdditiveAttention(ParameterStore& store, const std::string& name,
                                     std::size_t d, std::size_t attention_dim)
    : proj_(store.create(name + ".proj", {d, attention_dim}, Init::kGlorotUniform)),
      query_(store.create(name + ".query", {attention_dim}, Init::kGlorotUniform)) {}

AttentionResult AdditiveAttention::operator()(const Tensor& h, const Mask& mask) const {
  return additive_attention(h, proj_, query_, mask);
}

MultiHeadSelfAttention::MultiHeadSelfAttention(ParameterStore& store, const std::string& name,
                                               std::size_t d, std::size_t heads)
    : heads_(heads) {
  if (heads == 0 || d % heads != 0) {
    throw Error("multi-head attention '" + name + "': d_model " + std::to_string(d) +
                " is not divisible by heads " + std::to_string(heads));
  }
  w_.wq = store.create(name + ".wq", {d, d}, Init::kGlorotUniform);
  w_.wk = store.create(name + ".wk", {d, d}, Init::kGlorotUniform);
  w_.wv = store.create(name + ".wv", {d, d}, Init::kGlorotUniform);
}

Tensor MultiHeadSelfAttention::operator()(const Tensor& h, const Mask& mask) const {
  return multi_head_self_attention(h, heads_, w_, mask);
}

Gru::Gru(ParameterStore& store, const std::string& name, std::size_t d_in, std::size_t d_hidden) {
  w_.w_input = store.create(name + ".w_input", {d_in, 3 * d_hidden}, Init::kGlorotUniform);
  w_.w_hidden = store.create(name + ".w_hidden", {d_hidden, 3 * d_hidden}, Init::kGlorotUniform);
  w_.bias = store.create(name + ".bias", {3 * d_hidden}, Init::kZeros);
}

Tensor Gru::operator()(const Tensor& x, const Tensor& h0) const {
  return gru_sequence(x, h0, w_);
}

}  // namespace newsrec::nn
