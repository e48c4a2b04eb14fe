#include "newsrec/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "newsrec/common/error.hpp"

namespace newsrec::nn {

namespace {

void require(bool cond, const char* op, const std::string& what) {
  if (!cond) throw Error(std::string(op) + ": " + what);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), op,
          "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
  require(a.dim() == rank, op,
          "expected rank " + std::to_string(rank) + ", got " + shape_string(a.shape()));
}

// Parent i when it takes gradients, otherwise null.
Node* grad_parent(Node& self, std::size_t i) {
  Node* p = self.parents[i].get();
  return p->requires_grad ? p : nullptr;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return Tensor::make_op(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (Node* p = grad_parent(self, k)) {
        auto& g = p->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return Tensor::make_op(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (Node* p = grad_parent(self, 1)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return Tensor::make_op(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const Node& na = *self.parents[0];
    const Node& nb = *self.parents[1];
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * nb.data[i];
    }
    if (Node* p = grad_parent(self, 1)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * na.data[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= s;
  return Tensor::make_op(a.shape(), std::move(out), {a}, [s](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * s;
    }
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v += s;
  return Tensor::make_op(a.shape(), std::move(out), {a}, [](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_row_bias");
  require_rank(bias, 1, "add_row_bias");
  const std::size_t n = x.rows(), m = x.cols();
  require(bias.size(0) == m, "add_row_bias",
          "bias length " + std::to_string(bias.size(0)) + " vs cols " + std::to_string(m));
  std::vector<double> out(x.data().begin(), x.data().end());
  auto b = bias.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += b[j];
  return Tensor::make_op(x.shape(), std::move(out), {x, bias}, [n, m](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (Node* p = grad_parent(self, 1)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  require(b.rows() == k, "matmul",
          "inner dimension mismatch " + shape_string(a.shape()) + " . " + shape_string(b.shape()));
  std::vector<double> out(n * m, 0.0);
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.data() + i * m;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = x[i * k + t];
      if (av == 0.0) continue;
      const double* brow = y.data() + t * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return Tensor::make_op({n, m}, std::move(out), {a, b}, [n, k, m](Node& self) {
    const Node& na = *self.parents[0];
    const Node& nb = *self.parents[1];
    const double* go = self.grad.data();
    if (Node* p = grad_parent(self, 0)) {
      // dA = dO . B^T
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = go + i * m;
        for (std::size_t t = 0; t < k; ++t) {
          const double* brow = nb.data.data() + t * m;
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
          g[i * k + t] += acc;
        }
      }
    }
    if (Node* p = grad_parent(self, 1)) {
      // dB = A^T . dO
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = go + i * m;
        for (std::size_t t = 0; t < k; ++t) {
          const double av = na.data[i * k + t];
          if (av == 0.0) continue;
          double* gb = g.data() + t * m;
          for (std::size_t j = 0; j < m; ++j) gb[j] += av * grow[j];
        }
      }
    }
  });
}

Tensor matvec(const Tensor& a, const Tensor& v) {
  require_rank(v, 1, "matvec");
  return reshape(matmul(a, reshape(v, {v.size(0), 1})), {a.size(0)});
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<double> out(n * m);
  auto x = a.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = x[i * m + j];
  return Tensor::make_op({m, n}, std::move(out), {a}, [n, m](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[j * n + i];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  require(shape_numel(shape) == a.numel(), "reshape",
          "cannot reshape " + shape_string(a.shape()) + " to " + shape_string(shape));
  std::vector<double> out(a.data().begin(), a.data().end());
  return Tensor::make_op(std::move(shape), std::move(out), {a}, [](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x[i]);
  return Tensor::make_op(a.shape(), std::move(out), {a}, [](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = self.data[i];
        g[i] += self.grad[i] * (1.0 - y * y);
      }
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x[i];
    out[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return Tensor::make_op(a.shape(), std::move(out), {a}, [](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = self.data[i];
        g[i] += self.grad[i] * y * (1.0 - y);
      }
    }
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0 ? x[i] : 0.0;
  return Tensor::make_op(a.shape(), std::move(out), {a}, [](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (p->data[i] > 0) g[i] += self.grad[i];
    }
  });
}

Tensor square(const Tensor& a) { return mul(a, a); }

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return Tensor::make_op({}, {s}, {a}, [](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (double& v : g) v += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& a) {
  require(a.numel() > 0, "mean", "empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor mean_rows(const Tensor& a) {
  require_rank(a, 2, "mean_rows");
  const std::size_t n = a.rows(), m = a.cols();
  require(n > 0, "mean_rows", "no rows");
  std::vector<double> out(m, 0.0);
  auto x = a.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j] += x[i * m + j];
  for (double& v : out) v /= static_cast<double>(n);
  return Tensor::make_op({m}, std::move(out), {a}, [n, m](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[j] * inv;
    }
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_rank(a, 1, "dot");
  require_same_shape(a, b, "dot");
  double s = 0.0;
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return Tensor::make_op({}, {s}, {a, b}, [](Node& self) {
    const Node& na = *self.parents[0];
    const Node& nb = *self.parents[1];
    const double go = self.grad[0];
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += go * nb.data[i];
    }
    if (Node* p = grad_parent(self, 1)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += go * na.data[i];
    }
  });
}

Tensor pick(const Tensor& a, std::size_t i) {
  require_rank(a, 1, "pick");
  require(i < a.size(0), "pick", "index " + std::to_string(i) + " out of range");
  return Tensor::make_op({}, {a.data()[i]}, {a}, [i](Node& self) {
    if (Node* p = grad_parent(self, 0)) p->grad_buffer()[i] += self.grad[0];
  });
}

Tensor row(const Tensor& a, std::size_t i) {
  const std::size_t idx[] = {i};
  return reshape(gather_rows(a, idx), {a.cols()});
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  require_rank(a, 2, "gather_rows");
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<double> out(rows.size() * m);
  auto x = a.data();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < n, "gather_rows", "row " + std::to_string(rows[r]) + " out of range");
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(rows[r] * m), m, out.begin() + static_cast<std::ptrdiff_t>(r * m));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return Tensor::make_op({rows.size(), m}, std::move(out), {a},
                         [idx = std::move(idx), m](Node& self) {
                           if (Node* p = grad_parent(self, 0)) {
                             auto& g = p->grad_buffer();
                             for (std::size_t r = 0; r < idx.size(); ++r)
                               for (std::size_t j = 0; j < m; ++j)
                                 g[idx[r] * m + j] += self.grad[r * m + j];
                           }
                         });
}

Tensor stack_rows(std::span<const Tensor> vectors) {
  require(!vectors.empty(), "stack_rows", "no inputs");
  const std::size_t m = vectors[0].numel();
  std::vector<double> out;
  out.reserve(vectors.size() * m);
  for (const Tensor& v : vectors) {
    require_rank(v, 1, "stack_rows");
    require(v.numel() == m, "stack_rows", "length mismatch");
    out.insert(out.end(), v.data().begin(), v.data().end());
  }
  return Tensor::make_op({vectors.size(), m}, std::move(out),
                         std::vector<Tensor>(vectors.begin(), vectors.end()), [m](Node& self) {
                           for (std::size_t r = 0; r < self.parents.size(); ++r) {
                             if (Node* p = grad_parent(self, r)) {
                               auto& g = p->grad_buffer();
                               for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[r * m + j];
                             }
                           }
                         });
}

Tensor concat(std::span<const Tensor> vectors) {
  std::vector<double> out;
  for (const Tensor& v : vectors) {
    require_rank(v, 1, "concat");
    out.insert(out.end(), v.data().begin(), v.data().end());
  }
  const std::size_t total = out.size();
  return Tensor::make_op({total}, std::move(out),
                         std::vector<Tensor>(vectors.begin(), vectors.end()), [](Node& self) {
                           std::size_t offset = 0;
                           for (std::size_t r = 0; r < self.parents.size(); ++r) {
                             const std::size_t len = self.parents[r]->data.size();
                             if (Node* p = grad_parent(self, r)) {
                               auto& g = p->grad_buffer();
                               for (std::size_t j = 0; j < len; ++j) g[j] += self.grad[offset + j];
                             }
                             offset += len;
                           }
                         });
}

Tensor concat_cols(std::span<const Tensor> mats) {
  require(!mats.empty(), "concat_cols", "no inputs");
  const std::size_t n = mats[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& t : mats) {
    require_rank(t, 2, "concat_cols");
    require(t.rows() == n, "concat_cols", "row count mismatch");
    widths.push_back(t.cols());
    total += t.cols();
  }
  std::vector<double> out(n * total);
  std::size_t offset = 0;
  for (const Tensor& t : mats) {
    const std::size_t w = t.cols();
    auto x = t.data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * total + offset + j] = x[i * w + j];
    offset += w;
  }
  return Tensor::make_op({n, total}, std::move(out),
                         std::vector<Tensor>(mats.begin(), mats.end()),
                         [n, total, widths = std::move(widths)](Node& self) {
                           std::size_t off = 0;
                           for (std::size_t r = 0; r < widths.size(); ++r) {
                             const std::size_t w = widths[r];
                             if (Node* p = grad_parent(self, r)) {
                               auto& g = p->grad_buffer();
                               for (std::size_t i = 0; i < n; ++i)
                                 for (std::size_t j = 0; j < w; ++j)
                                   g[i * w + j] += self.grad[i * total + off + j];
                             }
                             off += w;
                           }
                         });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank(a, 2, "slice_cols");
  const std::size_t n = a.rows(), m = a.cols();
  require(begin <= end && end <= m, "slice_cols", "bad column range");
  const std::size_t w = end - begin;
  std::vector<double> out(n * w);
  auto x = a.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = x[i * m + begin + j];
  return Tensor::make_op({n, w}, std::move(out), {a}, [n, m, w, begin](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j) g[i * m + begin + j] += self.grad[i * w + j];
    }
  });
}

Tensor zero_masked_rows(const Tensor& a, const Mask& mask) {
  require_rank(a, 2, "zero_masked_rows");
  const std::size_t n = a.rows(), m = a.cols();
  if (mask.empty()) return a;
  require(mask.size() == n, "zero_masked_rows", "mask length mismatch");
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < n; ++i)
    if (!mask[i]) std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(i * m), m, 0.0);
  return Tensor::make_op(a.shape(), std::move(out), {a}, [mask, m](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i])
          for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[i * m + j];
    }
  });
}

namespace {

// Softmax of one row in place over valid entries.
void softmax_row(const double* x, double* y, std::size_t m, const Mask& mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j)
    if (mask.empty() || mask[j]) mx = std::max(mx, x[j]);
  if (mx == -std::numeric_limits<double>::infinity()) {
    throw Error("masked_softmax: every position is masked");
  }
  double z = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (mask.empty() || mask[j]) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    } else {
      y[j] = 0.0;
    }
  }
  for (std::size_t j = 0; j < m; ++j) y[j] /= z;
}

void softmax_backward_row(const double* y, const double* gy, double* gx, std::size_t m) {
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) s += y[j] * gy[j];
  for (std::size_t j = 0; j < m; ++j) gx[j] += y[j] * (gy[j] - s);
}

}  // namespace

Tensor masked_softmax(const Tensor& a, const Mask& mask) {
  require_rank(a, 1, "masked_softmax");
  const std::size_t m = a.size(0);
  require(mask.empty() || mask.size() == m, "masked_softmax", "mask length mismatch");
  std::vector<double> out(m);
  softmax_row(a.data().data(), out.data(), m, mask);
  return Tensor::make_op({m}, std::move(out), {a}, [m](Node& self) {
    if (Node* p = grad_parent(self, 0))
      softmax_backward_row(self.data.data(), self.grad.data(), p->grad_buffer().data(), m);
  });
}

Tensor masked_softmax_rows(const Tensor& a, const Mask& key_mask) {
  require_rank(a, 2, "masked_softmax_rows");
  const std::size_t n = a.rows(), m = a.cols();
  require(key_mask.empty() || key_mask.size() == m, "masked_softmax_rows", "mask length mismatch");
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    softmax_row(a.data().data() + i * m, out.data() + i * m, m, key_mask);
  return Tensor::make_op(a.shape(), std::move(out), {a}, [n, m](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        softmax_backward_row(self.data.data() + i * m, self.grad.data() + i * m,
                             g.data() + i * m, m);
    }
  });
}

Tensor logsumexp(const Tensor& a) {
  require_rank(a, 1, "logsumexp");
  require(a.numel() > 0, "logsumexp", "empty input");
  auto x = a.data();
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  return Tensor::make_op({}, {lse}, {a}, [lse](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += self.grad[0] * std::exp(p->data[i] - lse);
    }
  });
}

Tensor log_softmax(const Tensor& a) {
  require_rank(a, 1, "log_softmax");
  const std::size_t m = a.size(0);
  require(m > 0, "log_softmax", "empty input");
  auto x = a.data();
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = x[i] - lse;
  return Tensor::make_op({m}, std::move(out), {a}, [m](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += self.grad[i];
      for (std::size_t i = 0; i < m; ++i) g[i] += self.grad[i] - std::exp(self.data[i]) * s;
    }
  });
}

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  require(rate < 1.0, "dropout", "rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  const double inv = 1.0 / (1.0 - rate);
  std::vector<double> factor(a.numel());
  for (double& f : factor) f = keep(rng) ? inv : 0.0;
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor[i];
  return Tensor::make_op(a.shape(), std::move(out), {a},
                         [factor = std::move(factor)](Node& self) {
                           if (Node* p = grad_parent(self, 0)) {
                             auto& g = p->grad_buffer();
                             for (std::size_t i = 0; i < g.size(); ++i)
                               g[i] += self.grad[i] * factor[i];
                           }
                         });
}

Tensor im2col_same(const Tensor& x, std::size_t window) {
  require_rank(x, 2, "im2col_same");
  require(window % 2 == 1, "im2col_same", "window must be odd, got " + std::to_string(window));
  const std::size_t n = x.rows(), d = x.cols();
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(window / 2);
  const std::size_t width = window * d;
  std::vector<double> out(n * width, 0.0);
  auto in = x.data();
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t w = 0; w < window; ++w) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(w) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
      std::copy_n(in.begin() + src * static_cast<std::ptrdiff_t>(d), d,
                  out.begin() + static_cast<std::ptrdiff_t>(t * width + w * d));
    }
  }
  return Tensor::make_op({n, width}, std::move(out), {x}, [n, d, window, half, width](Node& self) {
    if (Node* p = grad_parent(self, 0)) {
      auto& g = p->grad_buffer();
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t w = 0; w < window; ++w) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(w) - half;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
          for (std::size_t j = 0; j < d; ++j)
            g[static_cast<std::size_t>(src) * d + j] += self.grad[t * width + w * d + j];
        }
      }
    }
  });
}

}  // namespace newsrec::nn
