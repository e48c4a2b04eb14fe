#include "newsrec/nn/optim.hpp"

#include <cmath>

namespace newsrec::nn {

Adam::Adam(ParameterStore& store, AdamOptions options) : store_(store), options_(options) {
  for (const Parameter& p : store_.parameters()) {
    m_.emplace_back(p.value.numel(), 0.0);
    v_.emplace_back(p.value.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  auto& params = store_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (!p.trainable) continue;
    auto grad = p.value.grad();
    if (grad.empty()) continue;
    auto w = p.value.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double g = grad[j];
      m[j] = round_to_precision(options_.beta1 * m[j] + (1.0 - options_.beta1) * g);
      v[j] = round_to_precision(options_.beta2 * v[j] + (1.0 - options_.beta2) * g * g);
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] = round_to_precision(w[j] - options_.learning_rate * mhat /
                                           (std::sqrt(vhat) + options_.epsilon));
    }
  }
}

}  // namespace newsrec::nn
