#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "newsrec/nn/tensor.hpp"

namespace newsrec::nn {

struct GradCheckReport {
  bool passed = false;
  double max_rel_error = 0.0;
  std::string worst_location;  // "input <i> element <j>"
  std::string failure;         // non-empty for non-finite values
  std::size_t elements_checked = 0;
};

using DifferentiableFn = std::function<Tensor(std::span<const Tensor>)>;

// Central finite differences on every element of every input. Non-scalar
// outputs are reduced by a fixed pseudo-random projection first. Relative
// error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-2).
// Requires kFloat64 precision.
GradCheckReport grad_check(const DifferentiableFn& fn, std::vector<Tensor> inputs,
                           double eps = 1e-6, double tol = 1e-5);

}  // namespace newsrec::nn
