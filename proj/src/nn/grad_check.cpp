#include "newsrec/nn/grad_check.hpp"

#include <cmath>
#include <random>

#include "newsrec/common/error.hpp"
#include "newsrec/nn/ops.hpp"

namespace newsrec::nn {

namespace {

constexpr double kRelFloor = 1e-2;

Tensor to_scalar(const Tensor& out, std::vector<double>& projection) {
  if (out.numel() == 1) return reshape(out, {});
  if (projection.size() != out.numel()) {
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    projection.resize(out.numel());
    for (double& v : projection) v = dist(rng);
  }
  return sum(mul(out, Tensor::from_data(out.shape(), projection)));
}

}  // namespace

GradCheckReport grad_check(const DifferentiableFn& fn, std::vector<Tensor> inputs, double eps,
                           double tol) {
  if (current_precision() != Precision::kFloat64) {
    throw Error("grad_check requires 64-bit precision mode");
  }
  GradCheckReport report;
  for (Tensor& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  std::vector<double> projection;
  const Tensor loss = to_scalar(fn(inputs), projection);
  if (!std::isfinite(loss.item())) {
    report.failure = "non-finite output";
    return report;
  }
  loss.backward();

  NoGradScope no_grad;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor& t = inputs[i];
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    analytic.resize(t.numel(), 0.0);
    auto values = t.mutable_data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + eps;
      const double up = to_scalar(fn(inputs), projection).item();
      values[j] = saved - eps;
      const double down = to_scalar(fn(inputs), projection).item();
      values[j] = saved;
      const std::string where = "input " + std::to_string(i) + " element " + std::to_string(j);
      if (!std::isfinite(up) || !std::isfinite(down) || !std::isfinite(analytic[j])) {
        report.failure = "non-finite value at " + where;
        report.worst_location = where;
        report.passed = false;
        return report;
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double denom =
          std::max({std::abs(analytic[j]), std::abs(numeric), kRelFloor});
      const double rel = std::abs(analytic[j] - numeric) / denom;
      if (rel > report.max_rel_error || report.worst_location.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, rel);
        report.worst_location = where;
      }
      ++report.elements_checked;
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace newsrec::nn
