#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace newsrec::nn {

using Shape = std::vector<std::size_t>;

// Row validity mask used by attention blocks: 1 = attend, 0 = padding.
using Mask = std::vector<std::uint8_t>;

// Numeric mode. Storage is always double; in kFloat32 mode every op output,
// every gradient and every optimizer update is rounded to binary32, so
// training reproduces single-precision arithmetic results.
enum class Precision { kFloat64, kFloat32 };

Precision current_precision();

class PrecisionScope {
 public:
  explicit PrecisionScope(Precision p);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  Precision previous_;
};

bool grad_enabled();

// Disables graph construction for the current thread (inference mode).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  bool previous_;
};

// Rounds to binary32 when the current precision is kFloat32.
double round_to_precision(double v);
void round_to_precision(std::span<double> values);

struct Node;
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;

  std::vector<double>& grad_buffer();
};

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Handle to a node of the autograd graph. Copies share the node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  // Creates an op output. Parents and backward are dropped when no parent
  // requires a gradient or when grad mode is off.
  static Tensor make_op(Shape shape, std::vector<double> data,
                        std::vector<Tensor> parents, BackwardFn backward);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t dim() const { return shape().size(); }
  std::size_t size(std::size_t axis) const;
  std::size_t numel() const;
  std::size_t rows() const { return size(0); }
  std::size_t cols() const { return size(1); }

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Reverse-mode sweep from this scalar.
  void backward() const;

  // Same values, no graph history.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

}  // namespace newsrec::nn
