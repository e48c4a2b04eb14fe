#include "newsrec/nn/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "newsrec/common/error.hpp"

namespace newsrec::nn {

namespace {
thread_local Precision g_precision = Precision::kFloat64;
thread_local bool g_grad_enabled = true;
}  // namespace

Precision current_precision() { return g_precision; }

PrecisionScope::PrecisionScope(Precision p) : previous_(g_precision) {
  g_precision = p;
}
PrecisionScope::~PrecisionScope() { g_precision = previous_; }

bool grad_enabled() { return g_grad_enabled; }

NoGradScope::NoGradScope() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradScope::~NoGradScope() { g_grad_enabled = previous_; }

double round_to_precision(double v) {
  if (g_precision == Precision::kFloat32) return static_cast<double>(static_cast<float>(v));
  return v;
}

void round_to_precision(std::span<double> values) {
  if (g_precision != Precision::kFloat32) return;
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

std::vector<double>& Node::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->data.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw Error("tensor data length " + std::to_string(data.size()) +
                " does not match shape " + shape_string(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({}, {value}, requires_grad);
}

Tensor Tensor::make_op(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                       BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  round_to_precision(node->data);
  bool needs = false;
  if (g_grad_enabled) {
    for (const Tensor& p : parents) needs = needs || (p.defined() && p.requires_grad());
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (Tensor& p : parents) node->parents.push_back(std::move(p.node_));
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::size(std::size_t axis) const {
  if (axis >= node_->shape.size()) {
    throw Error("axis " + std::to_string(axis) + " out of range for shape " +
                shape_string(node_->shape));
  }
  return node_->shape[axis];
}

std::size_t Tensor::numel() const { return node_->data.size(); }

std::span<const double> Tensor::data() const { return node_->data; }
std::span<double> Tensor::mutable_data() { return node_->data; }

double Tensor::item() const {
  if (numel() != 1) throw Error("item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t i) const { return node_->data.at(i); }

double Tensor::at(std::size_t i, std::size_t j) const {
  return node_->data.at(i * node_->shape.at(1) + j);
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool value) { node_->requires_grad = value; }

std::span<const double> Tensor::grad() const { return node_->grad; }
std::span<double> Tensor::mutable_grad() { return node_->grad_buffer(); }

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
  if (numel() != 1) {
    throw Error("backward() requires a scalar, got shape " + shape_string(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward || n->grad.empty()) continue;
    round_to_precision(n->grad);
    n->backward(*n);
  }
  for (Node* n : order) {
    if (n->parents.empty()) round_to_precision(n->grad);
  }
}

Tensor Tensor::detach() const {
  return from_data(node_->shape, node_->data, false);
}

}  // namespace newsrec::nn
