#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "newsrec/nn/tensor.hpp"

namespace newsrec::nn {

enum class Init { kGlorotUniform, kNormal, kZeros, kPretrained };

struct Parameter {
  std::string name;
  Tensor value;
  Init init = Init::kZeros;
  bool trainable = true;
};

struct ParameterCounts {
  std::size_t trainable = 0;
  std::size_t total = 0;
  std::size_t bytes = 0;
};

// Owns every named parameter of a model. Insertion order is stable and
// defines checkpoint layout and optimizer iteration order.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0);

  // Glorot bounds use the first axis as fan-in and the last as fan-out;
  // rank-1 parameters use (n, 1).
  Tensor create(const std::string& name, Shape shape, Init init, double normal_std = 0.1,
                bool trainable = true);
  Tensor add_pretrained(const std::string& name, const Tensor& value, bool trainable);

  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }
  const Parameter* find(const std::string& name) const;
  Parameter* find(const std::string& name);

  ParameterCounts count(std::size_t bytes_per_value = sizeof(float)) const;
  void zero_grad();

 private:
  Parameter& insert(Parameter p);

  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::mt19937_64 rng_;
};

}  // namespace newsrec::nn
