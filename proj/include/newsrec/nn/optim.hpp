#pragma once

#include <vector>

#include "newsrec/nn/parameter.hpp"

namespace newsrec::nn {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over the trainable parameters of a store.
class Adam {
 public:
  Adam(ParameterStore& store, AdamOptions options);
  void step();
  long steps() const { return t_; }

 private:
  ParameterStore& store_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

}  // namespace newsrec::nn
