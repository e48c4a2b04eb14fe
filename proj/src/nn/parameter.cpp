#include "newsrec/nn/parameter.hpp"

#include <cmath>

#include "newsrec/common/error.hpp"

namespace newsrec::nn {

ParameterStore::ParameterStore(std::uint64_t seed) : rng_(seed) {}

Tensor ParameterStore::create(const std::string& name, Shape shape, Init init,
                              double normal_std, bool trainable) {
  std::vector<double> values(shape_numel(shape), 0.0);
  switch (init) {
    case Init::kGlorotUniform: {
      const double fan_in = shape.empty() ? 1.0 : static_cast<double>(shape.front());
      const double fan_out = shape.size() < 2 ? 1.0 : static_cast<double>(shape.back());
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double& v : values) v = dist(rng_);
      break;
    }
    case Init::kNormal: {
      std::normal_distribution<double> dist(0.0, normal_std);
      for (double& v : values) v = dist(rng_);
      break;
    }
    case Init::kZeros:
      break;
    case Init::kPretrained:
      throw Error("parameter '" + name + "': use add_pretrained for pretrained tables");
  }
  round_to_precision(values);
  Parameter p{name, Tensor::from_data(std::move(shape), std::move(values), trainable), init,
              trainable};
  return insert(std::move(p)).value;
}

Tensor ParameterStore::add_pretrained(const std::string& name, const Tensor& value,
                                      bool trainable) {
  Parameter p{name, Tensor::from_data(value.shape(), {value.data().begin(), value.data().end()},
                                      trainable),
              Init::kPretrained, trainable};
  return insert(std::move(p)).value;
}

Parameter& ParameterStore::insert(Parameter p) {
  if (index_.count(p.name)) throw Error("duplicate parameter name '" + p.name + "'");
  index_.emplace(p.name, params_.size());
  params_.push_back(std::move(p));
  return params_.back();
}

const Parameter* ParameterStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

ParameterCounts ParameterStore::count(std::size_t bytes_per_value) const {
  ParameterCounts c;
  for (const Parameter& p : params_) {
    c.total += p.value.numel();
    if (p.trainable) c.trainable += p.value.numel();
  }
  c.bytes = c.total * bytes_per_value;
  return c;
}

void ParameterStore::zero_grad() {
  for (Parameter& p : params_) p.value.zero_grad();
}

}  // namespace newsrec::nn
