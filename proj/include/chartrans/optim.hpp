#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "chartrans/tensor.hpp"

namespace chartrans {

// Parameter identifier -> gradient of identical shape. Iteration follows key
// order, which fixes the summation order of norms.
template <typename T>
using GradSet = std::map<std::string, BasicTensor<T>>;

// Named, mutable views of a model's trainable tensors.
template <typename T>
using ParamRefs = std::vector<std::pair<std::string, BasicTensor<T>*>>;

template <typename T>
GradSet<T> zero_grads(const ParamRefs<T>& params) {
  GradSet<T> g;
  for (const auto& [name, t] : params) g.emplace(name, BasicTensor<T>(t->shape()));
  return g;
}

template <typename T>
double global_norm(const GradSet<T>& g);

// Rescales every entry by max_norm / norm when the global L2 norm exceeds
// max_norm. Returns the norm measured before clipping.
template <typename T>
double clip_global_norm_inplace(GradSet<T>& g, double max_norm);

template <typename T>
GradSet<T> clip_global_norm(GradSet<T> g, double max_norm) {
  clip_global_norm_inplace(g, max_norm);
  return g;
}

// p <- p - lr * g for every parameter. Every parameter needs a gradient.
template <typename T>
void sgd_step(const ParamRefs<T>& params, const GradSet<T>& g, double lr);

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Stateful update rule. Adam moments are keyed by tensor storage, so views
// that alias one tensor also share its moments and step count.
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}
  const OptimizerConfig& config() const { return config_; }
  void step(const ParamRefs<T>& params, const GradSet<T>& g, double lr);

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t t = 0;
  };
  OptimizerConfig config_;
  std::map<const T*, Moments> state_;
};

// Max over coordinates of |analytic - central| / max(1e-8, |analytic| + |central|).
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& analytic, std::vector<double> x, double h = 1e-4);

// Same measure over a named parameter set, perturbing each tensor in place.
double grad_check(const std::function<double()>& f, const ParamRefs<double>& params,
                  const GradSet<double>& analytic, double h = 1e-4);

double relative_error(double analytic, double numeric);

}  // namespace chartrans
