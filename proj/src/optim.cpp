#include "chartrans/optim.hpp"

#include <algorithm>
#include <cmath>

namespace chartrans {

template <typename T>
double global_norm(const GradSet<T>& g) {
  double sq = 0.0;
  for (const auto& [name, t] : g) {
    for (T v : t.data()) sq += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(sq);
}

template <typename T>
double clip_global_norm_inplace(GradSet<T>& g, double max_norm) {
  if (!(max_norm > 0.0)) throw InputError("clip_global_norm: max_norm must be positive");
  const double norm = global_norm(g);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, t] : g) {
      for (T& v : t.data()) v = static_cast<T>(v * scale);
    }
  }
  return norm;
}

template <typename T>
void sgd_step(const ParamRefs<T>& params, const GradSet<T>& g, double lr) {
  if (lr < 0.0) throw InputError("sgd_step: learning rate must be non-negative");
  for (const auto& [name, p] : params) {
    auto it = g.find(name);
    if (it == g.end()) throw ContractError("sgd_step: no gradient for parameter '" + name + "'");
    if (!it->second.same_shape(*p)) {
      throw ContractError("sgd_step: gradient shape mismatch for '" + name + "'");
    }
    auto pv = p->data();
    auto gv = it->second.data();
    const T step = static_cast<T>(lr);
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] -= step * gv[i];
  }
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw InputError("unknown optimizer '" + s + "'");
}

template <typename T>
void Optimizer<T>::step(const ParamRefs<T>& params, const GradSet<T>& g, double lr) {
  if (config_.kind == OptimizerKind::sgd) {
    sgd_step(params, g, lr);
    return;
  }
  if (lr < 0.0) throw InputError("adam: learning rate must be non-negative");
  for (const auto& [name, p] : params) {
    auto it = g.find(name);
    if (it == g.end()) throw ContractError("adam: no gradient for parameter '" + name + "'");
    if (!it->second.same_shape(*p)) {
      throw ContractError("adam: gradient shape mismatch for '" + name + "'");
    }
    auto pv = p->data();
    auto gv = it->second.data();
    auto& st = state_[pv.data()];
    if (st.m.size() != pv.size()) {
      st.m.assign(pv.size(), 0.0);
      st.v.assign(pv.size(), 0.0);
      st.t = 0;
    }
    ++st.t;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double gi = gv[i];
      st.m[i] = b1 * st.m[i] + (1.0 - b1) * gi;
      st.v[i] = b2 * st.v[i] + (1.0 - b2) * gi * gi;
      const double mh = st.m[i] / c1;
      const double vh = st.v[i] / c2;
      pv[i] -= static_cast<T>(lr * mh / (std::sqrt(vh) + config_.eps));
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& analytic, std::vector<double> x, double h) {
  if (analytic.size() != x.size()) throw DimensionError("grad_check: gradient size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

double grad_check(const std::function<double()>& f, const ParamRefs<double>& params,
                  const GradSet<double>& analytic, double h) {
  double worst = 0.0;
  for (const auto& [name, p] : params) {
    auto it = analytic.find(name);
    if (it == analytic.end()) throw ContractError("grad_check: no gradient for '" + name + "'");
    auto v = p->data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + h;
      const double up = f();
      v[i] = orig - h;
      const double down = f();
      v[i] = orig;
      worst = std::max(worst, relative_error(it->second[i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

template double global_norm(const GradSet<float>&);
template double global_norm(const GradSet<double>&);
template double clip_global_norm_inplace(GradSet<float>&, double);
template double clip_global_norm_inplace(GradSet<double>&, double);
template void sgd_step(const ParamRefs<float>&, const GradSet<float>&, double);
template void sgd_step(const ParamRefs<double>&, const GradSet<double>&, double);

}  // namespace chartrans
