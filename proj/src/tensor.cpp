#include "chartrans/tensor.hpp"

#include <algorithm>

namespace chartrans {

namespace {

template <typename T>
void require_matrix(const BasicTensor<T>& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + " must be a matrix, got " + t.shape_string());
  }
}

}  // namespace

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul inner dimensions disagree: " + a.shape_string() + " * " +
                         b.shape_string());
  }
  BasicTensor<T> out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    auto out_row = out.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const T aij = a.at(i, j);
      auto b_row = b.row(j);
      for (std::size_t c = 0; c < n; ++c) out_row[c] += aij * b_row[c];
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& x) {
  BasicTensor<T> out = x;
  const std::size_t m = x.rows();
  for (std::size_t i = 0; i < m; ++i) {
    auto r = out.row(i);
    const T mx = *std::max_element(r.begin(), r.end());
    T total = 0;
    for (T& v : r) {
      v = std::exp(v - mx);
      total += v;
    }
    for (T& v : r) v /= total;
  }
  return out;
}

template <typename T>
CrossEntropyResult<T> cross_entropy(const BasicTensor<T>& logits, std::span<const int> targets,
                                    std::span<const T> weights) {
  const std::size_t m = logits.rows();
  const std::size_t vocab = logits.cols();
  if (targets.size() != m || weights.size() != m) {
    throw DimensionError("cross_entropy: expected " + std::to_string(m) + " targets");
  }
  CrossEntropyResult<T> res{0.0, softmax_rows(logits)};
  double denom = 0.0;
  for (std::size_t i = 0; i < m; ++i) denom += weights[i];
  if (denom <= 0.0) {
    res.grad.fill(T{0});
    return res;
  }
  for (std::size_t i = 0; i < m; ++i) {
    auto g = res.grad.row(i);
    if (weights[i] == T{0}) {
      std::fill(g.begin(), g.end(), T{0});
      continue;
    }
    const int t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw IndexError("cross_entropy: target id " + std::to_string(t) + " out of range for " +
                       std::to_string(vocab) + " classes");
    }
    // log-softmax computed from logits directly to stay accurate for p ~ 0.
    auto l = logits.row(i);
    const T mx = *std::max_element(l.begin(), l.end());
    double lse = 0.0;
    for (T v : l) lse += std::exp(static_cast<double>(v - mx));
    const double logp = static_cast<double>(l[t] - mx) - std::log(lse);
    res.loss -= weights[i] * logp;
    const T scale = static_cast<T>(weights[i] / denom);
    g[t] -= T{1};
    for (T& v : g) v *= scale;
  }
  res.loss /= denom;
  return res;
}

template <typename T>
CrossEntropyResult<T> cross_entropy(const BasicTensor<T>& logits, std::span<const int> targets) {
  std::vector<T> ones(logits.rows(), T{1});
  return cross_entropy(logits, targets, std::span<const T>(ones));
}

#define CHARTRANS_INSTANTIATE(T)                                                              \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template BasicTensor<T> softmax_rows(const BasicTensor<T>&);                                 \
  template CrossEntropyResult<T> cross_entropy(const BasicTensor<T>&, std::span<const int>);   \
  template CrossEntropyResult<T> cross_entropy(const BasicTensor<T>&, std::span<const int>,    \
                                               std::span<const T>);

CHARTRANS_INSTANTIATE(float)
CHARTRANS_INSTANTIATE(double)

#undef CHARTRANS_INSTANTIATE

}  // namespace chartrans
