#pragma once

#include <cstddef>
#include <random>

#include "chartrans/tensor.hpp"

namespace chartrans {

// Gate weights are laid out as 4 blocks of `hidden` rows in the order
// input, forget, output, candidate. Each row spans [x, h_prev].
template <typename T>
struct LstmCellParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  BasicTensor<T> W;  // (4*hidden) x (input + hidden)
  BasicTensor<T> b;  // 4*hidden

  static LstmCellParams zeros(std::size_t input_dim, std::size_t hidden_dim);

  // Uniform(-scale, scale) weights, zero biases except the forget gate.
  static LstmCellParams random(std::size_t input_dim, std::size_t hidden_dim, T scale,
                               T forget_bias, std::mt19937_64& rng);

  void validate() const;
  bool operator==(const LstmCellParams&) const = default;
};

template <typename T>
struct LstmCellGrads {
  BasicTensor<T> W;
  BasicTensor<T> b;

  static LstmCellGrads like(const LstmCellParams<T>& p) {
    return {BasicTensor<T>(p.W.shape()), BasicTensor<T>(p.b.shape())};
  }
};

// Everything the backward pass needs from one forward step.
template <typename T>
struct LstmCache {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  BasicTensor<T> z;       // B x (input + hidden): concatenated [x, h_prev]
  BasicTensor<T> gates;   // B x 4H after nonlinearities
  BasicTensor<T> c_prev;  // B x H
  BasicTensor<T> tanh_c;  // B x H
};

template <typename T>
struct LstmStepResult {
  BasicTensor<T> h;  // B x H
  BasicTensor<T> c;  // B x H
  LstmCache<T> cache;
};

template <typename T>
struct LstmBackwardResult {
  BasicTensor<T> dx;       // B x I
  BasicTensor<T> dh_prev;  // B x H
  BasicTensor<T> dc_prev;  // B x H
};

// One LSTM step over a batch of B rows. Rank-1 inputs are treated as B = 1.
template <typename T>
LstmStepResult<T> lstm_step(const LstmCellParams<T>& p, const BasicTensor<T>& x,
                            const BasicTensor<T>& h_prev, const BasicTensor<T>& c_prev);

// Exact reverse of lstm_step. Parameter gradients are accumulated into `grads`.
template <typename T>
LstmBackwardResult<T> lstm_step_backward(const LstmCellParams<T>& p, const LstmCache<T>& cache,
                                         const BasicTensor<T>& dh, const BasicTensor<T>& dc,
                                         LstmCellGrads<T>& grads);

template <typename T>
inline T sigmoid(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

}  // namespace chartrans
