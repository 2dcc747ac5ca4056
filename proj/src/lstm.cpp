#include "chartrans/lstm.hpp"

#include <string>

namespace chartrans {

namespace {

template <typename T>
BasicTensor<T> as_rows(const BasicTensor<T>& t, std::size_t width, const char* what) {
  if (t.rank() == 1 && t.size() == width) return BasicTensor<T>({1, width}, t.values());
  if (t.rank() == 2 && t.cols() == width) return t;
  throw DimensionError(std::string("lstm: ") + what + " has shape " + t.shape_string() +
                       ", expected width " + std::to_string(width));
}

}  // namespace

template <typename T>
LstmCellParams<T> LstmCellParams<T>::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  return {input_dim, hidden_dim, BasicTensor<T>({4 * hidden_dim, input_dim + hidden_dim}),
          BasicTensor<T>({4 * hidden_dim})};
}

template <typename T>
LstmCellParams<T> LstmCellParams<T>::random(std::size_t input_dim, std::size_t hidden_dim,
                                            T scale, T forget_bias, std::mt19937_64& rng) {
  auto p = zeros(input_dim, hidden_dim);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (T& v : p.W.data()) v = static_cast<T>(dist(rng));
  for (std::size_t j = hidden_dim; j < 2 * hidden_dim; ++j) p.b[j] = forget_bias;
  return p;
}

template <typename T>
void LstmCellParams<T>::validate() const {
  const std::vector<std::size_t> w_shape{4 * hidden_dim, input_dim + hidden_dim};
  const std::vector<std::size_t> b_shape{4 * hidden_dim};
  if (input_dim == 0 || hidden_dim == 0 || W.shape() != w_shape || b.shape() != b_shape) {
    throw DimensionError("lstm parameters inconsistent with input_dim " +
                         std::to_string(input_dim) + ", hidden_dim " +
                         std::to_string(hidden_dim));
  }
}

template <typename T>
LstmStepResult<T> lstm_step(const LstmCellParams<T>& p, const BasicTensor<T>& x_in,
                            const BasicTensor<T>& h_in, const BasicTensor<T>& c_in) {
  p.validate();
  const std::size_t in = p.input_dim, hid = p.hidden_dim, width = in + hid;
  const BasicTensor<T> x = as_rows(x_in, in, "x");
  const BasicTensor<T> h_prev = as_rows(h_in, hid, "h_prev");
  BasicTensor<T> c_prev = as_rows(c_in, hid, "c_prev");
  const std::size_t batch = x.rows();
  if (h_prev.rows() != batch || c_prev.rows() != batch) {
    throw DimensionError("lstm: batch sizes of x, h_prev, c_prev disagree");
  }

  LstmStepResult<T> r;
  auto& cache = r.cache;
  cache.input_dim = in;
  cache.hidden_dim = hid;
  cache.z = BasicTensor<T>({batch, width});
  cache.gates = BasicTensor<T>({batch, 4 * hid});
  cache.tanh_c = BasicTensor<T>({batch, hid});
  r.h = BasicTensor<T>({batch, hid});
  r.c = BasicTensor<T>({batch, hid});

  for (std::size_t bi = 0; bi < batch; ++bi) {
    auto z = cache.z.row(bi);
    std::copy(x.row(bi).begin(), x.row(bi).end(), z.begin());
    std::copy(h_prev.row(bi).begin(), h_prev.row(bi).end(), z.begin() + in);

    auto gates = cache.gates.row(bi);
    for (std::size_t g = 0; g < 4 * hid; ++g) {
      const T* w = &p.W.at(g, 0);
      T acc = p.b[g];
      for (std::size_t k = 0; k < width; ++k) acc += w[k] * z[k];
      gates[g] = (g < 3 * hid) ? sigmoid(acc) : std::tanh(acc);
    }

    auto cp = c_prev.row(bi);
    auto c = r.c.row(bi);
    auto h = r.h.row(bi);
    auto tc = cache.tanh_c.row(bi);
    for (std::size_t j = 0; j < hid; ++j) {
      const T i_gate = gates[j], f_gate = gates[hid + j], o_gate = gates[2 * hid + j],
              cand = gates[3 * hid + j];
      c[j] = f_gate * cp[j] + i_gate * cand;
      tc[j] = std::tanh(c[j]);
      h[j] = o_gate * tc[j];
    }
  }
  cache.c_prev = std::move(c_prev);
  return r;
}

template <typename T>
LstmBackwardResult<T> lstm_step_backward(const LstmCellParams<T>& p, const LstmCache<T>& cache,
                                         const BasicTensor<T>& dh_in, const BasicTensor<T>& dc_in,
                                         LstmCellGrads<T>& grads) {
  const std::size_t in = p.input_dim, hid = p.hidden_dim, width = in + hid;
  if (cache.input_dim != in || cache.hidden_dim != hid || cache.z.cols() != width ||
      cache.gates.cols() != 4 * hid || cache.z.rows() != cache.gates.rows()) {
    throw ContractError("lstm backward: cache does not belong to these parameters");
  }
  if (!grads.W.same_shape(p.W) || !grads.b.same_shape(p.b)) {
    throw ContractError("lstm backward: gradient accumulator shape mismatch");
  }
  const std::size_t batch = cache.z.rows();
  const BasicTensor<T> dh = as_rows(dh_in, hid, "dh");
  const BasicTensor<T> dc = as_rows(dc_in, hid, "dc");
  if (dh.rows() != batch || dc.rows() != batch) {
    throw ContractError("lstm backward: upstream gradient batch does not match cache");
  }

  LstmBackwardResult<T> r{BasicTensor<T>({batch, in}), BasicTensor<T>({batch, hid}),
                          BasicTensor<T>({batch, hid})};
  std::vector<T> dpre(4 * hid);
  std::vector<T> dz(width);
  for (std::size_t bi = 0; bi < batch; ++bi) {
    auto gates = cache.gates.row(bi);
    auto tc = cache.tanh_c.row(bi);
    auto cp = cache.c_prev.row(bi);
    auto dhr = dh.row(bi);
    auto dcr = dc.row(bi);
    auto dcp = r.dc_prev.row(bi);
    for (std::size_t j = 0; j < hid; ++j) {
      const T i_gate = gates[j], f_gate = gates[hid + j], o_gate = gates[2 * hid + j],
              cand = gates[3 * hid + j];
      const T d_o = dhr[j] * tc[j];
      const T dct = dcr[j] + dhr[j] * o_gate * (T{1} - tc[j] * tc[j]);
      const T d_i = dct * cand;
      const T d_f = dct * cp[j];
      const T d_g = dct * i_gate;
      dcp[j] = dct * f_gate;
      dpre[j] = d_i * i_gate * (T{1} - i_gate);
      dpre[hid + j] = d_f * f_gate * (T{1} - f_gate);
      dpre[2 * hid + j] = d_o * o_gate * (T{1} - o_gate);
      dpre[3 * hid + j] = d_g * (T{1} - cand * cand);
    }

    auto z = cache.z.row(bi);
    std::fill(dz.begin(), dz.end(), T{0});
    for (std::size_t g = 0; g < 4 * hid; ++g) {
      const T d = dpre[g];
      grads.b[g] += d;
      if (d == T{0}) continue;
      T* gw = &grads.W.at(g, 0);
      const T* w = &p.W.at(g, 0);
      for (std::size_t k = 0; k < width; ++k) {
        gw[k] += d * z[k];
        dz[k] += d * w[k];
      }
    }
    std::copy(dz.begin(), dz.begin() + in, r.dx.row(bi).begin());
    std::copy(dz.begin() + in, dz.end(), r.dh_prev.row(bi).begin());
  }
  return r;
}

template struct LstmCellParams<float>;
template struct LstmCellParams<double>;

#define CHARTRANS_INSTANTIATE(T)                                                               \
  template LstmStepResult<T> lstm_step(const LstmCellParams<T>&, const BasicTensor<T>&,         \
                                       const BasicTensor<T>&, const BasicTensor<T>&);           \
  template LstmBackwardResult<T> lstm_step_backward(const LstmCellParams<T>&,                   \
                                                    const LstmCache<T>&, const BasicTensor<T>&, \
                                                    const BasicTensor<T>&, LstmCellGrads<T>&);

CHARTRANS_INSTANTIATE(float)
CHARTRANS_INSTANTIATE(double)

#undef CHARTRANS_INSTANTIATE

}  // namespace chartrans
