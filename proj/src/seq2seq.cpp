#include "chartrans/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "chartrans/vocab.hpp"

namespace chartrans {

namespace {

constexpr double kEmbeddingScale = 0.5;
constexpr double kForgetBias = 1.0;

template <typename T>
std::vector<int> prepare_source(const Seq2SeqConfig& cfg, std::span<const int> ids) {
  if (ids.empty()) throw InputError("encode: empty input sequence");
  std::vector<int> src(ids.begin(), ids.begin() + std::min(ids.size(), cfg.max_len));
  if (cfg.reverse_source) std::reverse(src.begin(), src.end());
  return src;
}

void check_ids(std::span<const int> ids, std::size_t vocab, const char* what) {
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw IndexError(std::string(what) + ": symbol id " + std::to_string(id) +
                       " outside vocabulary of size " + std::to_string(vocab));
    }
  }
}

template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& table, std::span<const int> ids) {
  const std::size_t width = table.cols();
  BasicTensor<T> out({ids.size(), width});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto src = table.row(static_cast<std::size_t>(ids[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

// logits = h * W + b for every row of h.
template <typename T>
BasicTensor<T> project(const DecoderParams<T>& dec, const BasicTensor<T>& h) {
  const std::size_t batch = h.rows(), hid = h.cols(), vocab = dec.proj_W.cols();
  BasicTensor<T> logits({batch, vocab});
  for (std::size_t r = 0; r < batch; ++r) {
    auto out = logits.row(r);
    std::copy(dec.proj_b.data().begin(), dec.proj_b.data().end(), out.begin());
    auto hr = h.row(r);
    for (std::size_t k = 0; k < hid; ++k) {
      const T hk = hr[k];
      const T* w = &dec.proj_W.at(k, 0);
      for (std::size_t v = 0; v < vocab; ++v) out[v] += hk * w[v];
    }
  }
  return logits;
}

// log softmax(row)[target], accumulated in double.
template <typename T>
double log_prob(std::span<const T> row, int target) {
  const T mx = *std::max_element(row.begin(), row.end());
  double lse = 0.0;
  for (T v : row) lse += std::exp(static_cast<double>(v - mx));
  return static_cast<double>(row[target] - mx) - std::log(lse);
}

template <typename T>
BasicTensor<T> state_row(const std::vector<T>& v) {
  return BasicTensor<T>({1, v.size()}, v);
}

}  // namespace

void Seq2SeqConfig::validate() const {
  if (vocab_size <= kNumControls) throw InputError("config: vocabulary has no content symbols");
  if (hidden_dim < 1 || embed_dim < 1 || max_len < 1 || batch_size < 1) {
    throw InputError("config: hidden_dim, embed_dim, max_len and batch_size must be >= 1");
  }
  if (n_layers != 1) throw InputError("config: only single-layer models are supported");
  if (!(clip_norm > 0.0)) throw InputError("config: clip_norm must be positive");
}

Seq2SeqConfig Seq2SeqConfig::paper(std::size_t vocab_size) {
  Seq2SeqConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.hidden_dim = 400;
  cfg.embed_dim = 400;
  cfg.n_layers = 1;
  cfg.max_len = 100;
  cfg.batch_size = 16;
  cfg.preset = "paper";
  return cfg;
}

Seq2SeqConfig Seq2SeqConfig::desk(std::size_t vocab_size) {
  Seq2SeqConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.preset = "desk";
  return cfg;
}

template <typename T>
Seq2SeqParams<T> Seq2SeqParams<T>::zeros(const Seq2SeqConfig& cfg) {
  cfg.validate();
  const std::size_t V = cfg.vocab_size, E = cfg.embed_dim, H = cfg.hidden_dim;
  Seq2SeqParams p;
  p.src_embedding = std::make_shared<BasicTensor<T>>(std::vector<std::size_t>{V, E});
  p.tgt_embedding = std::make_shared<BasicTensor<T>>(std::vector<std::size_t>{V, E});
  p.encoder = std::make_shared<LstmCellParams<T>>(LstmCellParams<T>::zeros(E, H));
  p.decoder = std::make_shared<DecoderParams<T>>(DecoderParams<T>{
      LstmCellParams<T>::zeros(E, H), BasicTensor<T>({H, V}), BasicTensor<T>({V})});
  return p;
}

template <typename T>
Seq2SeqParams<T> Seq2SeqParams<T>::random(const Seq2SeqConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t V = cfg.vocab_size, E = cfg.embed_dim, H = cfg.hidden_dim;
  const T scale = static_cast<T>(cfg.init_scale);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> emb(-kEmbeddingScale, kEmbeddingScale);
  std::uniform_real_distribution<double> w(-cfg.init_scale, cfg.init_scale);
  Seq2SeqParams p = zeros(cfg);
  for (T& v : p.src_embedding->data()) v = static_cast<T>(emb(rng));
  *p.encoder = LstmCellParams<T>::random(E, H, scale, static_cast<T>(kForgetBias), rng);
  for (T& v : p.tgt_embedding->data()) v = static_cast<T>(emb(rng));
  p.decoder->cell = LstmCellParams<T>::random(E, H, scale, static_cast<T>(kForgetBias), rng);
  for (T& v : p.decoder->proj_W.data()) v = static_cast<T>(w(rng));
  return p;
}

template <typename T>
Seq2SeqParams<T> Seq2SeqParams<T>::clone() const {
  Seq2SeqParams p;
  p.src_embedding = std::make_shared<BasicTensor<T>>(*src_embedding);
  p.encoder = std::make_shared<LstmCellParams<T>>(*encoder);
  p.tgt_embedding = std::make_shared<BasicTensor<T>>(*tgt_embedding);
  p.decoder = std::make_shared<DecoderParams<T>>(*decoder);
  return p;
}

template <typename T>
template <typename U>
Seq2SeqParams<U> Seq2SeqParams<T>::cast() const {
  auto cast_cell = [](const LstmCellParams<T>& c) {
    return LstmCellParams<U>{c.input_dim, c.hidden_dim, c.W.template cast<U>(),
                             c.b.template cast<U>()};
  };
  Seq2SeqParams<U> p;
  p.src_embedding = std::make_shared<BasicTensor<U>>(src_embedding->template cast<U>());
  p.encoder = std::make_shared<LstmCellParams<U>>(cast_cell(*encoder));
  p.tgt_embedding = std::make_shared<BasicTensor<U>>(tgt_embedding->template cast<U>());
  p.decoder = std::make_shared<DecoderParams<U>>(
      DecoderParams<U>{cast_cell(decoder->cell), decoder->proj_W.template cast<U>(),
                       decoder->proj_b.template cast<U>()});
  return p;
}

template <typename T>
ParamRefs<T> Seq2SeqParams<T>::named_parameters() const {
  return {{"emb.src", src_embedding.get()},     {"enc.W", &encoder->W},
          {"enc.b", &encoder->b},               {"emb.tgt", tgt_embedding.get()},
          {"dec.W", &decoder->cell.W},          {"dec.b", &decoder->cell.b},
          {"dec.proj_W", &decoder->proj_W},     {"dec.proj_b", &decoder->proj_b}};
}

template <typename T>
void Seq2SeqParams<T>::validate(const Seq2SeqConfig& cfg) const {
  if (!src_embedding || !encoder || !tgt_embedding || !decoder) {
    throw ContractError("model parameters: a parameter group is missing");
  }
  const std::size_t V = cfg.vocab_size, E = cfg.embed_dim, H = cfg.hidden_dim;
  const std::vector<std::size_t> emb_shape{V, E};
  encoder->validate();
  decoder->cell.validate();
  if (src_embedding->shape() != emb_shape || tgt_embedding->shape() != emb_shape ||
      encoder->input_dim != E || encoder->hidden_dim != H || decoder->cell.input_dim != E ||
      decoder->cell.hidden_dim != H || decoder->proj_W.shape() != std::vector<std::size_t>{H, V} ||
      decoder->proj_b.shape() != std::vector<std::size_t>{V}) {
    throw DimensionError("model parameters do not match the configuration");
  }
  for (const auto& [name, t] : named_parameters()) {
    if (!t->all_finite()) throw ContractError("model parameter '" + name + "' is not finite");
  }
}

template <typename T>
EncodeResult<T> encode(const Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg,
                       std::span<const int> ids) {
  const auto src = prepare_source<T>(cfg, ids);
  check_ids(src, cfg.vocab_size, "encode");
  const std::size_t H = cfg.hidden_dim;
  BasicTensor<T> h({1, H}), c({1, H});
  EncodeResult<T> res;
  res.steps.reserve(src.size());
  for (int id : src) {
    const int one[1] = {id};
    auto step = lstm_step(*params.encoder, gather_rows(*params.src_embedding, one), h, c);
    h = std::move(step.h);
    c = std::move(step.c);
    res.steps.push_back(h.values());
  }
  res.h = h.values();
  res.c = c.values();
  return res;
}

template <typename T>
std::vector<int> decode_greedy(const Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg,
                               const EncodeResult<T>& enc) {
  if (enc.h.size() != cfg.hidden_dim || enc.c.size() != cfg.hidden_dim) {
    throw DimensionError("decode_greedy: encoder state does not match hidden_dim");
  }
  BasicTensor<T> h = state_row(enc.h), c = state_row(enc.c);
  std::vector<int> out;
  int prev = kGo;
  while (out.size() < cfg.max_len) {
    const int one[1] = {prev};
    auto step = lstm_step(params.decoder->cell, gather_rows(*params.tgt_embedding, one), h, c);
    h = std::move(step.h);
    c = std::move(step.c);
    const auto logits = project(*params.decoder, h);
    auto row = logits.row(0);
    // max_element returns the first maximum, i.e. the lowest id on ties.
    const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == kEos) break;
    out.push_back(best);
    prev = best;
  }
  return out;
}

template <typename T>
double sequence_nll(const Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg,
                    const EncodeResult<T>& enc, std::span<const int> target) {
  if (enc.h.size() != cfg.hidden_dim || enc.c.size() != cfg.hidden_dim) {
    throw DimensionError("sequence_nll: encoder state does not match hidden_dim");
  }
  std::vector<int> tgt(target.begin(), target.begin() + std::min(target.size(), cfg.max_len));
  check_ids(tgt, cfg.vocab_size, "sequence_nll");
  BasicTensor<T> h = state_row(enc.h), c = state_row(enc.c);
  double total = 0.0;
  int prev = kGo;
  for (std::size_t t = 0; t <= tgt.size(); ++t) {
    const int one[1] = {prev};
    auto step = lstm_step(params.decoder->cell, gather_rows(*params.tgt_embedding, one), h, c);
    h = std::move(step.h);
    c = std::move(step.c);
    const auto logits = project(*params.decoder, h);
    const int gold = t < tgt.size() ? tgt[t] : kEos;
    total -= log_prob<T>(logits.row(0), gold);
    prev = gold;
  }
  return total / static_cast<double>(tgt.size() + 1);
}

template <typename T>
LossAndGrads<T> loss_and_gradients(const Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg,
                                   const Batch& batch) {
  if (batch.empty()) throw InputError("training batch is empty");
  const std::size_t B = batch.size(), H = cfg.hidden_dim, V = cfg.vocab_size;

  // Padded, truncated, optionally reversed sources; targets with EOS.
  std::vector<std::vector<int>> src(B), dec_in(B), dec_out(B);
  std::size_t enc_steps = 0, dec_steps = 0, symbols = 0;
  for (std::size_t b = 0; b < B; ++b) {
    src[b] = prepare_source<T>(cfg, batch[b].first);
    check_ids(src[b], V, "train");
    const auto& tgt = batch[b].second;
    const std::size_t len = std::min(tgt.size(), cfg.max_len);
    check_ids(std::span<const int>(tgt.data(), len), V, "train");
    dec_in[b].push_back(kGo);
    dec_in[b].insert(dec_in[b].end(), tgt.begin(), tgt.begin() + len);
    dec_out[b].assign(tgt.begin(), tgt.begin() + len);
    dec_out[b].push_back(kEos);
    enc_steps = std::max(enc_steps, src[b].size());
    dec_steps = std::max(dec_steps, dec_out[b].size());
    symbols += dec_out[b].size();
  }

  // Encoder forward. Rows past their length keep their state.
  std::vector<LstmCache<T>> enc_cache;
  std::vector<std::vector<char>> enc_active;
  BasicTensor<T> h({B, H}), c({B, H});
  std::vector<int> ids(B);
  for (std::size_t t = 0; t < enc_steps; ++t) {
    std::vector<char> active(B);
    for (std::size_t b = 0; b < B; ++b) {
      active[b] = t < src[b].size();
      ids[b] = active[b] ? src[b][t] : kPad;
    }
    auto step = lstm_step(*params.encoder, gather_rows(*params.src_embedding, ids), h, c);
    for (std::size_t b = 0; b < B; ++b) {
      if (!active[b]) continue;
      std::copy(step.h.row(b).begin(), step.h.row(b).end(), h.row(b).begin());
      std::copy(step.c.row(b).begin(), step.c.row(b).end(), c.row(b).begin());
    }
    enc_cache.push_back(std::move(step.cache));
    enc_active.push_back(std::move(active));
  }

  // Decoder forward with teacher forcing.
  std::vector<LstmCache<T>> dec_cache;
  std::vector<BasicTensor<T>> dec_h;
  std::vector<BasicTensor<T>> dlogits;
  std::vector<std::vector<int>> dec_ids;
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(symbols);
  for (std::size_t t = 0; t < dec_steps; ++t) {
    for (std::size_t b = 0; b < B; ++b) ids[b] = t < dec_in[b].size() ? dec_in[b][t] : kPad;
    auto step = lstm_step(params.decoder->cell, gather_rows(*params.tgt_embedding, ids), h, c);
    h = step.h;
    c = step.c;
    auto logits = project(*params.decoder, h);
    // Softmax gradient written in place over the logits.
    for (std::size_t b = 0; b < B; ++b) {
      auto row = logits.row(b);
      if (t >= dec_out[b].size()) {
        std::fill(row.begin(), row.end(), T{0});
        continue;
      }
      const int gold = dec_out[b][t];
      total -= log_prob<T>(row, gold);
      const T mx = *std::max_element(row.begin(), row.end());
      double z = 0.0;
      for (T& v : row) {
        v = std::exp(v - mx);
        z += v;
      }
      for (T& v : row) v = static_cast<T>(v / z * inv);
      row[gold] -= static_cast<T>(inv);
    }
    dec_cache.push_back(std::move(step.cache));
    dec_h.push_back(std::move(step.h));
    dlogits.push_back(std::move(logits));
    dec_ids.push_back(ids);
  }

  LossAndGrads<T> out;
  out.loss = total * inv;
  out.symbols = symbols;
  out.grads = zero_grads(params.named_parameters());
  auto& g_src_emb = out.grads.at("emb.src");
  auto& g_tgt_emb = out.grads.at("emb.tgt");
  auto& g_proj_W = out.grads.at("dec.proj_W");
  auto& g_proj_b = out.grads.at("dec.proj_b");
  LstmCellGrads<T> g_dec{std::move(out.grads.at("dec.W")), std::move(out.grads.at("dec.b"))};
  LstmCellGrads<T> g_enc{std::move(out.grads.at("enc.W")), std::move(out.grads.at("enc.b"))};

  const auto& proj_W = params.decoder->proj_W;
  BasicTensor<T> dh({B, H}), dc({B, H});
  for (std::size_t t = dec_steps; t-- > 0;) {
    const auto& dl = dlogits[t];
    const auto& ht = dec_h[t];
    for (std::size_t b = 0; b < B; ++b) {
      auto dlr = dl.row(b);
      auto hr = ht.row(b);
      auto dhr = dh.row(b);
      for (std::size_t v = 0; v < V; ++v) g_proj_b[v] += dlr[v];
      for (std::size_t k = 0; k < H; ++k) {
        const T* w = &proj_W.at(k, 0);
        T* gw = &g_proj_W.at(k, 0);
        const T hk = hr[k];
        T acc = 0;
        for (std::size_t v = 0; v < V; ++v) {
          gw[v] += hk * dlr[v];
          acc += dlr[v] * w[v];
        }
        dhr[k] += acc;
      }
    }
    auto back = lstm_step_backward(params.decoder->cell, dec_cache[t], dh, dc, g_dec);
    for (std::size_t b = 0; b < B; ++b) {
      auto dx = back.dx.row(b);
      auto ge = g_tgt_emb.row(static_cast<std::size_t>(dec_ids[t][b]));
      for (std::size_t e = 0; e < dx.size(); ++e) ge[e] += dx[e];
    }
    dh = std::move(back.dh_prev);
    dc = std::move(back.dc_prev);
  }

  for (std::size_t t = enc_steps; t-- > 0;) {
    const auto& active = enc_active[t];
    BasicTensor<T> dh_step = dh, dc_step = dc;
    for (std::size_t b = 0; b < B; ++b) {
      if (active[b]) continue;
      std::fill(dh_step.row(b).begin(), dh_step.row(b).end(), T{0});
      std::fill(dc_step.row(b).begin(), dc_step.row(b).end(), T{0});
    }
    auto back = lstm_step_backward(*params.encoder, enc_cache[t], dh_step, dc_step, g_enc);
    for (std::size_t b = 0; b < B; ++b) {
      if (!active[b]) continue;
      auto dx = back.dx.row(b);
      auto ge = g_src_emb.row(static_cast<std::size_t>(src[b][t]));
      for (std::size_t e = 0; e < dx.size(); ++e) ge[e] += dx[e];
      std::copy(back.dh_prev.row(b).begin(), back.dh_prev.row(b).end(), dh.row(b).begin());
      std::copy(back.dc_prev.row(b).begin(), back.dc_prev.row(b).end(), dc.row(b).begin());
    }
  }

  out.grads.at("dec.W") = std::move(g_dec.W);
  out.grads.at("dec.b") = std::move(g_dec.b);
  out.grads.at("enc.W") = std::move(g_enc.W);
  out.grads.at("enc.b") = std::move(g_enc.b);
  return out;
}

template <typename T>
double batch_loss(const Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg, const Batch& batch) {
  double total = 0.0;
  std::size_t symbols = 0;
  for (const auto& [src, tgt] : batch) {
    const auto enc = encode(params, cfg, src);
    const std::size_t n = std::min(tgt.size(), cfg.max_len) + 1;
    total += sequence_nll(params, cfg, enc, tgt) * static_cast<double>(n);
    symbols += n;
  }
  return symbols ? total / static_cast<double>(symbols) : 0.0;
}

template <typename T>
double train_step(Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg, const Batch& batch,
                  double lr) {
  auto lg = loss_and_gradients(params, cfg, batch);
  clip_global_norm_inplace(lg.grads, cfg.clip_norm);
  sgd_step(params.named_parameters(), lg.grads, lr);
  return lg.loss;
}

template <typename T>
double train_step(Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg, const Batch& batch,
                  double lr, Optimizer<T>& opt) {
  auto lg = loss_and_gradients(params, cfg, batch);
  clip_global_norm_inplace(lg.grads, cfg.clip_norm);
  opt.step(params.named_parameters(), lg.grads, lr);
  return lg.loss;
}

bool LrSchedule::observe(double eval_loss) {
  if (!has_best_ || eval_loss < best_) {
    best_ = eval_loss;
    has_best_ = true;
    stalled_ = 0;
    return false;
  }
  if (++stalled_ >= patience_ && patience_ > 0) {
    lr_ *= 0.5;
    stalled_ = 0;
    return true;
  }
  return false;
}

template struct Seq2SeqParams<float>;
template struct Seq2SeqParams<double>;
template Seq2SeqParams<double> Seq2SeqParams<float>::cast<double>() const;
template Seq2SeqParams<float> Seq2SeqParams<double>::cast<float>() const;

#define CHARTRANS_INSTANTIATE(T)                                                               \
  template EncodeResult<T> encode(const Seq2SeqParams<T>&, const Seq2SeqConfig&,                \
                                  std::span<const int>);                                        \
  template std::vector<int> decode_greedy(const Seq2SeqParams<T>&, const Seq2SeqConfig&,        \
                                          const EncodeResult<T>&);                              \
  template double sequence_nll(const Seq2SeqParams<T>&, const Seq2SeqConfig&,                   \
                               const EncodeResult<T>&, std::span<const int>);                   \
  template LossAndGrads<T> loss_and_gradients(const Seq2SeqParams<T>&, const Seq2SeqConfig&,    \
                                              const Batch&);                                    \
  template double batch_loss(const Seq2SeqParams<T>&, const Seq2SeqConfig&, const Batch&);      \
  template double train_step(Seq2SeqParams<T>&, const Seq2SeqConfig&, const Batch&, double);  \
  template double train_step(Seq2SeqParams<T>&, const Seq2SeqConfig&, const Batch&, double,  \
                             Optimizer<T>&);

CHARTRANS_INSTANTIATE(float)
CHARTRANS_INSTANTIATE(double)

#undef CHARTRANS_INSTANTIATE

}  // namespace chartrans
