#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chartrans/lstm.hpp"
#include "chartrans/optim.hpp"
#include "chartrans/tensor.hpp"

namespace chartrans {

struct Seq2SeqConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = 64;
  std::size_t n_layers = 1;
  std::size_t max_len = 100;  // symbols, single bucket
  std::size_t batch_size = 16;
  bool reverse_source = true;
  double init_scale = 0.1;
  double clip_norm = 5.0;
  std::string preset = "desk";

  void validate() const;
  bool operator==(const Seq2SeqConfig&) const = default;

  // hidden 400, embed 400, batch 16, max_len 100, one layer.
  static Seq2SeqConfig paper(std::size_t vocab_size);
  static Seq2SeqConfig desk(std::size_t vocab_size);
};

template <typename T>
struct DecoderParams {
  LstmCellParams<T> cell;
  BasicTensor<T> proj_W;  // hidden x vocab
  BasicTensor<T> proj_b;  // vocab
};

// The four shareable groups of a translator. Copying a Seq2SeqParams copies
// the handles, so both copies alias the same storage; use clone() for a deep
// copy.
template <typename T>
struct Seq2SeqParams {
  std::shared_ptr<BasicTensor<T>> src_embedding;  // vocab x embed
  std::shared_ptr<LstmCellParams<T>> encoder;
  std::shared_ptr<BasicTensor<T>> tgt_embedding;  // vocab x embed
  std::shared_ptr<DecoderParams<T>> decoder;

  static Seq2SeqParams zeros(const Seq2SeqConfig& cfg);
  static Seq2SeqParams random(const Seq2SeqConfig& cfg, std::uint64_t seed);

  Seq2SeqParams clone() const;
  template <typename U>
  Seq2SeqParams<U> cast() const;

  // Fixed order: emb.src, enc.W, enc.b, emb.tgt, dec.W, dec.b, dec.proj_W, dec.proj_b.
  ParamRefs<T> named_parameters() const;

  // Throws on missing groups, shape disagreement with cfg, or non-finite values.
  void validate(const Seq2SeqConfig& cfg) const;
};

template <typename T>
struct EncodeResult {
  std::vector<T> h;                   // final hidden state
  std::vector<T> c;                   // final cell state
  std::vector<std::vector<T>> steps;  // hidden state after every consumed symbol
};

using Batch = std::vector<std::pair<std::vector<int>, std::vector<int>>>;

template <typename T>
EncodeResult<T> encode(const Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg,
                       std::span<const int> ids);

// Greedy decoding from GO; excludes GO and EOS; at most max_len symbols.
template <typename T>
std::vector<int> decode_greedy(const Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg,
                               const EncodeResult<T>& enc);

// Mean per-symbol NLL of target + EOS under teacher forcing.
template <typename T>
double sequence_nll(const Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg,
                    const EncodeResult<T>& enc, std::span<const int> target);

template <typename T>
struct LossAndGrads {
  double loss = 0.0;        // mean over unpadded target positions
  std::size_t symbols = 0;  // number of unpadded target positions
  GradSet<T> grads;
};

// Teacher-forced loss over a padded batch and its exact gradient.
template <typename T>
LossAndGrads<T> loss_and_gradients(const Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg,
                                   const Batch& batch);

template <typename T>
double batch_loss(const Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg, const Batch& batch);

// Forward, BPTT, global-norm clipping at cfg.clip_norm, SGD. Returns the
// pre-update loss.
template <typename T>
double train_step(Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg, const Batch& batch,
                  double lr);
// Same, with the update made by `opt`.
template <typename T>
double train_step(Seq2SeqParams<T>& params, const Seq2SeqConfig& cfg, const Batch& batch,
                  double lr, Optimizer<T>& opt);

// Fixed learning rate, halved whenever the observed loss fails to improve on
// the best seen for `patience` consecutive observations.
class LrSchedule {
 public:
  LrSchedule(double lr, std::size_t patience) : lr_(lr), patience_(patience) {}
  double lr() const { return lr_; }
  // Returns true when this observation halved the rate.
  bool observe(double eval_loss);

 private:
  double lr_;
  std::size_t patience_;
  double best_ = 0.0;
  bool has_best_ = false;
  std::size_t stalled_ = 0;
};

}  // namespace chartrans
