#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "chartrans/seq2seq.hpp"
#include "chartrans/vocab.hpp"

namespace chartrans {

inline constexpr int kBundleFormatVersion = 1;

// On-disk layout of a bundle directory:
//   meta.json   config, format version, tensor manifest (shape + CRC32 per tensor)
//   vocab.txt   one symbol per line
//   <name>.f32  raw little-endian float32, row-major, no header
struct BundleContents {
  Seq2SeqConfig config;
  CharVocab vocab;
  std::map<std::string, Tensor> tensors;
  // Multitask metadata (languages, pivot, tasks, default model). May be null.
  nlohmann::json extra;
};

void write_bundle(const std::string& dir, const Seq2SeqConfig& cfg, const CharVocab& vocab,
                  const std::map<std::string, const Tensor*>& tensors,
                  const nlohmann::json& extra);

// Validates version, manifest, file sizes and checksums before returning
// anything; a failure leaves no partially loaded state.
BundleContents read_bundle(const std::string& dir);

nlohmann::json config_to_json(const Seq2SeqConfig& cfg);
Seq2SeqConfig config_from_json(const nlohmann::json& j);

// Tensor names for a translator whose groups belong to the given languages:
// emb.src.<src>, enc.<src>.{W,b}, emb.tgt.<tgt>, dec.<tgt>.{W,b,proj_W,proj_b}.
std::map<std::string, const Tensor*> model_tensors(const Seq2SeqParams<float>& params,
                                                   const std::string& src_lang,
                                                   const std::string& tgt_lang);

// Builds a translator from loaded tensors. Copies the data.
Seq2SeqParams<float> model_from_tensors(const std::map<std::string, Tensor>& tensors,
                                        const Seq2SeqConfig& cfg, const std::string& src_lang,
                                        const std::string& tgt_lang);

struct ModelBundle {
  Seq2SeqConfig config;
  CharVocab vocab;
  Seq2SeqParams<float> params;
  std::string source_lang;
  std::string target_lang;
};

void save_bundle(const Seq2SeqParams<float>& params, const Seq2SeqConfig& cfg,
                 const CharVocab& vocab, const std::string& dir,
                 const std::string& src_lang = "src", const std::string& tgt_lang = "tgt");

// Loads the bundle's default translator.
ModelBundle load_bundle(const std::string& dir);
// Loads the translator src_lang -> tgt_lang from a (possibly multitask) bundle.
ModelBundle load_bundle(const std::string& dir, const std::string& src_lang,
                        const std::string& tgt_lang);

std::uint32_t crc32_of(std::span<const float> values);

}  // namespace chartrans
