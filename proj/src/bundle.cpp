#include "chartrans/bundle.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "chartrans/error.hpp"

namespace chartrans {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<unsigned char> to_le_bytes(std::span<const float> values) {
  std::vector<unsigned char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return bytes;
}

std::vector<float> from_le_bytes(const std::string& bytes) {
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
    }
    values[i] = std::bit_cast<float>(bits);
  }
  return values;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw FormatError("failed writing " + path.string());
}

std::uint32_t crc32_bytes(const unsigned char* data, std::size_t size) {
  return static_cast<std::uint32_t>(::crc32(0L, data, static_cast<uInt>(size)));
}

}  // namespace

std::uint32_t crc32_of(std::span<const float> values) {
  const auto bytes = to_le_bytes(values);
  return crc32_bytes(bytes.data(), bytes.size());
}

json config_to_json(const Seq2SeqConfig& cfg) {
  return json{{"vocab_size", cfg.vocab_size}, {"hidden_dim", cfg.hidden_dim},
              {"embed_dim", cfg.embed_dim},   {"n_layers", cfg.n_layers},
              {"max_len", cfg.max_len},       {"batch_size", cfg.batch_size},
              {"reverse_source", cfg.reverse_source}, {"init_scale", cfg.init_scale},
              {"clip_norm", cfg.clip_norm},   {"preset", cfg.preset}};
}

Seq2SeqConfig config_from_json(const json& j) {
  try {
    Seq2SeqConfig cfg;
    cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
    cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
    cfg.n_layers = j.at("n_layers").get<std::size_t>();
    cfg.max_len = j.at("max_len").get<std::size_t>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.reverse_source = j.at("reverse_source").get<bool>();
    cfg.init_scale = j.at("init_scale").get<double>();
    cfg.clip_norm = j.at("clip_norm").get<double>();
    cfg.preset = j.at("preset").get<std::string>();
    return cfg;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bundle config: ") + e.what());
  }
}

void write_bundle(const std::string& dir, const Seq2SeqConfig& cfg, const CharVocab& vocab,
                  const std::map<std::string, const Tensor*>& tensors, const json& extra) {
  if (vocab.size() != cfg.vocab_size) {
    throw ContractError("write_bundle: vocabulary size does not match config");
  }
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw FormatError("cannot create bundle directory " + dir + ": " + ec.message());

  json manifest = json::array();
  for (const auto& [name, t] : tensors) {
    const auto bytes = to_le_bytes(t->data());
    const std::string file = name + ".f32";
    write_file(root / file, bytes.data(), bytes.size());
    manifest.push_back({{"name", name},
                        {"file", file},
                        {"shape", t->shape()},
                        {"crc32", crc32_bytes(bytes.data(), bytes.size())}});
  }
  json meta{{"format_version", kBundleFormatVersion},
            {"config", config_to_json(cfg)},
            {"tensors", manifest}};
  if (!extra.is_null()) meta["multitask"] = extra;
  const std::string text = meta.dump(2) + "\n";
  write_file(root / "meta.json", text.data(), text.size());
  save_vocab(vocab, (root / "vocab.txt").string());
}

BundleContents read_bundle(const std::string& dir) {
  const fs::path root(dir);
  json meta;
  try {
    meta = json::parse(read_file(root / "meta.json"));
  } catch (const json::parse_error& e) {
    throw FormatError("bundle meta.json is not valid JSON: " + std::string(e.what()));
  }
  if (!meta.contains("format_version") || !meta["format_version"].is_number_integer()) {
    throw FormatError("bundle meta.json lacks a format_version");
  }
  const int version = meta["format_version"].get<int>();
  if (version != kBundleFormatVersion) {
    throw VersionError("bundle format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kBundleFormatVersion) +
                       ")");
  }
  BundleContents out;
  out.config = config_from_json(meta.at("config"));
  out.vocab = load_vocab((root / "vocab.txt").string());
  if (out.vocab.size() != out.config.vocab_size) {
    throw FormatError("bundle vocabulary size does not match its config");
  }
  try {
    for (const auto& entry : meta.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto file = entry.at("file").get<std::string>();
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto crc = entry.at("crc32").get<std::uint32_t>();
      if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
        throw FormatError("bundle tensor file name '" + file + "' escapes the bundle");
      }
      std::size_t count = 1;
      for (std::size_t d : shape) count *= d;
      const std::string bytes = read_file(root / file);
      if (bytes.size() != count * 4) {
        throw FormatError("bundle tensor '" + name + "' has " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(count * 4));
      }
      if (crc32_bytes(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()) != crc) {
        throw ChecksumError("bundle tensor '" + name + "' fails its CRC32 check");
      }
      out.tensors.emplace(name, Tensor(shape, from_le_bytes(bytes)));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bundle tensor manifest: ") + e.what());
  }
  if (meta.contains("multitask")) out.extra = meta["multitask"];
  return out;
}

std::map<std::string, const Tensor*> model_tensors(const Seq2SeqParams<float>& params,
                                                   const std::string& src_lang,
                                                   const std::string& tgt_lang) {
  return {{"emb.src." + src_lang, params.src_embedding.get()},
          {"enc." + src_lang + ".W", &params.encoder->W},
          {"enc." + src_lang + ".b", &params.encoder->b},
          {"emb.tgt." + tgt_lang, params.tgt_embedding.get()},
          {"dec." + tgt_lang + ".W", &params.decoder->cell.W},
          {"dec." + tgt_lang + ".b", &params.decoder->cell.b},
          {"dec." + tgt_lang + ".proj_W", &params.decoder->proj_W},
          {"dec." + tgt_lang + ".proj_b", &params.decoder->proj_b}};
}

Seq2SeqParams<float> model_from_tensors(const std::map<std::string, Tensor>& tensors,
                                        const Seq2SeqConfig& cfg, const std::string& src_lang,
                                        const std::string& tgt_lang) {
  auto get = [&](const std::string& name) -> const Tensor& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ContractError("bundle has no tensor '" + name + "'");
    return it->second;
  };
  auto p = Seq2SeqParams<float>::zeros(cfg);
  *p.src_embedding = get("emb.src." + src_lang);
  p.encoder->W = get("enc." + src_lang + ".W");
  p.encoder->b = get("enc." + src_lang + ".b");
  *p.tgt_embedding = get("emb.tgt." + tgt_lang);
  p.decoder->cell.W = get("dec." + tgt_lang + ".W");
  p.decoder->cell.b = get("dec." + tgt_lang + ".b");
  p.decoder->proj_W = get("dec." + tgt_lang + ".proj_W");
  p.decoder->proj_b = get("dec." + tgt_lang + ".proj_b");
  p.validate(cfg);
  return p;
}

void save_bundle(const Seq2SeqParams<float>& params, const Seq2SeqConfig& cfg,
                 const CharVocab& vocab, const std::string& dir, const std::string& src_lang,
                 const std::string& tgt_lang) {
  params.validate(cfg);
  json extra{{"default_model", {{"source", src_lang}, {"target", tgt_lang}}}};
  write_bundle(dir, cfg, vocab, model_tensors(params, src_lang, tgt_lang), extra);
}

ModelBundle load_bundle(const std::string& dir, const std::string& src_lang,
                        const std::string& tgt_lang) {
  auto contents = read_bundle(dir);
  contents.config.validate();
  ModelBundle out{contents.config, contents.vocab,
                  model_from_tensors(contents.tensors, contents.config, src_lang, tgt_lang),
                  src_lang, tgt_lang};
  return out;
}

ModelBundle load_bundle(const std::string& dir) {
  const auto contents = read_bundle(dir);
  if (!contents.extra.contains("default_model")) {
    throw ContractError("bundle " + dir + " does not name a default model");
  }
  const auto& dm = contents.extra["default_model"];
  const auto src = dm.at("source").get<std::string>();
  const auto tgt = dm.at("target").get<std::string>();
  contents.config.validate();
  return ModelBundle{contents.config, contents.vocab,
                     model_from_tensors(contents.tensors, contents.config, src, tgt), src, tgt};
}

}  // namespace chartrans
