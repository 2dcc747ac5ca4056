#include <doctest.h>

#include <filesystem>
#include <random>

#include "chartrans/bundle.hpp"
#include "helpers.hpp"

using namespace chartrans;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  CharVocab vocab;
  Seq2SeqConfig cfg;
  Seq2SeqParams<float> params;
};

Fixture make_fixture(std::uint64_t seed = 3) {
  const std::vector<std::string> corpus{"sveiki, pasaule", "hello world"};
  Fixture f{build_vocab(corpus, 90), {}, {}};
  f.cfg = Seq2SeqConfig::desk(f.vocab.size());
  f.cfg.hidden_dim = 12;
  f.cfg.embed_dim = 7;
  f.params = Seq2SeqParams<float>::random(f.cfg, seed);
  return f;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    files[e.path().filename().string()] = testutil::slurp(e.path());
  }
  return files;
}

}  // namespace

TEST_SUITE("bundle") {

TEST_CASE("crc32 of float payload") {
  // zlib.crc32(struct.pack('<3f', 1.0, -2.5, 0.0))
  const float v[] = {1.0f, -2.5f, 0.0f};
  CHECK(crc32_of(v) == 2195795328u);
}

TEST_CASE("save, load, save is byte-identical") {
  auto f = make_fixture();
  auto a = testutil::scratch("bundle_a"), b = testutil::scratch("bundle_b");
  save_bundle(f.params, f.cfg, f.vocab, a.string());
  auto loaded = load_bundle(a.string());
  CHECK(loaded.config == f.cfg);
  CHECK(loaded.vocab == f.vocab);
  CHECK(loaded.source_lang == "src");
  CHECK(loaded.target_lang == "tgt");
  save_bundle(loaded.params, loaded.config, loaded.vocab, b.string());
  CHECK(snapshot(a) == snapshot(b));
  CHECK(fs::exists(a / "meta.json"));
  CHECK(fs::exists(a / "vocab.txt"));
  CHECK(fs::file_size(a / "enc.src.W.f32") == f.params.encoder->W.size() * 4);
}

TEST_CASE("decoding is unchanged by a roundtrip") {
  auto f = make_fixture(8);
  auto dir = testutil::scratch("bundle_decode");
  save_bundle(f.params, f.cfg, f.vocab, dir.string());
  auto loaded = load_bundle(dir.string());
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    auto ids = testutil::random_ids(rng, 1 + rng() % 15, 4, static_cast<int>(f.vocab.size()) - 1);
    auto e1 = encode(f.params, f.cfg, std::span<const int>(ids));
    auto e2 = encode(loaded.params, loaded.config, std::span<const int>(ids));
    CHECK(e1.h == e2.h);
    CHECK(decode_greedy(f.params, f.cfg, e1) == decode_greedy(loaded.params, loaded.config, e2));
  }
}

TEST_CASE("corruption is detected before anything is returned") {
  auto f = make_fixture();
  auto dir = testutil::scratch("bundle_corrupt");
  save_bundle(f.params, f.cfg, f.vocab, dir.string());
  const auto payload = dir / "dec.tgt.proj_W.f32";
  auto bytes = testutil::slurp(payload);

  auto flipped = bytes;
  flipped[5] = static_cast<char>(flipped[5] ^ 0x10);
  testutil::spit(payload, flipped);
  CHECK_THROWS_AS(load_bundle(dir.string()), ChecksumError);
  CHECK_THROWS_AS(read_bundle(dir.string()), FormatError);  // ChecksumError is a FormatError

  testutil::spit(payload, bytes.substr(0, bytes.size() - 4));
  CHECK_THROWS_AS(load_bundle(dir.string()), FormatError);

  testutil::spit(payload, bytes);
  CHECK_NOTHROW(load_bundle(dir.string()));
  fs::remove(payload);
  CHECK_THROWS_AS(load_bundle(dir.string()), FormatError);
}

TEST_CASE("version and metadata errors") {
  auto f = make_fixture();
  auto dir = testutil::scratch("bundle_version");
  save_bundle(f.params, f.cfg, f.vocab, dir.string());
  auto meta = nlohmann::json::parse(testutil::slurp(dir / "meta.json"));
  meta["format_version"] = 2;
  testutil::spit(dir / "meta.json", meta.dump());
  CHECK_THROWS_AS(load_bundle(dir.string()), VersionError);
  testutil::spit(dir / "meta.json", "{not json");
  CHECK_THROWS_AS(load_bundle(dir.string()), FormatError);
  CHECK_THROWS_AS(load_bundle((dir / "nowhere").string()), FormatError);
}

TEST_CASE("config json roundtrip keeps the preset") {
  auto cfg = Seq2SeqConfig::paper(94);
  cfg.reverse_source = false;
  CHECK(config_from_json(config_to_json(cfg)) == cfg);
  CHECK(config_to_json(cfg)["preset"] == "paper");
}

TEST_CASE("named language groups") {
  auto f = make_fixture();
  auto dir = testutil::scratch("bundle_langs");
  save_bundle(f.params, f.cfg, f.vocab, dir.string(), "en", "lv");
  CHECK(fs::exists(dir / "emb.src.en.f32"));
  CHECK(fs::exists(dir / "dec.lv.proj_b.f32"));
  auto m = load_bundle(dir.string(), "en", "lv");
  CHECK(m.params.decoder->proj_W == f.params.decoder->proj_W);
  CHECK_THROWS_AS(load_bundle(dir.string(), "de", "lv"), ContractError);
}

}  // TEST_SUITE
