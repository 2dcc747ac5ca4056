#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "chartrans/analysis.hpp"
#include "chartrans/cli.hpp"
#include "chartrans/multitask.hpp"
#include "helpers.hpp"

using namespace chartrans;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> small_synth(const fs::path& dir) {
  return {"synth",          "--out",        dir.string(), "--sentences", "30",
          "--heldout",      "5",            "--mono",     "30",          "--docs-per-topic",
          "2",              "--doc-words",  "20",         "--streams",   "2",
          "--stories",      "3",            "--story-min", "8",          "--story-max",
          "12",             "--predictor-streams", "2"};
}

// Tiny model trained for a handful of updates; shared by the later cases.
const fs::path& fixture() {
  static const fs::path dir = [] {
    auto d = testutil::scratch("cli_fixture");
    REQUIRE(call(small_synth(d / "data")).code == 0);
    auto r = call({"train", "--tasks", (d / "data" / "manifest.tsv").string(), "--out",
                   (d / "model").string(), "--hidden", "8", "--embed", "8", "--batch", "4",
                   "--updates", "6", "--turn", "2"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth is deterministic") {
  auto a = testutil::scratch("cli_synth_a"), b = testutil::scratch("cli_synth_b");
  REQUIRE(call(small_synth(a)).code == 0);
  REQUIRE(call(small_synth(b)).code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    CHECK(testutil::slurp(e.path()) == testutil::slurp(b / e.path().filename()));
  }
  CHECK(files >= 10);
  CHECK(fs::exists(a / "streams.truth.tsv"));
  CHECK(fs::exists(a / "docs.labels.tsv"));
}

TEST_CASE("train writes a loadable bundle") {
  const auto& d = fixture();
  auto reg = load_registry((d / "model").string());
  CHECK(reg.pivot == "pv");
  CHECK(reg.tasks.size() == 3);
  auto model = load_bundle((d / "model").string());
  CHECK(model.config.hidden_dim == 8);
  CHECK(model.source_lang == "l1");
}

TEST_CASE("paper preset is recorded") {
  auto d = testutil::scratch("cli_paper");
  testutil::spit(d / "par.tsv", "a b\tc d\n");
  testutil::spit(d / "m.tsv", "translational\tl1\tpv\tpar.tsv\n");
  auto r = call({"train", "--tasks", (d / "m.tsv").string(), "--out", (d / "model").string(),
                 "--preset", "paper", "--updates", "1", "--turn", "1", "--hidden", "12"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.err.find("hidden") != std::string::npos);
  auto meta = json::parse(testutil::slurp(d / "model" / "meta.json"));
  CHECK(meta["config"]["preset"] == "paper");
  CHECK(meta["config"]["hidden_dim"] == 400);
  CHECK(meta["config"]["batch_size"] == 16);
}

TEST_CASE("translate writes the merged text and the tables") {
  const auto& d = fixture();
  auto out = d / "tr" / "heldout";
  fs::create_directories(out.parent_path());
  testutil::spit(d / "in.txt", "a b c d e f g h\nshort line\n");
  auto r = call({"translate", "--bundle", (d / "model").string(), "--in", (d / "in.txt").string(),
                 "--out-prefix", out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(json::parse(r.out).is_object());
  CHECK(fs::exists(out.string() + ".table.tsv"));
  CHECK(fs::exists(out.string() + ".trace.tsv"));
  std::istringstream merged(testutil::slurp(out.string() + ".merged.txt"));
  std::string first;
  std::getline(merged, first);
  CHECK(split_words(first).size() <= 8);
}

TEST_CASE("embed, cluster and segment run end to end") {
  const auto& d = fixture();
  const auto data = d / "data";
  for (const std::string lang : {"l1", "pv"}) {
    auto r = call({"embed", "--bundle", (d / "model").string(), "--in",
                   (data / ("docs." + lang + ".tsv")).string(), "--out",
                   (d / ("vec." + lang + ".tsv")).string(), "--lang", lang, "--id-prefix",
                   lang + ":"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  auto c = call({"cluster", "--in", (d / "vec.l1.tsv").string(), "--in",
                 (d / "vec.pv.tsv").string(), "--out", (d / "clusters.tsv").string(), "--k", "2",
                 "--labels", (data / "docs.labels.tsv").string()});
  REQUIRE_MESSAGE(c.code == 0, c.err);
  auto summary = json::parse(c.out);
  CHECK(summary.contains("purity"));
  std::istringstream lines(testutil::slurp(d / "clusters.tsv"));
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line);) n += !line.empty();
  CHECK(n == 16);

  auto pred = d / "pred";
  auto t = call({"train", "--tasks", (data / "predictor.manifest.tsv").string(), "--out",
                 pred.string(), "--hidden", "8", "--embed", "8", "--batch", "4", "--updates", "2",
                 "--turn", "1"});
  REQUIRE_MESSAGE(t.code == 0, t.err);
  auto s = call({"segment", "--bundle", pred.string(), "--in", (data / "streams.tsv").string(),
                 "--out", (d / "seg.tsv").string(), "--truth",
                 (data / "streams.truth.tsv").string()});
  REQUIRE_MESSAGE(s.code == 0, s.err);
  CHECK(json::parse(s.out).contains("f1"));
}

TEST_CASE("exit codes") {
  CHECK(call({}).code == cli::kExitUsage);
  CHECK(call({"synth", "--bogus", "1"}).code == cli::kExitUsage);
  CHECK(call({"synth"}).code == cli::kExitUsage);
  CHECK(call({"train", "--tasks", "/nonexistent/m.tsv", "--out", "x"}).code == cli::kExitData);
  CHECK(call({"synth", "--help"}).code == cli::kExitOk);

  auto d = testutil::scratch("cli_version");
  fs::copy(fixture() / "model", d / "model");
  auto meta = json::parse(testutil::slurp(d / "model" / "meta.json"));
  meta["format_version"] = 7;
  testutil::spit(d / "model" / "meta.json", meta.dump());
  testutil::spit(d / "in.txt", "a b c d e f\n");
  CHECK(call({"translate", "--bundle", (d / "model").string(), "--in", (d / "in.txt").string()})
            .code == cli::kExitData);
}

TEST_CASE("config files and precedence") {
  auto d = testutil::scratch("cli_config");
  testutil::spit(d / "c.conf", "# synthetic\nsentences = 7\nheldout = \"3\"\ninflection = true\n"
                               "mono=4\nverbose = false\n");
  auto args = cli::config_arguments((d / "c.conf").string());
  CHECK(args == std::vector<std::string>{"--sentences", "7", "--heldout", "3", "--inflection",
                                         "--mono", "4"});
  testutil::spit(d / "c.conf", "sentences = 7\nheldout = 3\nmono = 4\n");

  auto base = small_synth(d / "a");
  // Drop the flags the config file sets.
  for (const std::string flag : {"--sentences", "--heldout", "--mono"}) {
    auto it = std::find(base.begin(), base.end(), flag);
    base.erase(it, it + 2);
  }
  base.push_back("--config");
  base.push_back((d / "c.conf").string());
  REQUIRE(call(base).code == 0);
  auto lines = [](const fs::path& p) {
    std::istringstream in(testutil::slurp(p));
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) ++n;
    return n;
  };
  CHECK(lines(d / "a" / "parallel.tsv") == 7);

  auto override = base;
  override[2] = (d / "b").string();
  override.push_back("--sentences");
  override.push_back("9");
  REQUIRE(call(override).code == 0);
  CHECK(lines(d / "b" / "parallel.tsv") == 9);
  CHECK(lines(d / "b" / "heldout.tsv") == 3);

  CHECK_THROWS_AS(cli::config_arguments((d / "missing.conf").string()), Error);
}

}  // TEST_SUITE
