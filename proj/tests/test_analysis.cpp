#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "chartrans/analysis.hpp"
#include "helpers.hpp"

using namespace chartrans;

namespace {

DocVector unit(std::string id, std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  for (double& x : v) x /= std::sqrt(n);
  return {std::move(id), std::move(v)};
}

std::vector<RawSignal> nll_only(const std::vector<double>& nll) {
  std::vector<RawSignal> raw;
  for (std::size_t i = 0; i < nll.size(); ++i) raw.push_back({i, nll[i], std::nullopt, false});
  return raw;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("document vectors") {
  auto one = doc_vector({"a", {{3.0f, 4.0f}}});
  CHECK(one.id == "a");
  CHECK(one.values[0] == doctest::Approx(0.6));
  CHECK(one.values[1] == doctest::Approx(0.8));

  CHECK_THROWS_AS(doc_vector({"z", {{1.0f, -2.0f}, {-1.0f, 2.0f}}}), ContractError);
  CHECK_THROWS_AS(doc_vector({"e", {}}), InputError);
  CHECK_THROWS_AS(doc_vector({"m", {{1.0f}, {1.0f, 2.0f}}}), InputError);

  std::mt19937_64 rng(4);
  std::normal_distribution<float> g;
  for (int i = 0; i < 50; ++i) {
    DocTrace t{"d", {}};
    for (int w = 0; w < 7; ++w) t.vectors.push_back({g(rng), g(rng), g(rng), g(rng)});
    auto v = doc_vector(t);
    double norm = 0;
    for (double x : v.values) norm += x * x;
    CHECK(norm == doctest::Approx(1.0));
    std::reverse(t.vectors.begin(), t.vectors.end());
    auto r = doc_vector(t);
    for (std::size_t k = 0; k < 4; ++k) CHECK(r.values[k] == doctest::Approx(v.values[k]));
  }
}

TEST_CASE("cosine") {
  auto a = unit("a", {1, 0}), b = unit("b", {0, 1}), c = unit("c", {1, 1});
  CHECK(cosine(a, a) == doctest::Approx(1.0));
  CHECK(cosine(a, b) == doctest::Approx(0.0));
  CHECK(cosine(a, c) == doctest::Approx(std::sqrt(0.5)));

  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(5), y(5);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    double dot = 0, nx = 0, ny = 0;
    for (int k = 0; k < 5; ++k) {
      dot += x[k] * y[k];
      nx += x[k] * x[k];
      ny += y[k] * y[k];
    }
    CHECK(cosine(unit("x", x), unit("y", y)) == doctest::Approx(dot / std::sqrt(nx * ny)));
  }
}

TEST_CASE("k-means") {
  std::vector<DocVector> pts{unit("a", {1, 0.1}), unit("b", {1, -0.1}), unit("c", {0.1, 1}),
                             unit("d", {-0.1, 1})};
  auto same = kmeans(pts, 4, 1);
  CHECK(same.inertia == doctest::Approx(0.0).epsilon(1e-12));

  auto single = kmeans(pts, 1, 1);
  std::vector<double> mean(2, 0.0);
  for (const auto& p : pts) {
    mean[0] += p.values[0];
    mean[1] += p.values[1];
  }
  const double n = std::hypot(mean[0], mean[1]);
  CHECK(single.centroids[0][0] == doctest::Approx(mean[0] / n));
  CHECK(single.centroids[0][1] == doctest::Approx(mean[1] / n));

  auto two = kmeans(pts, 2, 3);
  CHECK(two.assignment[0] == two.assignment[1]);
  CHECK(two.assignment[2] == two.assignment[3]);
  CHECK(two.assignment[0] != two.assignment[2]);
  for (std::size_t i = 1; i < two.inertia_history.size(); ++i) {
    CHECK(two.inertia_history[i] <= two.inertia_history[i - 1] + 1e-12);
  }
  CHECK(kmeans(pts, 2, 3).assignment == two.assignment);
  CHECK(purity(two.assignment, {"x", "x", "y", "y"}) == doctest::Approx(1.0));

  CHECK_THROWS_AS(kmeans(pts, 5, 1), InputError);
  CHECK_THROWS_AS(kmeans(pts, 0, 1), InputError);
}

TEST_CASE("nearest neighbours match a sorted ranking") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  std::vector<DocVector> pool;
  for (int i = 0; i < 30; ++i) pool.push_back(unit("d" + std::to_string(100 + i), {g(rng), g(rng), g(rng)}));
  for (std::size_t q = 0; q < pool.size(); ++q) {
    auto got = nearest_neighbors(pool[q], pool, pool.size());
    REQUIRE(got.size() == pool.size());
    CHECK(got[0].index == q);
    std::vector<std::pair<double, std::string>> expect;
    for (const auto& p : pool) expect.push_back({-cosine(pool[q], p), p.id});
    std::sort(expect.begin(), expect.end());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].id == expect[i].second);
  }
  CHECK(nearest_neighbors(pool[0], pool, 3).size() == 3);
  CHECK_THROWS_AS(nearest_neighbors(pool[0], {}, 3), InputError);
}

TEST_CASE("next-window likelihood under a uniform predictor") {
  std::vector<std::string> words{"ab", "ba", "c", "abc", "b", "a", "cc", "ab", "c", "ba"};
  const std::vector<std::string> text{join_words(words)};
  const auto vocab = build_vocab(text, 90);
  auto cfg = Seq2SeqConfig::desk(vocab.size());
  cfg.hidden_dim = 8;
  cfg.embed_dim = 4;
  ModelBundle model{cfg, vocab, Seq2SeqParams<float>::zeros(cfg), "l", "l"};
  auto pts = next_window_nll(words, model);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].position == 5);
  CHECK(pts[0].nll == doctest::Approx(std::log(static_cast<double>(vocab.size()))));

  words.push_back("a");
  words.push_back("b");
  CHECK(next_window_nll(words, model).size() == 3);
  CHECK(next_window_nll(words, model, 2).size() == 9);
  words.resize(9);
  CHECK_THROWS_AS(next_window_nll(words, model), InputError);
}

TEST_CASE("boundary detection") {
  auto sig = fuse_signals(nll_only({1, 1, 9, 1}), {1, 0, 0, 1.5, 1});
  CHECK(sig[2].nll_z == doctest::Approx(std::sqrt(3.0)));
  CHECK(detect_boundaries(sig, 1.5, 1) == std::vector<std::size_t>{2});

  auto flat = fuse_signals(nll_only({2, 2, 2, 2, 2}), {});
  for (const auto& s : flat) CHECK(s.nll_z == 0.0);
  CHECK(detect_boundaries(flat, 0.5, 1).empty());

  auto raw = nll_only({2, 2, 2, 2, 2, 2, 2, 2});
  raw[3].speaker_change = true;
  auto spk = fuse_signals(raw, {1, 0.5, 10, 2, 1});
  CHECK(detect_boundaries(spk, 2, 1) == std::vector<std::size_t>{3});

  CHECK_THROWS_AS(detect_boundaries(fuse_signals(nll_only({1, 2}), {}), 1, 1), InputError);
  CHECK_THROWS_AS(fuse_signals(raw, {-1, 0, 0, 1, 1}), InputError);

  // Pauses only count where both neighbours are timed.
  StreamDocument doc{"d", "l", {{"a", 0.0, 1.0, "x"}, {"b", 3.0, 4.0, "y"}, {"c", std::nullopt, std::nullopt, std::nullopt}}};
  auto r = raw_signals(doc, {{0, 1.0}, {1, 1.0}, {2, 1.0}});
  CHECK(!r[0].pause);
  CHECK(*r[1].pause == doctest::Approx(2.0));
  CHECK(r[1].speaker_change);
  CHECK(!r[2].pause);
  CHECK(!r[2].speaker_change);
  CHECK_THROWS_AS(raw_signals(doc, {{3, 1.0}}), InputError);
}

TEST_CASE("picked boundaries respect the minimum gap") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> nll(40);
    for (auto& x : nll) x = g(rng);
    const std::size_t gap = 1 + rng() % 8;
    auto sig = fuse_signals(nll_only(nll), {});
    auto picks = detect_boundaries(sig, 0.5, gap);
    for (std::size_t k = 1; k < picks.size(); ++k) CHECK(picks[k] - picks[k - 1] >= gap);
    for (auto p : picks) CHECK(sig[p].combined > 0.5);
    // The strongest candidate is always kept.
    auto top = std::max_element(sig.begin(), sig.end(),
                                [](const auto& a, const auto& b) { return a.combined < b.combined; });
    if (top->combined > 0.5) CHECK(std::count(picks.begin(), picks.end(), top->position) == 1);
  }
}

TEST_CASE("scores") {
  CHECK(purity({0, 0, 1, 1}, {"a", "b", "b", "b"}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(purity({}, {}), InputError);

  auto s = score_boundaries({10, 21, 40}, {11, 20, 60}, 2);
  CHECK(s.true_positives == 2);
  CHECK(s.precision == doctest::Approx(2.0 / 3));
  CHECK(s.recall == doctest::Approx(2.0 / 3));
  CHECK(s.f1 == doctest::Approx(2.0 / 3));
  // Two predictions near one truth: only one matches.
  auto dup = score_boundaries({10, 11}, {10}, 2);
  CHECK(dup.true_positives == 1);
  CHECK(score_boundaries({}, {}, 2).f1 == 0.0);

  std::vector<NllPoint> nll;
  for (std::size_t p = 5; p < 30; ++p) nll.push_back({p, p == 15 ? 9.0 : 1.0});
  auto c = seam_contrast(nll, {15});
  CHECK(c.seam_points == 1);
  CHECK(c.seam_mean == 9.0);
  CHECK(c.within_mean == 1.0);
  // Positions 11..19 see the seam in context or target.
  CHECK(c.within_points == nll.size() - 9);
}

TEST_CASE("vector files") {
  std::vector<DocVector> v{unit("x", {1, 2, 2}), unit("y", {0.25, -1, 3})};
  std::stringstream io;
  write_vectors_tsv(v, io);
  auto back = read_vectors_tsv(io);
  REQUIRE(back.size() == 2);
  CHECK(back[1].id == "y");
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[1].values[i] == doctest::Approx(v[1].values[i]));
}

}  // TEST_SUITE
