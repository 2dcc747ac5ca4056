#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "chartrans/corpus.hpp"
#include "chartrans/synthetic.hpp"
#include "chartrans/utf8.hpp"
#include "chartrans/vocab.hpp"
#include "helpers.hpp"

using namespace chartrans;

TEST_SUITE("text") {

TEST_CASE("utf8 decode, encode, prefix") {
  const std::string lv = "pārvadātās";
  CHECK(utf8::length(lv) == 10);
  CHECK(utf8::encode(utf8::decode(lv)) == lv);
  CHECK(utf8::prefix(lv, 6) == "pārvad");
  CHECK(utf8::prefix("of", 6) == "of");
  CHECK(utf8::encode(U'\U0001F600') == "\xF0\x9F\x98\x80");
  CHECK_THROWS_AS(utf8::decode("\xC3"), FormatError);          // truncated
  CHECK_THROWS_AS(utf8::decode("\xC0\xAF"), FormatError);      // overlong
  CHECK_THROWS_AS(utf8::decode("\xED\xA0\x80"), FormatError);  // surrogate
  CHECK_THROWS_AS(utf8::decode("\xFF"), FormatError);
}

TEST_CASE("build_vocab ordering and cap") {
  const std::vector<std::string> aab{"aab"};
  auto v = build_vocab(aab, 2);
  CHECK(v.content() == std::vector<char32_t>{U'a', U'b'});
  CHECK(v.size() == 6);

  const std::vector<std::string> xy{"xyxy z"};
  CHECK(build_vocab(xy, 2).content() == std::vector<char32_t>{U'x', U'y'});

  // Brute-force ranking over a random multilingual corpus.
  std::mt19937_64 rng(9);
  const std::u32string alphabet = U"abcdefghijklmnopqrstuvwxyzāčēģīķļņšūž ,.?!0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ-'\"()[]:;ĀČĒĢĪĶĻŅŠŪŽ";
  std::vector<std::string> corpus;
  for (int i = 0; i < 50; ++i) {
    std::u32string s;
    for (int j = 0; j < 80; ++j) s += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng) % (5 + i)];
    corpus.push_back(utf8::encode(s));
  }
  auto big = build_vocab(corpus, 90);
  CHECK(big.size() <= 94);
  std::map<char32_t, std::size_t> counts;
  for (const auto& s : corpus) {
    for (char32_t c : utf8::decode(s)) ++counts[c];
  }
  for (std::size_t i = 1; i < big.content().size(); ++i) {
    const char32_t a = big.content()[i - 1], b = big.content()[i];
    CHECK((counts[a] > counts[b] || (counts[a] == counts[b] && a < b)));
  }
  CHECK_THROWS_AS(build_vocab(std::vector<std::string>{}, 5), InputError);
}

TEST_CASE("encode and decode characters") {
  const std::vector<std::string> corpus{"abc"};
  auto v = build_vocab(corpus, 10);
  CHECK(encode_chars(v, "", true) == std::vector<int>{kEos});
  CHECK(encode_chars(v, "ab", false) == std::vector<int>{v.id(U'a'), v.id(U'b')});
  auto with_emoji = encode_chars(v, "a\U0001F600b", false);
  CHECK(std::count(with_emoji.begin(), with_emoji.end(), kUnk) == 1);

  const int eos_only[] = {kEos};
  CHECK(decode_chars(v, eos_only).empty());
  const auto ids = encode_chars(v, "cab", true);
  CHECK(decode_chars(v, ids) == "cab");
  const int cut[] = {v.id(U'a'), kUnk, v.id(U'b'), kEos, v.id(U'c')};
  CHECK(decode_chars(v, cut) == "a\xEF\xBF\xBD" "b");
  const int bad[] = {99};
  CHECK_THROWS_AS(decode_chars(v, bad), IndexError);
}

TEST_CASE("vocab file roundtrip") {
  auto dir = testutil::scratch("vocab");
  const std::vector<std::string> corpus{"Rīga un Eiropa, 2024!"};
  auto v = build_vocab(corpus, 90);
  save_vocab(v, (dir / "vocab.txt").string());
  CHECK(load_vocab((dir / "vocab.txt").string()) == v);
  testutil::spit(dir / "bad.txt", "a\nb\n");
  CHECK_THROWS_AS(load_vocab((dir / "bad.txt").string()), FormatError);
}

TEST_CASE("load_parallel") {
  auto dir = testutil::scratch("parallel");
  std::string long_src(150, 'x');
  testutil::spit(dir / "c.tsv", "hello\tsveiki\nno tab here\nsrc\ta\tb\tc\n" + long_src + "\t" +
                                    std::string(120, 'y') + "\r\n\tonly target\n");
  auto c = load_parallel((dir / "c.tsv").string());
  REQUIRE(c.pairs.size() == 3);
  CHECK(c.pairs[0] == std::pair<std::string, std::string>{"hello", "sveiki"});
  CHECK(c.pairs[1] == std::pair<std::string, std::string>{"src", "a\tb\tc"});
  CHECK(c.skipped_lines == 2);
  auto t = load_parallel((dir / "c.tsv").string(), 100);
  for (const auto& [s, g] : t.pairs) {
    CHECK(utf8::length(s) <= 100);
    CHECK(utf8::length(g) <= 100);
  }
  CHECK(t.pairs[2].second == std::string(100, 'y'));
  CHECK_THROWS_AS(load_parallel((dir / "missing.tsv").string()), FormatError);

  save_parallel(c, (dir / "out.tsv").string());
  CHECK(load_parallel((dir / "out.tsv").string()).pairs == c.pairs);
}

TEST_CASE("stream documents roundtrip") {
  auto dir = testutil::scratch("streamdoc");
  testutil::spit(dir / "d.tsv",
                 "labdien\t0\t0.4\tanchor\nRīga\t0.5\t0.9\tanchor\n\n\nplain\t\t\t\nwords\n");
  auto docs = load_stream_documents((dir / "d.tsv").string());
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].id == "doc0");
  CHECK(docs[1].id == "doc1");
  CHECK(docs[0].tokens[1].start == 0.5);
  CHECK(docs[0].tokens[1].speaker == "anchor");
  CHECK_FALSE(docs[1].tokens[0].start.has_value());
  CHECK(docs[1].words() == std::vector<std::string>{"plain", "words"});

  save_stream_documents(docs, (dir / "out.tsv").string());
  auto again = load_stream_documents((dir / "out.tsv").string());
  CHECK(again == docs);

  testutil::spit(dir / "bad.tsv", "a\t1\t2\tx\textra\n");
  CHECK_THROWS_AS(load_stream_documents((dir / "bad.tsv").string()), FormatError);
  testutil::spit(dir / "back.tsv", "a\t2\t3\nb\t1\t1.5\n");
  CHECK_THROWS_AS(load_stream_documents((dir / "back.tsv").string()), InputError);
  testutil::spit(dir / "time.tsv", "a\tsoon\t3\n");
  CHECK_THROWS_AS(load_stream_documents((dir / "time.tsv").string()), FormatError);
}

TEST_CASE("word windows") {
  const std::vector<std::string> seven{"w0", "w1", "w2", "w3", "w4", "w5", "w6"};
  auto w = word_windows(seven, 6, 1);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == WordWindow{0, "w0 w1 w2 w3 w4 w5"});
  CHECK(w[1] == WordWindow{1, "w1 w2 w3 w4 w5 w6"});

  const std::vector<std::string> three{"a", "b", "c"};
  auto s = word_windows(three, 6, 1);
  REQUIRE(s.size() == 1);
  CHECK(s[0].text == "a b c");

  std::string long_word;
  for (int i = 0; i < 30; ++i) long_word += "ā";
  const std::vector<std::string> longw(6, long_word);
  auto cut = word_windows(longw, 6, 1);
  CHECK(utf8::length(cut[0].text) == 100);

  std::vector<std::string> thousand(1000, "w");
  CHECK(word_windows(thousand, 6, 1).size() == 995);
  CHECK(word_windows(thousand, 6, 2).size() == 498);
  CHECK(word_windows(std::vector<std::string>{}, 6, 1).empty());
  CHECK_THROWS_AS(word_windows(seven, 0, 1), InputError);
  CHECK(split_words("  a\tb \n c ") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("synthetic pair determinism and structure") {
  auto a = gen_synthetic_pair(4, 60, 50, false);
  auto b = gen_synthetic_pair(4, 60, 50, false);
  CHECK(a.corpus.pairs == b.corpus.pairs);
  CHECK(a.documents == b.documents);
  CHECK(a.documents.size() == 40);
  CHECK(gen_synthetic_pair(5, 60, 50, false).corpus.pairs != a.corpus.pairs);

  SyntheticConfig cfg;
  cfg.seed = 12;
  SyntheticLanguagePair plain(cfg);
  std::map<std::string, std::string> bijection;
  for (std::size_t i = 0; i < plain.lexicon_size(); ++i) {
    bijection[plain.source_word(i)] = plain.target_word(i, 0);
  }
  CHECK(bijection.size() == plain.lexicon_size());
  std::mt19937_64 rng(1);
  for (const auto& [src, tgt] : plain.parallel(30, rng).pairs) {
    auto sw = split_words(src), tw = split_words(tgt);
    REQUIRE(sw.size() == tw.size());
    for (std::size_t i = 0; i < sw.size(); ++i) CHECK(bijection.at(sw[i]) == tw[i]);
  }

  // A second source language over the same pivot.
  cfg.source_seed = 99;
  SyntheticLanguagePair other(cfg);
  std::size_t same_source = 0;
  for (std::size_t i = 0; i < plain.lexicon_size(); ++i) {
    CHECK(other.target_word(i, 0) == plain.target_word(i, 0));
    CHECK(other.topic_of(i) == plain.topic_of(i));
    same_source += other.source_word(i) == plain.source_word(i);
  }
  CHECK(same_source < plain.lexicon_size() / 4);
  std::mt19937_64 r1(3), r2(3);
  CHECK(plain.parallel(10, r1).pairs[0].second == other.parallel(10, r2).pairs[0].second);
}

TEST_CASE("inflected variants share their first six characters") {
  SyntheticConfig cfg;
  cfg.seed = 21;
  cfg.inflection = true;
  SyntheticLanguagePair gen(cfg);
  std::set<std::string> stems;
  for (std::size_t lemma = 0; lemma < gen.lexicon_size(); ++lemma) {
    const auto key = utf8::prefix(gen.target_word(lemma, 0), 6);
    for (std::size_t pos = 1; pos < SyntheticLanguagePair::kSuffixes; ++pos) {
      CHECK(utf8::prefix(gen.target_word(lemma, pos), 6) == key);
      CHECK(gen.target_word(lemma, pos) != gen.target_word(lemma, 0));
    }
    stems.insert(key);
  }
  CHECK(stems.size() == gen.lexicon_size());
}

TEST_CASE("story streams carry times, speakers and boundaries") {
  SyntheticConfig cfg;
  cfg.seed = 2;
  SyntheticLanguagePair gen(cfg);
  std::mt19937_64 rng(8);
  auto s = gen.story_stream(5, 40, 80, false, "s", rng);
  CHECK(s.boundaries.size() == 4);
  CHECK(s.topics.size() == 5);
  for (std::size_t i = 1; i < s.topics.size(); ++i) CHECK(s.topics[i] != s.topics[i - 1]);
  std::size_t prev = 0;
  for (auto b : s.boundaries) {
    CHECK(b - prev >= 40);
    CHECK(b - prev <= 80 + cfg.max_sentence_words);
    prev = b;
  }
  s.doc.validate();
  for (const auto& t : s.doc.tokens) {
    CHECK(t.start.has_value());
    CHECK(t.speaker.has_value());
  }
}

}  // TEST_SUITE
