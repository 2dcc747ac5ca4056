#include "chartrans/synthetic.hpp"

#include <algorithm>
#include <set>

#include "chartrans/error.hpp"
#include "chartrans/utf8.hpp"

namespace chartrans {

namespace {

const std::vector<std::string> kSourceConsonants = {"b", "d", "f", "g", "k", "l", "m",
                                                    "n", "p", "r", "s", "t", "v", "z"};
const std::vector<std::string> kSourceVowels = {"a", "e", "i", "o", "u"};
const std::vector<std::string> kTargetConsonants = {"b", "c", "č", "d", "g", "ģ", "j", "k",
                                                    "ķ", "l", "ļ", "m", "n", "ņ", "p", "r",
                                                    "s", "š", "t", "v", "z", "ž"};
const std::vector<std::string> kTargetVowels = {"a", "ā", "e", "ē", "i", "ī", "o", "u"};
const std::vector<std::string> kSuffixForms = {"a", "as", "ai", "u"};

std::string make_word(const std::vector<std::string>& consonants,
                      const std::vector<std::string>& vowels, std::size_t syllables,
                      std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick_c(0, consonants.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_v(0, vowels.size() - 1);
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) w += consonants[pick_c(rng)] + vowels[pick_v(rng)];
  return w;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

SyntheticLanguagePair::SyntheticLanguagePair(const SyntheticConfig& config) : config_(config) {
  if (config.lexicon_size < 10) throw InputError("synthetic: lexicon_size must be >= 10");
  if (config.n_topics < 1) throw InputError("synthetic: need at least one topic");
  if (config.min_sentence_words < 1 || config.max_sentence_words < config.min_sentence_words) {
    throw InputError("synthetic: bad sentence length range");
  }
  n_common_ = std::max<std::size_t>(2, config.lexicon_size / 5);
  if (config.lexicon_size - n_common_ < config.n_topics) {
    throw InputError("synthetic: lexicon too small for the number of topics");
  }

  std::mt19937_64 rng(config.seed);
  std::set<std::string> seen_source;
  std::set<std::string> seen_target_keys;
  for (std::size_t lemma = 0; lemma < config.lexicon_size; ++lemma) {
    const bool common = lemma < n_common_;
    std::string src;
    do {
      const std::size_t syl = common ? 1 + rng() % 2 : 2 + rng() % 2;
      src = make_word(kSourceConsonants, kSourceVowels, syl, rng);
    } while (!seen_source.insert(src).second);

    std::string tgt;
    do {
      std::size_t syl = common ? 1 + rng() % 2 : 2 + rng() % 2;
      if (config.inflection) syl = std::max<std::size_t>(syl, 3);
      tgt = make_word(kTargetConsonants, kTargetVowels, syl, rng);
    } while (!seen_target_keys.insert(utf8::prefix(tgt, 6)).second ||
             (config.inflection && utf8::length(tgt) < 6));

    source_words_.push_back(std::move(src));
    target_stems_.push_back(std::move(tgt));
  }

  if (config.source_seed != 0) {
    std::mt19937_64 src_rng(config.source_seed);
    std::set<std::string> seen;
    for (std::size_t lemma = 0; lemma < config.lexicon_size; ++lemma) {
      const bool common = lemma < n_common_;
      std::string src;
      do {
        const std::size_t syl = common ? 1 + src_rng() % 2 : 2 + src_rng() % 2;
        src = make_word(kSourceConsonants, kSourceVowels, syl, src_rng);
      } while (!seen.insert(src).second);
      source_words_[lemma] = std::move(src);
    }
  }

  topic_lemmas_.resize(config.n_topics);
  for (std::size_t lemma = 0; lemma < config.lexicon_size; ++lemma) {
    if (lemma < n_common_) {
      common_lemmas_.push_back(lemma);
    } else {
      topic_lemmas_[(lemma - n_common_) % config.n_topics].push_back(lemma);
    }
  }
}

std::string SyntheticLanguagePair::target_word(std::size_t lemma, std::size_t position) const {
  const std::string& stem = target_stems_.at(lemma);
  if (!config_.inflection) return stem;
  return stem + kSuffixForms[position % kSuffixForms.size()];
}

std::size_t SyntheticLanguagePair::topic_of(std::size_t lemma) const {
  if (lemma < n_common_) return config_.n_topics;
  return (lemma - n_common_) % config_.n_topics;
}

std::vector<std::size_t> SyntheticLanguagePair::sample_words(std::size_t topic, std::size_t n,
                                                             std::mt19937_64& rng) const {
  const auto& own = topic_lemmas_.at(topic);
  std::vector<double> zipf(own.size());
  for (std::size_t r = 0; r < own.size(); ++r) zipf[r] = 1.0 / static_cast<double>(r + 1);
  std::discrete_distribution<std::size_t> pick_topic(zipf.begin(), zipf.end());
  std::uniform_int_distribution<std::size_t> pick_common(0, common_lemmas_.size() - 1);
  std::bernoulli_distribution use_common(config_.common_fraction);
  std::vector<std::size_t> lemmas;
  lemmas.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    lemmas.push_back(use_common(rng) ? common_lemmas_[pick_common(rng)] : own[pick_topic(rng)]);
  }
  return lemmas;
}

std::vector<std::size_t> SyntheticLanguagePair::sample_sentence(std::size_t topic,
                                                                std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> len(config_.min_sentence_words,
                                                 config_.max_sentence_words);
  return sample_words(topic, len(rng), rng);
}

std::vector<std::string> SyntheticLanguagePair::source_words(
    const std::vector<std::size_t>& lemmas) const {
  std::vector<std::string> out;
  for (std::size_t l : lemmas) out.push_back(source_words_.at(l));
  return out;
}

std::vector<std::string> SyntheticLanguagePair::target_words(
    const std::vector<std::size_t>& lemmas) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < lemmas.size(); ++i) out.push_back(target_word(lemmas[i], i));
  return out;
}

std::string SyntheticLanguagePair::render_source(const std::vector<std::size_t>& lemmas) const {
  return join_words(source_words(lemmas));
}

std::string SyntheticLanguagePair::render_target(const std::vector<std::size_t>& lemmas) const {
  return join_words(target_words(lemmas));
}

ParallelCorpus SyntheticLanguagePair::parallel(std::size_t n_sentences,
                                               std::mt19937_64& rng) const {
  ParallelCorpus corpus;
  corpus.source_lang = config_.source_lang;
  corpus.target_lang = config_.target_lang;
  std::uniform_int_distribution<std::size_t> pick_topic(0, config_.n_topics - 1);
  for (std::size_t i = 0; i < n_sentences; ++i) {
    const auto lemmas = sample_sentence(pick_topic(rng), rng);
    corpus.pairs.emplace_back(render_source(lemmas), render_target(lemmas));
  }
  return corpus;
}

ParallelCorpus SyntheticLanguagePair::monolingual(std::size_t n_sentences, bool target_side,
                                                  std::mt19937_64& rng) const {
  ParallelCorpus corpus;
  const auto& lang = target_side ? config_.target_lang : config_.source_lang;
  corpus.source_lang = lang;
  corpus.target_lang = lang;
  std::uniform_int_distribution<std::size_t> pick_topic(0, config_.n_topics - 1);
  for (std::size_t i = 0; i < n_sentences; ++i) {
    const auto lemmas = sample_sentence(pick_topic(rng), rng);
    std::string s = target_side ? render_target(lemmas) : render_source(lemmas);
    corpus.pairs.emplace_back(s, s);
  }
  return corpus;
}

StreamDocument SyntheticLanguagePair::document(std::size_t topic, std::size_t n_words,
                                               bool target_side, const std::string& id,
                                               std::mt19937_64& rng) const {
  StreamDocument doc;
  doc.id = id;
  doc.lang = target_side ? config_.target_lang : config_.source_lang;
  while (doc.tokens.size() < n_words) {
    const auto lemmas = sample_sentence(topic, rng);
    const auto words = target_side ? target_words(lemmas) : source_words(lemmas);
    for (const auto& w : words) {
      if (doc.tokens.size() == n_words) break;
      doc.tokens.push_back({w, std::nullopt, std::nullopt, std::nullopt});
    }
  }
  return doc;
}

StoryStream SyntheticLanguagePair::story_stream(std::size_t n_stories, std::size_t min_words,
                                                std::size_t max_words, bool target_side,
                                                const std::string& id,
                                                std::mt19937_64& rng) const {
  if (n_stories < 1 || min_words < 1 || max_words < min_words) {
    throw InputError("story_stream: bad story count or length range");
  }
  StoryStream out;
  out.doc.id = id;
  out.doc.lang = target_side ? config_.target_lang : config_.source_lang;
  std::uniform_int_distribution<std::size_t> story_len(min_words, max_words);
  std::uniform_int_distribution<std::size_t> pick_topic(0, config_.n_topics - 1);
  const std::vector<std::string> anchors = {"anchor1", "anchor2", "anchor3"};
  std::string anchor = anchors[rng() % anchors.size()];
  double clock = 0.0;
  std::size_t last_topic = config_.n_topics;
  for (std::size_t s = 0; s < n_stories; ++s) {
    std::size_t topic = pick_topic(rng);
    // consecutive stories cover different topics
    while (config_.n_topics > 1 && topic == last_topic) topic = pick_topic(rng);
    last_topic = topic;
    out.topics.push_back(topic);
    if (s > 0) {
      out.boundaries.push_back(out.doc.tokens.size());
      if (std::bernoulli_distribution(0.5)(rng)) anchor = anchors[rng() % anchors.size()];
    }
    const std::size_t n_words = story_len(rng);
    std::size_t written = 0;
    while (written < n_words) {
      const auto lemmas = sample_sentence(topic, rng);
      const auto words = target_side ? target_words(lemmas) : source_words(lemmas);
      // occasional field reporter for one sentence
      const bool guest = written > 0 && std::bernoulli_distribution(0.1)(rng);
      const std::string speaker = guest ? "reporter" + std::to_string(topic) : anchor;
      for (std::size_t w = 0; w < words.size() && written < n_words; ++w, ++written) {
        StreamToken tok;
        tok.word = words[w];
        tok.speaker = speaker;
        tok.start = clock;
        tok.end = clock + 0.06 * static_cast<double>(utf8::length(words[w])) +
                  uniform(rng, 0.0, 0.05);
        clock = *tok.end;
        const bool story_end = written + 1 == n_words;
        const bool sentence_end = w + 1 == words.size();
        if (story_end) {
          clock += uniform(rng, 0.5, 1.2);
        } else if (sentence_end) {
          clock += uniform(rng, 0.2, 0.6);
        } else {
          clock += uniform(rng, 0.02, 0.15);
        }
        out.doc.tokens.push_back(std::move(tok));
      }
    }
  }
  return out;
}

SyntheticData gen_synthetic_pair(std::uint64_t seed, std::size_t lexicon_size,
                                 std::size_t n_sentences, bool inflection, std::size_t n_topics) {
  if (n_sentences < 1) throw InputError("gen_synthetic_pair: n_sentences must be >= 1");
  SyntheticConfig cfg;
  cfg.seed = seed;
  cfg.lexicon_size = lexicon_size;
  cfg.inflection = inflection;
  cfg.n_topics = n_topics;
  SyntheticLanguagePair pair(cfg);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  SyntheticData data;
  data.corpus = pair.parallel(n_sentences, rng);
  for (std::size_t topic = 0; topic < n_topics; ++topic) {
    for (std::size_t d = 0; d < 10; ++d) {
      const std::string id = "t" + std::to_string(topic) + "-d" + std::to_string(d);
      data.documents.push_back(pair.document(topic, 40, false, id, rng));
      data.document_topics.push_back(topic);
    }
  }
  return data;
}

}  // namespace chartrans
