#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "chartrans/corpus.hpp"

namespace chartrans {

struct SyntheticConfig {
  std::uint64_t seed = 1;
  std::size_t lexicon_size = 60;
  std::size_t n_topics = 4;
  bool inflection = false;
  // Share of each sentence drawn from the topic-independent function words.
  double common_fraction = 0.3;
  std::size_t min_sentence_words = 4;
  std::size_t max_sentence_words = 10;
  // Non-zero: the source lexicon is redrawn from this seed while target words
  // and topics stay those of `seed`. Pairs that differ only here share a pivot.
  std::uint64_t source_seed = 0;
  std::string source_lang = "src";
  std::string target_lang = "tgt";
};

// A story stream plus its ground truth.
struct StoryStream {
  StreamDocument doc;
  std::vector<std::size_t> boundaries;  // index of the first word of stories 2..n
  std::vector<std::size_t> topics;      // one per story
};

// Deterministic toy language pair. Source and target lexicons are in
// bijection (lemma i <-> lemma i). With inflection on, every target lemma is
// a stem of at least 6 characters followed by one of 4 suffixes picked by the
// word's position in its sentence.
class SyntheticLanguagePair {
 public:
  static constexpr std::size_t kSuffixes = 4;

  explicit SyntheticLanguagePair(const SyntheticConfig& config);

  const SyntheticConfig& config() const { return config_; }
  std::size_t lexicon_size() const { return source_words_.size(); }
  std::size_t common_words() const { return n_common_; }
  const std::string& source_word(std::size_t lemma) const { return source_words_.at(lemma); }
  const std::string& target_stem(std::size_t lemma) const { return target_stems_.at(lemma); }
  std::string target_word(std::size_t lemma, std::size_t position) const;
  // Topic owning a lemma, or n_topics for function words.
  std::size_t topic_of(std::size_t lemma) const;

  std::vector<std::size_t> sample_sentence(std::size_t topic, std::mt19937_64& rng) const;
  std::vector<std::size_t> sample_words(std::size_t topic, std::size_t n,
                                        std::mt19937_64& rng) const;

  std::vector<std::string> source_words(const std::vector<std::size_t>& lemmas) const;
  std::vector<std::string> target_words(const std::vector<std::size_t>& lemmas) const;
  std::string render_source(const std::vector<std::size_t>& lemmas) const;
  std::string render_target(const std::vector<std::size_t>& lemmas) const;

  // Parallel sentences with topics drawn uniformly.
  ParallelCorpus parallel(std::size_t n_sentences, std::mt19937_64& rng) const;
  // One side only, for autoencoder tasks: pairs are (s, s).
  ParallelCorpus monolingual(std::size_t n_sentences, bool target_side,
                             std::mt19937_64& rng) const;

  // Single-topic document of roughly `n_words` words, rendered on one side.
  StreamDocument document(std::size_t topic, std::size_t n_words, bool target_side,
                          const std::string& id, std::mt19937_64& rng) const;

  // Concatenated single-topic stories with time codes and speaker labels.
  StoryStream story_stream(std::size_t n_stories, std::size_t min_words, std::size_t max_words,
                           bool target_side, const std::string& id, std::mt19937_64& rng) const;

 private:
  SyntheticConfig config_;
  std::size_t n_common_ = 0;
  std::vector<std::string> source_words_;
  std::vector<std::string> target_stems_;
  std::vector<std::vector<std::size_t>> topic_lemmas_;
  std::vector<std::size_t> common_lemmas_;
};

struct SyntheticData {
  ParallelCorpus corpus;
  std::vector<StreamDocument> documents;  // source-side single-topic documents
  std::vector<std::size_t> document_topics;
};

// Parallel corpus of `n_sentences` plus a pool of 10 documents per topic.
SyntheticData gen_synthetic_pair(std::uint64_t seed, std::size_t lexicon_size,
                                 std::size_t n_sentences, bool inflection,
                                 std::size_t n_topics = 4);

}  // namespace chartrans
