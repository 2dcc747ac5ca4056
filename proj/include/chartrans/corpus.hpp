#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chartrans {

struct ParallelCorpus {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string source_lang;
  std::string target_lang;
  std::optional<std::size_t> truncate_chars;
  std::size_t skipped_lines = 0;  // lines with a missing side, reported by load_parallel

  std::size_t size() const { return pairs.size(); }
};

struct StreamToken {
  std::string word;
  std::optional<double> start;  // seconds
  std::optional<double> end;
  std::optional<std::string> speaker;

  bool operator==(const StreamToken&) const = default;
};

struct StreamDocument {
  std::string id;
  std::string lang;
  std::vector<StreamToken> tokens;

  std::vector<std::string> words() const;
  // Throws InputError on empty words or decreasing times.
  void validate() const;

  bool operator==(const StreamDocument&) const = default;
};

// Tab-separated source/target per line. Extra tabs belong to the target.
ParallelCorpus load_parallel(const std::string& path,
                             std::optional<std::size_t> truncate_chars = std::nullopt);
// One sentence per line (text before the first tab); pairs are (s, s).
ParallelCorpus load_monolingual(const std::string& path,
                                std::optional<std::size_t> truncate_chars = std::nullopt);
void save_parallel(const ParallelCorpus& corpus, const std::string& path);

// `word<TAB>start<TAB>end<TAB>speaker` per line, blank line between documents.
std::vector<StreamDocument> load_stream_documents(const std::string& path);
void save_stream_documents(std::span<const StreamDocument> docs, const std::string& path);

std::vector<std::string> split_words(std::string_view text);
std::string join_words(std::span<const std::string> words);

inline constexpr std::size_t kMaxWindowChars = 100;

struct WordWindow {
  std::size_t start = 0;
  std::string text;

  bool operator==(const WordWindow&) const = default;
};

// Windows at 0, stride, 2*stride, ... up to the last full-size window. A text
// shorter than `window` yields one window holding all of it. Window text is
// cut to `max_chars` scalar values.
std::vector<WordWindow> word_windows(std::span<const std::string> words, std::size_t window,
                                     std::size_t stride, std::size_t max_chars = kMaxWindowChars);

}  // namespace chartrans
