#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "chartrans/bundle.hpp"
#include "chartrans/corpus.hpp"

namespace chartrans {

inline constexpr std::size_t kPrefixChars = 6;

struct StreamOptions {
  std::size_t src_window = 6;
  std::size_t tgt_window = 5;
  std::size_t stride = 1;
};

// One translated window. Word j sits in column start + j.
struct TableRow {
  std::size_t start = 0;
  std::vector<std::string> words;
  std::vector<float> trace;  // encoder final hidden state for the window

  bool operator==(const TableRow&) const = default;
};

struct WindowTable {
  std::size_t n_columns = 0;  // number of source words
  std::size_t tgt_window = 5;
  std::vector<TableRow> rows;

  // Throws ContractError when a row leaves [start, start + tgt_window) or the
  // table, or stores an empty word.
  void validate() const;
};

struct MergedWord {
  std::size_t column = 0;
  std::string word;
  std::size_t votes = 0;

  bool operator==(const MergedWord&) const = default;
};

using MergedTranslation = std::vector<MergedWord>;

// Translates every source window independently (greedy decoding) and lays the
// first tgt_window output words into source-aligned columns.
WindowTable translate_windows(const std::vector<std::string>& words, const ModelBundle& model,
                              const StreamOptions& options = {});
WindowTable translate_windows(const StreamDocument& doc, const ModelBundle& model,
                              const StreamOptions& options = {});

// Encoder final hidden state per window, without decoding.
std::vector<std::vector<float>> window_traces(const std::vector<std::string>& words,
                                              const ModelBundle& model,
                                              const StreamOptions& options = {});

// First 6 scalar values of a non-empty word.
std::string prefix_key(std::string_view word);

// Column vote over prefix classes. For column c the neighbourhood is columns
// c-1..c+1; a class needs `vote_threshold` supporting cells there, at least
// one of them in c. Consecutive wins by one class are reported once.
MergedTranslation merge_columns(const WindowTable& table, std::size_t vote_threshold = 2);

std::string final_text(const MergedTranslation& merged);

// `start<TAB>word1<TAB>...` per row.
void write_table_tsv(const WindowTable& table, std::ostream& out);
// `start<TAB>v1<TAB>...<TAB>vd` per row.
void write_trace_tsv(const WindowTable& table, std::ostream& out);

}  // namespace chartrans
