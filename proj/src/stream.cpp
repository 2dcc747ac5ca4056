#include "chartrans/stream.hpp"

#include <map>
#include <ostream>

#include "chartrans/error.hpp"
#include "chartrans/utf8.hpp"

namespace chartrans {

namespace {

void check_model(const ModelBundle& model) {
  if (model.vocab.size() != model.config.vocab_size) {
    throw ContractError("model bundle vocabulary does not match its config");
  }
  model.params.validate(model.config);
}

std::string float_text(float v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace

void WindowTable::validate() const {
  for (const auto& row : rows) {
    if (row.words.size() > tgt_window || row.start + row.words.size() > n_columns) {
      throw ContractError("window table row " + std::to_string(row.start) +
                          " leaves its column range");
    }
    for (const auto& w : row.words) {
      if (w.empty()) throw ContractError("window table stores an empty word");
    }
  }
}

WindowTable translate_windows(const std::vector<std::string>& words, const ModelBundle& model,
                              const StreamOptions& options) {
  if (words.empty()) throw InputError("translate_windows: empty document");
  check_model(model);
  WindowTable table;
  table.n_columns = words.size();
  table.tgt_window = options.tgt_window;
  for (const auto& window : word_windows(words, options.src_window, options.stride)) {
    const auto ids = encode_chars(model.vocab, window.text, false);
    const auto enc = encode(model.params, model.config, ids);
    const auto out = decode_greedy(model.params, model.config, enc);
    auto decoded = split_words(decode_chars(model.vocab, out));
    const std::size_t room = std::min(options.tgt_window, table.n_columns - window.start);
    if (decoded.size() > room) decoded.resize(room);
    table.rows.push_back({window.start, std::move(decoded), enc.h});
  }
  return table;
}

WindowTable translate_windows(const StreamDocument& doc, const ModelBundle& model,
                              const StreamOptions& options) {
  return translate_windows(doc.words(), model, options);
}

std::vector<std::vector<float>> window_traces(const std::vector<std::string>& words,
                                              const ModelBundle& model,
                                              const StreamOptions& options) {
  if (words.empty()) throw InputError("window_traces: empty document");
  check_model(model);
  std::vector<std::vector<float>> traces;
  for (const auto& window : word_windows(words, options.src_window, options.stride)) {
    traces.push_back(
        encode(model.params, model.config, encode_chars(model.vocab, window.text, false)).h);
  }
  return traces;
}

std::string prefix_key(std::string_view word) {
  if (word.empty()) throw InputError("prefix_key: empty word");
  return utf8::prefix(word, kPrefixChars);
}

MergedTranslation merge_columns(const WindowTable& table, std::size_t vote_threshold) {
  table.validate();
  const std::size_t n = table.n_columns;
  std::vector<std::vector<const std::string*>> columns(n);
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.words.size(); ++j) columns[row.start + j].push_back(&row.words[j]);
  }

  struct KeyStats {
    std::size_t neighbourhood = 0;
    std::size_t own = 0;
    std::map<std::string, std::size_t> forms;
  };

  MergedTranslation merged;
  std::string previous_key;
  bool previous_won = false;
  for (std::size_t c = 0; c < n; ++c) {
    std::map<std::string, KeyStats> stats;
    const std::size_t lo = c == 0 ? 0 : c - 1;
    const std::size_t hi = std::min(n - 1, c + 1);
    for (std::size_t col = lo; col <= hi; ++col) {
      for (const std::string* w : columns[col]) {
        auto& s = stats[prefix_key(*w)];
        ++s.neighbourhood;
        if (col == c) ++s.own;
        ++s.forms[*w];
      }
    }

    const std::string* best_key = nullptr;
    const KeyStats* best = nullptr;
    std::string best_rep;
    for (const auto& [key, s] : stats) {
      if (s.neighbourhood < vote_threshold || s.own == 0) continue;
      std::string rep;
      std::size_t rep_count = 0;
      for (const auto& [form, count] : s.forms) {
        const bool better =
            rep.empty() || count > rep_count ||
            (count == rep_count && (utf8::length(form) < utf8::length(rep) ||
                                    (utf8::length(form) == utf8::length(rep) && form < rep)));
        if (better) {
          rep = form;
          rep_count = count;
        }
      }
      const bool better = !best || s.neighbourhood > best->neighbourhood ||
                          (s.neighbourhood == best->neighbourhood &&
                           (s.own > best->own || (s.own == best->own && rep < best_rep)));
      if (better) {
        best_key = &key;
        best = &s;
        best_rep = rep;
      }
    }

    if (!best) {
      previous_won = false;
      continue;
    }
    if (!(previous_won && previous_key == *best_key)) {
      merged.push_back({c, best_rep, best->neighbourhood});
    }
    previous_key = *best_key;
    previous_won = true;
  }
  return merged;
}

std::string final_text(const MergedTranslation& merged) {
  std::string out;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (i) out += ' ';
    out += merged[i].word;
  }
  return out;
}

void write_table_tsv(const WindowTable& table, std::ostream& out) {
  for (const auto& row : table.rows) {
    out << row.start;
    for (const auto& w : row.words) out << '\t' << w;
    out << '\n';
  }
}

void write_trace_tsv(const WindowTable& table, std::ostream& out) {
  for (const auto& row : table.rows) {
    out << row.start;
    for (float v : row.trace) out << '\t' << float_text(v);
    out << '\n';
  }
}

}  // namespace chartrans
