#pragma once

// Naive restatement of the column vote, written without the library's merge
// code: every candidate and every count is recomputed from the flat cell list.

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chartrans/stream.hpp"

namespace oracle {

struct Cell {
  std::size_t column;
  std::string word;
};

inline std::size_t scalars(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char b : s) n += (b & 0xC0) != 0x80;
  return n;
}

inline std::string first6(const std::string& s) {
  std::size_t seen = 0, i = 0;
  for (; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (seen == 6) break;
      ++seen;
    }
  }
  return s.substr(0, i);
}

inline std::vector<chartrans::MergedWord> merge(const chartrans::WindowTable& table,
                                                std::size_t threshold) {
  std::vector<Cell> cells;
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.words.size(); ++j) cells.push_back({row.start + j, row.words[j]});
  }
  auto near = [](std::size_t a, std::size_t c) { return a + 1 >= c && a <= c + 1; };

  std::vector<chartrans::MergedWord> out;
  std::optional<std::string> previous;
  for (std::size_t c = 0; c < table.n_columns; ++c) {
    bool found = false;
    std::string best_key, best_rep;
    std::size_t best_count = 0, best_own = 0;
    for (const auto& x : cells) {
      if (x.column != c) continue;
      const std::string key = first6(x.word);
      std::size_t count = 0, own = 0;
      for (const auto& y : cells) {
        if (first6(y.word) != key) continue;
        if (near(y.column, c)) ++count;
        if (y.column == c) ++own;
      }
      if (count < threshold) continue;
      std::string rep;
      std::size_t rep_freq = 0;
      for (const auto& y : cells) {
        if (!near(y.column, c) || first6(y.word) != key) continue;
        std::size_t freq = 0;
        for (const auto& z : cells) freq += near(z.column, c) && z.word == y.word;
        const bool better =
            rep.empty() || freq > rep_freq ||
            (freq == rep_freq && (scalars(y.word) < scalars(rep) ||
                                  (scalars(y.word) == scalars(rep) && y.word < rep)));
        if (better) {
          rep = y.word;
          rep_freq = freq;
        }
      }
      const bool wins = !found || count > best_count ||
                        (count == best_count && (own > best_own || (own == best_own && rep < best_rep)));
      if (wins) {
        found = true;
        best_key = key;
        best_rep = rep;
        best_count = count;
        best_own = own;
      }
    }
    if (!found) {
      previous.reset();
      continue;
    }
    if (!previous || *previous != best_key) out.push_back({c, best_rep, best_count});
    previous = best_key;
  }
  return out;
}

// Random words over a 5-letter alphabet, lengths 1-10, up to 12 columns.
inline chartrans::WindowTable random_table(std::mt19937_64& rng) {
  const std::vector<std::string> letters{"a", "b", "c", "d", "ā"};
  chartrans::WindowTable t;
  t.n_columns = 1 + rng() % 12;
  t.tgt_window = 1 + rng() % 5;
  const std::size_t n_rows = 1 + rng() % t.n_columns;
  // Short words repeat often enough for votes to matter.
  std::vector<std::string> pool;
  const std::size_t pool_size = 3 + rng() % 10;
  for (std::size_t i = 0; i < pool_size; ++i) {
    std::string w;
    const std::size_t len = 1 + rng() % 10;
    for (std::size_t k = 0; k < len; ++k) w += letters[rng() % letters.size()];
    pool.push_back(w);
  }
  for (std::size_t r = 0; r < n_rows; ++r) {
    chartrans::TableRow row;
    row.start = r;
    const std::size_t room = std::min(t.tgt_window, t.n_columns - r);
    const std::size_t n = rng() % (room + 1);
    for (std::size_t j = 0; j < n; ++j) row.words.push_back(pool[rng() % pool.size()]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace oracle
