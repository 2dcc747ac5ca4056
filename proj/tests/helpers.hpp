#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chartrans/seq2seq.hpp"

namespace testutil {

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::path(CHARTRANS_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Deterministic fill shared with tests/oracle/seq2seq_oracle.py.
template <typename T>
void oracle_fill(chartrans::BasicTensor<T>& t, int k) {
  auto d = t.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<T>(0.4 * std::sin(0.7 * static_cast<double>(i) + 1.1 * k + 0.3));
  }
}

template <typename T>
void oracle_fill(const chartrans::Seq2SeqParams<T>& p) {
  int k = 0;
  for (auto& [name, t] : p.named_parameters()) oracle_fill(*t, k++);
}

inline std::vector<int> random_ids(std::mt19937_64& rng, std::size_t len, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  std::vector<int> out(len);
  for (auto& v : out) v = d(rng);
  return out;
}

}  // namespace testutil
