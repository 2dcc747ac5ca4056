#include "chartrans/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "chartrans/error.hpp"
#include "chartrans/utf8.hpp"

namespace chartrans {

namespace {

constexpr const char* kControlNames[kNumControls] = {"<PAD>", "<GO>", "<EOS>", "<UNK>"};

}  // namespace

CharVocab::CharVocab() = default;

CharVocab::CharVocab(std::vector<char32_t> content) : content_(std::move(content)) {
  for (std::size_t i = 0; i < content_.size(); ++i) {
    if (!index_.emplace(content_[i], static_cast<int>(kNumControls + i)).second) {
      throw InputError("vocabulary contains a duplicate character");
    }
  }
}

int CharVocab::id(char32_t ch) const {
  auto it = index_.find(ch);
  return it == index_.end() ? kUnk : it->second;
}

std::string CharVocab::symbol(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= size()) {
    throw IndexError("symbol id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(size()));
  }
  if (id < static_cast<int>(kNumControls)) return kControlNames[id];
  return utf8::encode(content_[id - kNumControls]);
}

CharVocab build_vocab(std::span<const std::string> corpora, std::size_t cap) {
  if (corpora.empty()) throw InputError("build_vocab: no corpora given");
  if (cap < 1) throw InputError("build_vocab: cap must be at least 1");
  std::map<char32_t, std::size_t> counts;
  for (const auto& text : corpora) {
    for (char32_t ch : utf8::decode(text)) {
      // line breaks cannot be stored one-per-line in vocab.txt
      if (ch != U'\n' && ch != U'\r') ++counts[ch];
    }
  }
  std::vector<std::pair<char32_t, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<char32_t> content;
  for (std::size_t i = 0; i < ranked.size() && i < cap; ++i) content.push_back(ranked[i].first);
  return CharVocab(std::move(content));
}

std::vector<int> encode_chars(const CharVocab& v, std::string_view text, bool append_eos) {
  std::vector<int> ids;
  for (char32_t ch : utf8::decode(text)) ids.push_back(v.id(ch));
  if (append_eos) ids.push_back(kEos);
  return ids;
}

std::string decode_chars(const CharVocab& v, std::span<const int> ids) {
  std::string out;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= v.size()) {
      throw IndexError("decode_chars: id " + std::to_string(id) + " outside vocabulary");
    }
    if (id == kEos) break;
    if (id == kPad || id == kGo) continue;
    if (id == kUnk) {
      out += utf8::encode(U'�');
      continue;
    }
    out += utf8::encode(v.content()[id - kNumControls]);
  }
  return out;
}

void save_vocab(const CharVocab& v, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write vocabulary file " + path);
  for (std::size_t i = 0; i < v.size(); ++i) out << v.symbol(static_cast<int>(i)) << '\n';
  if (!out) throw FormatError("failed writing vocabulary file " + path);
}

CharVocab load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read vocabulary file " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < kNumControls) throw FormatError("vocabulary file too short: " + path);
  for (std::size_t i = 0; i < kNumControls; ++i) {
    if (lines[i] != kControlNames[i]) {
      throw FormatError("vocabulary file " + path + " does not start with the control symbols");
    }
  }
  std::vector<char32_t> content;
  for (std::size_t i = kNumControls; i < lines.size(); ++i) {
    const auto cps = utf8::decode(lines[i]);
    if (cps.size() != 1) {
      throw FormatError("vocabulary line " + std::to_string(i + 1) + " is not one character");
    }
    content.push_back(cps[0]);
  }
  return CharVocab(std::move(content));
}

}  // namespace chartrans
