#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chartrans {

inline constexpr int kPad = 0;
inline constexpr int kGo = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr std::size_t kNumControls = 4;

// Character inventory: 4 control symbols followed by content characters in
// descending corpus frequency (ties by ascending codepoint).
class CharVocab {
 public:
  CharVocab();
  explicit CharVocab(std::vector<char32_t> content);

  std::size_t size() const { return kNumControls + content_.size(); }
  const std::vector<char32_t>& content() const { return content_; }

  int id(char32_t ch) const;  // kUnk when absent
  bool contains(char32_t ch) const { return index_.count(ch) != 0; }

  // Symbol spelling used by the vocabulary file.
  std::string symbol(int id) const;

  bool operator==(const CharVocab& other) const { return content_ == other.content_; }

 private:
  std::vector<char32_t> content_;
  std::unordered_map<char32_t, int> index_;
};

CharVocab build_vocab(std::span<const std::string> corpora, std::size_t cap);

std::vector<int> encode_chars(const CharVocab& v, std::string_view text, bool append_eos);

// Stops at the first EOS; PAD and GO render as nothing, UNK as U+FFFD.
std::string decode_chars(const CharVocab& v, std::span<const int> ids);

void save_vocab(const CharVocab& v, const std::string& path);
CharVocab load_vocab(const std::string& path);

}  // namespace chartrans
