#include "chartrans/corpus.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "chartrans/error.hpp"
#include "chartrans/utf8.hpp"

namespace chartrans {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    fields.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  return fields;
}

std::optional<double> parse_time(const std::string& field, std::size_t line_no) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw FormatError("stream document line " + std::to_string(line_no) +
                      ": bad time value '" + field + "'");
  }
  return v;
}

std::string format_time(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::vector<std::string> StreamDocument::words() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.word);
  return out;
}

void StreamDocument::validate() const {
  std::optional<double> last;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.word.empty()) throw InputError("document " + id + ": empty word at token " +
                                         std::to_string(i));
    for (const auto& time : {t.start, t.end}) {
      if (!time) continue;
      if (last && *time < *last) {
        throw InputError("document " + id + ": times decrease at token " + std::to_string(i));
      }
      last = time;
    }
  }
}

ParallelCorpus load_parallel(const std::string& path, std::optional<std::size_t> truncate_chars) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read corpus file " + path);
  ParallelCorpus corpus;
  corpus.truncate_chars = truncate_chars;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      ++corpus.skipped_lines;
      continue;
    }
    std::string src = line.substr(0, tab);
    std::string tgt = line.substr(tab + 1);
    // validates UTF-8 on both sides
    utf8::length(src);
    utf8::length(tgt);
    if (truncate_chars) {
      src = utf8::prefix(src, *truncate_chars);
      tgt = utf8::prefix(tgt, *truncate_chars);
    }
    if (src.empty() || tgt.empty()) {
      ++corpus.skipped_lines;
      continue;
    }
    corpus.pairs.emplace_back(std::move(src), std::move(tgt));
  }
  return corpus;
}

ParallelCorpus load_monolingual(const std::string& path,
                                std::optional<std::size_t> truncate_chars) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read corpus file " + path);
  ParallelCorpus corpus;
  corpus.truncate_chars = truncate_chars;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    std::string s = line.substr(0, line.find('\t'));
    utf8::length(s);
    if (truncate_chars) s = utf8::prefix(s, *truncate_chars);
    if (s.empty()) {
      ++corpus.skipped_lines;
      continue;
    }
    corpus.pairs.emplace_back(s, s);
  }
  return corpus;
}

void save_parallel(const ParallelCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write corpus file " + path);
  for (const auto& [src, tgt] : corpus.pairs) out << src << '\t' << tgt << '\n';
}

std::vector<StreamDocument> load_stream_documents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read stream document file " + path);
  std::vector<StreamDocument> docs;
  StreamDocument current;
  auto flush = [&] {
    if (current.tokens.empty()) return;
    if (current.id.empty()) current.id = "doc" + std::to_string(docs.size());
    current.validate();
    docs.push_back(std::move(current));
    current = StreamDocument{};
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) {
      flush();
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() > 4) {
      throw FormatError("stream document line " + std::to_string(line_no) +
                        ": more than 4 fields");
    }
    fields.resize(4);
    utf8::length(fields[0]);
    StreamToken tok;
    tok.word = fields[0];
    tok.start = parse_time(fields[1], line_no);
    tok.end = parse_time(fields[2], line_no);
    if (!fields[3].empty()) tok.speaker = fields[3];
    current.tokens.push_back(std::move(tok));
  }
  flush();
  return docs;
}

void save_stream_documents(std::span<const StreamDocument> docs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write stream document file " + path);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (d) out << '\n';
    for (const auto& t : docs[d].tokens) {
      out << t.word << '\t' << (t.start ? format_time(*t.start) : "") << '\t'
          << (t.end ? format_time(*t.end) : "") << '\t' << t.speaker.value_or("") << '\n';
    }
  }
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > begin) words.emplace_back(text.substr(begin, i - begin));
  }
  return words;
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<WordWindow> word_windows(std::span<const std::string> words, std::size_t window,
                                     std::size_t stride, std::size_t max_chars) {
  if (window < 1 || stride < 1) throw InputError("word_windows: window and stride must be >= 1");
  std::vector<WordWindow> out;
  if (words.empty()) return out;
  if (words.size() <= window) {
    out.push_back({0, utf8::prefix(join_words(words), max_chars)});
    return out;
  }
  for (std::size_t start = 0; start + window <= words.size(); start += stride) {
    out.push_back({start, utf8::prefix(join_words(words.subspan(start, window)), max_chars)});
  }
  return out;
}

}  // namespace chartrans
