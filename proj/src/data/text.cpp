#include "newsrec/data/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "newsrec/common/error.hpp"

namespace newsrec::data {

namespace {

// Decodes one UTF-8 code point starting at i; advances i. Invalid bytes are
// returned as themselves.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> unsigned {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) & 0x3Fu : 0u;
  };
  if (b0 < 0x80) {
    i += 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && i + 1 < s.size()) {
    char32_t cp = ((b0 & 0x1Fu) << 6) | cont(1);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && i + 2 < s.size()) {
    char32_t cp = ((b0 & 0x0Fu) << 12) | (cont(1) << 6) | cont(2);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && i + 3 < s.size()) {
    char32_t cp = ((b0 & 0x07u) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
    i += 4;
    return cp;
  }
  i += 1;
  return b0;
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  return (cp >= 0x00A1 && cp <= 0x00BF && cp != 0x00AA && cp != 0x00B2 && cp != 0x00B3 &&
          cp != 0x00B5 && cp != 0x00B9 && cp != 0x00BA && cp != 0x00BC && cp != 0x00BD &&
          cp != 0x00BE) ||
         cp == 0x00D7 || cp == 0x00F7 || (cp >= 0x2010 && cp <= 0x205E) ||
         (cp >= 0x3000 && cp <= 0x303F && cp != 0x3000) || (cp >= 0xFF01 && cp <= 0xFF0F) ||
         (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
         (cp >= 0xFF5B && cp <= 0xFF65);
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
         cp == 0x00A0 || cp == 0x3000 || (cp >= 0x2000 && cp <= 0x200A);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = next_code_point(text, i);
    if (is_space(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (is_punctuation(cp)) {
      continue;
    } else if (cp < 0x80) {
      current.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
    } else {
      current.append(text.substr(start, i - start));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read sentiment lexicon: " + path.string());
  Lexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected token<TAB>valence");
    }
    const auto end = line.find('\t', tab + 1);
    const std::string value = line.substr(tab + 1, end == std::string::npos ? end : end - tab - 1);
    try {
      lexicon[line.substr(0, tab)] = std::stod(value);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad valence '" + value + "'");
    }
  }
  return lexicon;
}

SentimentClass classify_sentiment(double score) {
  if (score >= kSentimentThreshold) return SentimentClass::kPositive;
  if (score <= -kSentimentThreshold) return SentimentClass::kNegative;
  return SentimentClass::kNeutral;
}

SentimentAnnotation annotate_sentiment(std::span<const std::string> tokens,
                                       const Lexicon& lexicon) {
  double total = 0.0, magnitude = 0.0;
  std::size_t matched = 0;
  for (const std::string& t : tokens) {
    auto it = lexicon.find(t);
    if (it == lexicon.end()) continue;
    total += it->second;
    magnitude += std::abs(it->second);
    ++matched;
  }
  if (matched == 0) return {};
  const double denom = kSentimentAlpha * std::sqrt(static_cast<double>(matched)) + magnitude;
  const double score = denom > 0 ? std::clamp(total / denom, -1.0, 1.0) : 0.0;
  return {score, classify_sentiment(score)};
}

}  // namespace newsrec::data
