#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "newsrec/data/types.hpp"

namespace newsrec::data {

// Lowercases ASCII, deletes ASCII and common Unicode punctuation, splits on
// whitespace. No stemming.
std::vector<std::string> tokenize(std::string_view text);

using Lexicon = std::unordered_map<std::string, double>;

// TSV: token <TAB> valence [<TAB> ignored columns...]. Comment lines start with '#'.
Lexicon load_lexicon(const std::filesystem::path& path);

inline constexpr double kSentimentAlpha = 15.0;
inline constexpr double kSentimentThreshold = 0.05;

struct SentimentAnnotation {
  double score = 0.0;
  SentimentClass label = SentimentClass::kNeutral;
};

SentimentClass classify_sentiment(double score);

// score = clamp(sum v / (alpha * sqrt(#matched) + sum |v|), -1, 1) over
// lexicon matches; no match gives (0, neutral).
SentimentAnnotation annotate_sentiment(std::span<const std::string> tokens,
                                       const Lexicon& lexicon);

}  // namespace newsrec::data
