#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "newsrec/data/text.hpp"
#include "newsrec/data/types.hpp"

namespace newsrec::data {

// Shared lookup tables built while parsing news files.
struct NewsTables {
  Vocabulary words;
  Vocabulary entities;  // WikidataId -> id
  LabelIndex categories;
  LabelIndex subcategories;

  bool operator==(const NewsTables&) const = default;
};

struct NewsParseOptions {
  // Frozen vocabulary: unseen words map to UNK instead of being added.
  bool freeze_vocabulary = false;
  std::size_t max_title_len = 30;
  std::size_t max_abstract_len = 50;
  // Sentiment annotation over title + abstract; absent lexicon gives neutral.
  const Lexicon* lexicon = nullptr;
};

struct NewsParseResult {
  std::vector<NewsItem> items;
  std::vector<RowError> errors;
};

// MIND news.tsv: news_id, category, subcategory, title, abstract, url,
// title_entities, abstract_entities (JSON arrays with "WikidataId").
NewsParseResult parse_mind_news(const std::filesystem::path& path, NewsTables& tables,
                                const NewsParseOptions& options = {});

struct BehaviorsParseResult {
  std::vector<Impression> impressions;
  std::vector<RowError> errors;
  std::size_t n_users = 0;
};

// MIND behaviors.tsv: impression_id, user_id, time, history, impressions.
// User ids are densified in first-seen order.
BehaviorsParseResult parse_mind_behaviors(const std::filesystem::path& path);

// "M/D/YYYY h:mm:ss AM|PM" (UTC) or an integer epoch.
std::optional<std::int64_t> parse_mind_time(std::string_view text);
std::string format_mind_time(std::int64_t epoch_seconds);

}  // namespace newsrec::data
