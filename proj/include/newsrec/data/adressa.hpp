#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "newsrec/data/mind.hpp"
#include "newsrec/data/types.hpp"

namespace newsrec::data {

struct ClickEvent {
  std::string user;
  std::string news_id;
  std::int64_t timestamp = 0;
};

struct AdressaParseResult {
  std::vector<ClickEvent> events;
  std::vector<NewsItem> news;  // from events carrying "title" (first occurrence wins)
  std::vector<RowError> errors;
};

// JSON lines with {userId, id, time} and optional {title, category}.
AdressaParseResult parse_adressa_events(const std::filesystem::path& path, NewsTables& tables,
                                        const NewsParseOptions& options = {});

// One impression per click: the clicked item (label 1) plus
// negatives_per_click items drawn uniformly without replacement from the
// corpus minus the user's full click set, in shuffled order. History holds
// the user's strictly earlier clicks. Deterministic under seed.
std::vector<Impression> build_adressa_impressions(const std::vector<ClickEvent>& events,
                                                  const NewsIndex& corpus,
                                                  int negatives_per_click, std::uint64_t seed);

}  // namespace newsrec::data
