#include "newsrec/data/mind.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <unordered_map>

#include "newsrec/common/error.hpp"

namespace newsrec::data {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) parts.push_back(s.substr(start, i - start));
  }
  return parts;
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::vector<std::int64_t> to_ids(const std::vector<std::string>& tokens, Vocabulary& vocab,
                                 bool frozen, std::size_t max_len) {
  std::vector<std::int64_t> ids;
  ids.reserve(std::min(tokens.size(), max_len));
  for (const std::string& t : tokens) {
    if (ids.size() >= max_len) break;
    ids.push_back(frozen ? vocab.lookup(t) : vocab.add(t));
  }
  return ids;
}

std::vector<std::int64_t> parse_entities(std::string_view field, Vocabulary& entities,
                                         bool frozen) {
  std::vector<std::int64_t> ids;
  if (field.empty()) return ids;
  const auto parsed = nlohmann::json::parse(field);
  if (!parsed.is_array()) throw std::runtime_error("entity column is not a JSON array");
  for (const auto& e : parsed) {
    if (!e.is_object() || !e.contains("WikidataId")) continue;
    const std::string wid = e.at("WikidataId").get<std::string>();
    ids.push_back(frozen ? entities.lookup(wid) : entities.add(wid));
  }
  return ids;
}

int parse_int(std::string_view s, bool& ok) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  ok = ec == std::errc() && ptr == s.data() + s.size();
  return v;
}

}  // namespace

NewsParseResult parse_mind_news(const std::filesystem::path& path, NewsTables& tables,
                                const NewsParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read news file: " + path.string());
  NewsParseResult result;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    auto reject = [&](std::string message) {
      result.errors.push_back({line_no, path.filename().string() + ":" + std::to_string(line_no) +
                                            ": " + std::move(message)});
    };
    if (cols.size() != 8) {
      reject("expected 8 tab-separated columns, found " + std::to_string(cols.size()));
      continue;
    }
    if (cols[0].empty()) {
      reject("empty news id");
      continue;
    }
    const auto title_words = tokenize(cols[3]);
    if (title_words.empty()) {
      reject("empty title");
      continue;
    }
    const auto abstract_words = tokenize(cols[4]);
    NewsItem item;
    item.news_id = std::string(cols[0]);
    try {
      item.entity_ids = parse_entities(cols[6], tables.entities, options.freeze_vocabulary);
      auto extra = parse_entities(cols[7], tables.entities, options.freeze_vocabulary);
      item.entity_ids.insert(item.entity_ids.end(), extra.begin(), extra.end());
    } catch (const std::exception& e) {
      reject(std::string("malformed entity column: ") + e.what());
      continue;
    }
    item.title_tokens =
        to_ids(title_words, tables.words, options.freeze_vocabulary, options.max_title_len);
    item.abstract_tokens =
        to_ids(abstract_words, tables.words, options.freeze_vocabulary, options.max_abstract_len);
    item.category_id = tables.categories.add(cols[1]);
    item.subcategory_id = tables.subcategories.add(cols[2]);
    if (options.lexicon != nullptr && !options.lexicon->empty()) {
      std::vector<std::string> text = title_words;
      text.insert(text.end(), abstract_words.begin(), abstract_words.end());
      const auto s = annotate_sentiment(text, *options.lexicon);
      item.sentiment_score = s.score;
      item.sentiment_class = s.label;
    }
    result.items.push_back(std::move(item));
  }
  return result;
}

BehaviorsParseResult parse_mind_behaviors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read behaviors file: " + path.string());
  BehaviorsParseResult result;
  std::unordered_map<std::string, std::int64_t> users;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    auto reject = [&](std::string message) {
      result.errors.push_back({line_no, path.filename().string() + ":" + std::to_string(line_no) +
                                            ": " + std::move(message)});
    };
    if (cols.size() != 5) {
      reject("expected 5 tab-separated columns, found " + std::to_string(cols.size()));
      continue;
    }
    const auto ts = parse_mind_time(cols[2]);
    if (!ts) {
      reject("unparseable time '" + std::string(cols[2]) + "'");
      continue;
    }
    Impression imp;
    imp.impression_id = std::string(cols[0]);
    imp.user_key = std::string(cols[1]);
    imp.timestamp = *ts;
    for (auto id : split_ws(cols[3])) imp.history.emplace_back(id);
    bool ok = true;
    for (auto token : split_ws(cols[4])) {
      const auto dash = token.rfind('-');
      if (dash == std::string_view::npos || dash == 0 ||
          (token.substr(dash + 1) != "0" && token.substr(dash + 1) != "1")) {
        reject("candidate '" + std::string(token) + "' lacks a -0/-1 label suffix");
        ok = false;
        break;
      }
      imp.candidates.push_back({std::string(token.substr(0, dash)), token.back() == '1' ? 1 : 0});
    }
    if (!ok) continue;
    if (imp.candidates.empty()) {
      reject("no candidates");
      continue;
    }
    auto [it, inserted] = users.emplace(imp.user_key, static_cast<std::int64_t>(users.size()));
    imp.user_id = it->second;
    result.impressions.push_back(std::move(imp));
  }
  result.n_users = users.size();
  return result;
}

std::optional<std::int64_t> parse_mind_time(std::string_view text) {
  bool ok = false;
  if (!text.empty() && text.find('/') == std::string_view::npos) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size()) return v;
    return std::nullopt;
  }
  // M/D/YYYY h:mm:ss AM
  const auto parts = split_ws(text);
  if (parts.size() != 3) return std::nullopt;
  const auto date = split(parts[0], '/');
  const auto clock = split(parts[1], ':');
  if (date.size() != 3 || clock.size() != 3) return std::nullopt;
  int vals[6];
  const std::string_view fields[6] = {date[0], date[1], date[2], clock[0], clock[1], clock[2]};
  for (int i = 0; i < 6; ++i) {
    vals[i] = parse_int(fields[i], ok);
    if (!ok) return std::nullopt;
  }
  int hour = vals[3];
  if (hour < 1 || hour > 12 || vals[4] > 59 || vals[5] > 60) return std::nullopt;
  if (parts[2] == "AM") {
    if (hour == 12) hour = 0;
  } else if (parts[2] == "PM") {
    if (hour != 12) hour += 12;
  } else {
    return std::nullopt;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{vals[2]}, month{static_cast<unsigned>(vals[0])},
                           day{static_cast<unsigned>(vals[1])}};
  if (!ymd.ok()) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hour * 3600 + vals[4] * 60 + vals[5];
}

std::string format_mind_time(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  int hour = static_cast<int>(rem / 3600);
  const int minute = static_cast<int>((rem % 3600) / 60);
  const int second = static_cast<int>(rem % 60);
  const char* meridiem = hour < 12 ? "AM" : "PM";
  hour %= 12;
  if (hour == 0) hour = 12;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%u/%u/%d %d:%02d:%02d %s",
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(ymd.year()), hour, minute, second, meridiem);
  return buf;
}

}  // namespace newsrec::data
