#include "newsrec/data/adressa.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <random>
#include <unordered_set>

#include "newsrec/common/error.hpp"

namespace newsrec::data {

AdressaParseResult parse_adressa_events(const std::filesystem::path& path, NewsTables& tables,
                                        const NewsParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read Adressa events: " + path.string());
  AdressaParseResult result;
  std::unordered_set<std::string> seen_news;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      result.errors.push_back({line_no, where + "malformed JSON"});
      continue;
    }
    if (!j.contains("userId") || !j.contains("id") || !j.contains("time") ||
        !j["time"].is_number_integer()) {
      result.errors.push_back({line_no, where + "expected fields userId, id, integer time"});
      continue;
    }
    ClickEvent ev;
    ev.user = j["userId"].is_string() ? j["userId"].get<std::string>() : j["userId"].dump();
    ev.news_id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    ev.timestamp = j["time"].get<std::int64_t>();
    if (j.contains("title") && j["title"].is_string() && !seen_news.count(ev.news_id)) {
      const auto words = tokenize(j["title"].get<std::string>());
      if (!words.empty()) {
        NewsItem item;
        item.news_id = ev.news_id;
        for (const auto& w : words) {
          if (item.title_tokens.size() >= options.max_title_len) break;
          item.title_tokens.push_back(options.freeze_vocabulary ? tables.words.lookup(w)
                                                                : tables.words.add(w));
        }
        const std::string category =
            j.contains("category") && j["category"].is_string() ? j["category"].get<std::string>()
                                                                 : "unknown";
        item.category_id = tables.categories.add(category);
        item.subcategory_id = tables.subcategories.add(category);
        if (options.lexicon != nullptr && !options.lexicon->empty()) {
          const auto s = annotate_sentiment(words, *options.lexicon);
          item.sentiment_score = s.score;
          item.sentiment_class = s.label;
        }
        seen_news.insert(ev.news_id);
        result.news.push_back(std::move(item));
      }
    }
    result.events.push_back(std::move(ev));
  }
  return result;
}

std::vector<Impression> build_adressa_impressions(const std::vector<ClickEvent>& events,
                                                  const NewsIndex& corpus,
                                                  int negatives_per_click, std::uint64_t seed) {
  if (negatives_per_click < 1) throw DataError("negatives_per_click must be >= 1");
  const auto k = static_cast<std::size_t>(negatives_per_click);

  std::vector<std::size_t> order(events.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return events[a].timestamp < events[b].timestamp;
  });

  // Full click set per user, in a deterministic container.
  std::map<std::string, std::unordered_set<std::string>> clicked;
  for (const ClickEvent& ev : events) {
    if (corpus.find(ev.news_id) == nullptr) {
      throw DataError("click on news '" + ev.news_id + "' missing from the corpus");
    }
    clicked[ev.user].insert(ev.news_id);
  }
  for (const auto& [user, set] : clicked) {
    if (corpus.size() - set.size() < k) {
      throw DataError("corpus too small to sample " + std::to_string(k) +
                      " negatives for user '" + user + "': needs at least " +
                      std::to_string(k + set.size()) + " news, has " +
                      std::to_string(corpus.size()));
    }
  }

  std::mt19937_64 rng(seed);
  std::map<std::string, std::vector<std::pair<std::int64_t, std::string>>> past;
  std::map<std::string, std::int64_t> user_ids;
  std::vector<Impression> out;
  out.reserve(events.size());
  for (std::size_t idx : order) {
    const ClickEvent& ev = events[idx];
    Impression imp;
    imp.impression_id = "A" + std::to_string(out.size());
    imp.user_key = ev.user;
    auto [uit, _] = user_ids.emplace(ev.user, static_cast<std::int64_t>(user_ids.size()));
    imp.user_id = uit->second;
    imp.timestamp = ev.timestamp;
    for (const auto& [ts, id] : past[ev.user])
      if (ts < ev.timestamp) imp.history.push_back(id);

    // Rejection sampling: uniform over the corpus minus the user's clicks,
    // without replacement.
    const auto& user_clicks = clicked[ev.user];
    std::unordered_set<std::size_t> chosen;
    std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
    imp.candidates.push_back({ev.news_id, 1});
    while (chosen.size() < k) {
      const std::size_t j = pick(rng);
      const std::string& id = corpus.at(j).news_id;
      if (user_clicks.count(id) || !chosen.insert(j).second) continue;
      imp.candidates.push_back({id, 0});
    }
    std::shuffle(imp.candidates.begin(), imp.candidates.end(), rng);
    past[ev.user].emplace_back(ev.timestamp, ev.news_id);
    out.push_back(std::move(imp));
  }
  return out;
}

}  // namespace newsrec::data
