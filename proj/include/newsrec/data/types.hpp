#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace newsrec::data {

enum class SentimentClass : std::int8_t { kNegative = 0, kNeutral = 1, kPositive = 2 };

inline constexpr int kSentimentClasses = 3;

struct NewsItem {
  std::string news_id;
  std::vector<std::int64_t> title_tokens;
  std::vector<std::int64_t> abstract_tokens;
  int category_id = 0;
  int subcategory_id = 0;
  std::vector<std::int64_t> entity_ids;
  double sentiment_score = 0.0;
  SentimentClass sentiment_class = SentimentClass::kNeutral;

  bool operator==(const NewsItem&) const = default;
};

struct Candidate {
  std::string news_id;
  int label = 0;

  bool operator==(const Candidate&) const = default;
};

struct Impression {
  std::string impression_id;
  std::string user_key;  // raw user identifier from the source file
  std::int64_t user_id = 0;
  std::int64_t timestamp = 0;
  std::vector<std::string> history;  // most recent last
  std::vector<Candidate> candidates;

  bool operator==(const Impression&) const = default;
  int positives() const;
  int negatives() const;
};

// Token <-> id map with reserved PAD = 0 and UNK = 1.
class Vocabulary {
 public:
  static constexpr std::int64_t kPad = 0;
  static constexpr std::int64_t kUnk = 1;

  Vocabulary();

  std::int64_t add(std::string_view token);
  // UNK when absent.
  std::int64_t lookup(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::int64_t id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int64_t> ids_;
};

// Dense first-seen ids for categorical labels (no reserved entries).
class LabelIndex {
 public:
  int add(std::string_view label);
  std::optional<int> find(std::string_view label) const;
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const LabelIndex& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> ids_;
};

// news-id -> NewsItem with stable insertion order.
class NewsIndex {
 public:
  // Returns false (and keeps the first) when the id already exists.
  bool add(NewsItem item);
  const NewsItem* find(std::string_view news_id) const;
  std::optional<std::size_t> position(std::string_view news_id) const;
  const NewsItem& at(std::size_t i) const { return items_[i]; }
  const std::vector<NewsItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  bool operator==(const NewsIndex& other) const { return items_ == other.items_; }

 private:
  std::vector<NewsItem> items_;
  std::unordered_map<std::string, std::size_t> positions_;
};

struct DatasetSplit {
  std::vector<Impression> train;
  std::vector<Impression> validation;
  std::vector<Impression> test;
  NewsIndex news_index;

  bool operator==(const DatasetSplit&) const = default;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

}  // namespace newsrec::data
