#include "newsrec/data/types.hpp"

#include "newsrec/common/error.hpp"

namespace newsrec::data {

int Impression::positives() const {
  int n = 0;
  for (const Candidate& c : candidates) n += c.label == 1;
  return n;
}

int Impression::negatives() const {
  return static_cast<int>(candidates.size()) - positives();
}

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

std::int64_t Vocabulary::add(std::string_view token) {
  std::string key(token);
  auto it = ids_.find(key);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::int64_t>(tokens_.size());
  tokens_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

std::int64_t Vocabulary::lookup(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::token(std::int64_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error("vocabulary id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

int LabelIndex::add(std::string_view label) {
  std::string key(label);
  auto it = ids_.find(key);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(labels_.size());
  labels_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

std::optional<int> LabelIndex::find(std::string_view label) const {
  auto it = ids_.find(std::string(label));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool NewsIndex::add(NewsItem item) {
  if (positions_.count(item.news_id)) return false;
  positions_.emplace(item.news_id, items_.size());
  items_.push_back(std::move(item));
  return true;
}

const NewsItem* NewsIndex::find(std::string_view news_id) const {
  auto it = positions_.find(std::string(news_id));
  return it == positions_.end() ? nullptr : &items_[it->second];
}

std::optional<std::size_t> NewsIndex::position(std::string_view news_id) const {
  auto it = positions_.find(std::string(news_id));
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

}  // namespace newsrec::data
