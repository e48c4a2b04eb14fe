#pragma once

#include <filesystem>
#include <string>

#include "newsrec/data/mind.hpp"
#include "newsrec/data/split.hpp"
#include "newsrec/data/types.hpp"

namespace newsrec::data {

inline constexpr int kCacheFormatVersion = 1;

// Everything a run needs after preprocessing.
struct PreparedData {
  NewsTables tables;
  DatasetSplit split;
  UserAssignment users;
  std::string source;  // free-form description kept in meta.json

  bool operator==(const PreparedData& other) const;
};

// Layout: news.bin, train.bin, val.bin, test.bin, vocab.tsv, entities.tsv,
// users.tsv, meta.json.
void save_cache(const PreparedData& data, const std::filesystem::path& dir);

// Throws DataError on missing files or a format version mismatch.
PreparedData load_cache(const std::filesystem::path& dir);

bool cache_exists(const std::filesystem::path& dir);

}  // namespace newsrec::data
