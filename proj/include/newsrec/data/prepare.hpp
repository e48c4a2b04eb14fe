#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "newsrec/data/cache.hpp"

namespace newsrec::data {

struct PrepareOptions {
  double val_fraction = 0.1;
  double test_fraction = 0.2;  // Adressa only; MIND uses its dev set as test
  std::size_t max_title_len = 30;
  std::size_t max_abstract_len = 50;
  std::size_t max_history = 50;
  int adressa_negatives = 20;
  std::uint64_t seed = 0;
  std::filesystem::path lexicon;  // empty: every item is neutral
};

struct PrepareReport {
  std::size_t news_row_errors = 0;
  std::size_t behavior_row_errors = 0;
  std::size_t dropped_references = 0;       // history/candidate ids absent from the corpus
  std::size_t dropped_impressions = 0;      // no usable positive/negative after cleaning
  std::vector<std::string> messages;        // first few row errors, human readable
};

// MIND layout: <train_dir>/{news,behaviors}.tsv and <dev_dir>/{news,behaviors}.tsv.
// Dev becomes the test split; train is re-split temporally by val_fraction.
PreparedData prepare_mind(const std::filesystem::path& train_dir,
                          const std::filesystem::path& dev_dir, const PrepareOptions& options,
                          PrepareReport* report = nullptr);

// Adressa JSON-lines events. Impressions are built with sampled negatives,
// then the timeline is cut into train / validation / test.
PreparedData prepare_adressa(const std::filesystem::path& events,
                             const PrepareOptions& options, PrepareReport* report = nullptr);

}  // namespace newsrec::data
