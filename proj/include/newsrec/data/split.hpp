#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "newsrec/data/types.hpp"

namespace newsrec::data {

// Sorts by timestamp (stable) and moves the last ceil(val_fraction * N)
// impressions to validation. Every impression sharing the boundary timestamp
// goes to validation, so max(train.ts) < min(validation.ts). Throws when no
// temporal order exists or the train side would be empty.
DatasetSplit temporal_split(std::vector<Impression> impressions, double val_fraction);

// Keeps the most recent max_history entries.
void truncate_history(Impression& impression, std::size_t max_history);

struct TrainingTuple {
  std::string positive;
  std::vector<std::string> negatives;

  bool operator==(const TrainingTuple&) const = default;
};

// One tuple per positive, with k negatives from the impression's label-0
// candidates: without replacement when at least k exist, otherwise with
// replacement. nullopt when the impression has no positive or no negative.
std::optional<std::vector<TrainingTuple>> negative_sample_training(const Impression& impression,
                                                                   int k, std::uint64_t seed);

struct UserAssignment {
  std::size_t n_users = 0;      // known users; ids [0, n_users)
  std::int64_t cold_id = 0;     // == n_users
  std::vector<std::string> users;  // id -> raw key
};

// Re-densifies user ids in first-seen order over the train split; users seen
// only in validation/test map to the shared COLD id.
UserAssignment assign_user_ids(DatasetSplit& split);

}  // namespace newsrec::data
