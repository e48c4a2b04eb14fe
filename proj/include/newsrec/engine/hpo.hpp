#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsrec/engine/runner.hpp"

namespace newsrec::engine {

// One searched dimension, parsed from "choice(a, b, ...)",
// "range(lo, hi[, step])" (hi exclusive) or "interval(lo, hi)".
struct SearchDim {
  enum class Kind { kChoice, kRange, kInterval };
  std::string path;
  Kind kind = Kind::kChoice;
  std::vector<nlohmann::ordered_json> values;  // choice and range
  double lo = 0.0, hi = 0.0;                   // interval
  bool integer = false;                        // interval with integer bounds
};

SearchDim parse_search_dim(const std::string& path, const std::string& spec);

// Per-trial override lists. Grid enumerates the cartesian product in space
// order (last dimension fastest) and runs min(n_trials, size) trials;
// random draws n_trials points from a generator seeded with seed.
std::vector<std::vector<std::string>> sample_trials(const std::vector<SearchDim>& space,
                                                    const std::string& sampler, int n_trials,
                                                    std::uint64_t seed);

struct TrialResult {
  int index = 0;
  std::vector<std::string> overrides;  // sampled assignments only
  bool ok = false;
  double objective = 0.0;
  std::string error;
  std::string config_hash;
  std::filesystem::path dir;
};

struct HpoResult {
  std::vector<TrialResult> trials;  // ranked: best first, failures last
  std::filesystem::path table;      // trials.csv
  const TrialResult& best() const { return trials.front(); }
};

// Runs trials sequentially under run_dir/trials/trial_NNN. Each trial is
// compose_config(main, base_overrides + sampled + eval.split=val), trained,
// and scored by hpo.objective on validation with its best checkpoint.
HpoResult hpo_search(const std::filesystem::path& main,
                     const std::vector<std::string>& base_overrides,
                     const std::filesystem::path& out, const std::filesystem::path& run_dir,
                     std::ostream* log = nullptr);

}  // namespace newsrec::engine
