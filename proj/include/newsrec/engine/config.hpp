#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace newsrec::engine {

using ConfigTree = nlohmann::ordered_json;

// Key/value tree text format:
//   # comment
//   inherits = ["data.cfg", "model.cfg"]   (top level only)
//   seed = 42
//   [train.early_stop]
//   metric = "auc"
//   "quoted.key" = "value"
// Values: "strings", integers, reals (with '.' or exponent), true/false and
// [lists]. Dotted bare keys address nested tables.
ConfigTree parse_config_text(const std::string& text, const std::string& origin);

// Canonical rendering; parse_config_text(dump_config(t)) == t.
std::string dump_config(const ConfigTree& tree);

// Built-in defaults, which double as the schema for strict key checking.
const ConfigTree& default_config();

// Every valid dot path (tables and leaves) of the schema.
std::vector<std::string> schema_paths();

struct ResolvedConfig {
  ConfigTree tree;
  std::string text;  // dump_config(tree), the persisted bytes
  std::string hash;  // fnv1a64_hex(text)
};

// Precedence: overrides > main file > inherited files (later beat earlier)
// > defaults. Unknown keys, type mismatches and inheritance cycles throw
// ConfigError. main may be empty to start from the defaults.
ResolvedConfig compose_config(const std::filesystem::path& main,
                              const std::vector<std::string>& overrides);

// Same, starting from an in-memory tree instead of a file.
ResolvedConfig resolve_tree(const ConfigTree& tree, const std::vector<std::string>& overrides);

// "dot.path=value". The value uses file syntax; a bare word is accepted
// where the schema expects a string.
void apply_override(ConfigTree& tree, const std::string& assignment);

// Parses a single value in file syntax; throws ConfigError.
nlohmann::ordered_json parse_config_value(const std::string& text, const std::string& origin);

std::string format_config_value(const nlohmann::ordered_json& v);

// Leaf lookup by dot path; throws ConfigError when absent.
const nlohmann::ordered_json& config_at(const ConfigTree& tree, const std::string& path);

std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace newsrec::engine
