#include "newsrec/engine/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "newsrec/common/error.hpp"
#include "newsrec/common/hash.hpp"

namespace newsrec::engine {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kDefaults = R"(name = "experiment"
seed = 42

[data]
kind = "synthetic"
name = ""
train_dir = ""
dev_dir = ""
adressa_events = ""
lexicon = ""
word_embeddings = ""
entity_embeddings = ""
val_fraction = 0.1
test_fraction = 0.2
max_title_len = 30
max_abstract_len = 50
adressa_negatives = 20

[data.synthetic]
n_users = 200
n_news = 1000
n_topics = 5
vocab_size = 2000
tokens_per_title = 8
affinity_concentration = 0.05
click_noise = 0.0
sentiment_skew = 0.0
impressions_per_user = 10
history_length = 10
candidates_per_impression = 20
dev_fraction = 0.2
seed = 7

[model.news_encoder]
text_block = "mhsa_additive"
use_abstract = false
use_category = false
use_entities = false
d_model = 64
word_dim = 64
cnn_window = 3
heads = 4
attention_dim = 32
category_dim = 32
entity_dim = 100
fusion = "attend"
dropout = 0.2

[model.user_model]
kind = "mhsa_pool"
heads = 4
attention_dim = 32
long_term_mask_prob = 0.5
user_id_dim = 32

[model.loss]
kind = "ce"
temperature = 0.1
dual_weight = 0.5
aux = "none"
tanr_weight = 0.2
sentiment_weight = 0.4
diversity_weight = 0.4

[train]
epochs = 5
batch_size = 64
learning_rate = 0.0001
max_history = 50
neg_k = 4

[train.early_stop]
metric = "auc"
patience = 3

[train.checkpoint]
keep_best_on = "auc"

[eval]
ks = [5, 10]
aspects = ["category", "sentiment"]
split = "test"
spill_per_impression = false

[logging]
run_id = ""
formats = ["jsonl"]

[hpo]
sampler = "random"
n_trials = 10
objective = "auc"
seed = 0

[hpo.space]
)";

// Tables whose keys are free-form (string values only).
bool open_table(const std::string& path) { return path == "hpo.space"; }

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
  throw ConfigError(origin.empty() ? msg : origin + ": " + msg);
}

bool bare_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::vector<std::string> split_path(const std::string& path, const std::string& origin) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '.') {
      if (cur.empty()) fail(origin, "empty segment in key '" + path + "'");
      parts.push_back(cur);
      cur.clear();
    } else if (bare_char(c)) {
      cur += c;
    } else {
      fail(origin, "invalid character '" + std::string(1, c) + "' in key '" + path + "'");
    }
  }
  if (cur.empty()) fail(origin, "empty segment in key '" + path + "'");
  parts.push_back(cur);
  return parts;
}

class ValueParser {
 public:
  ValueParser(std::string_view s, std::string origin) : s_(s), origin_(std::move(origin)) {}

  json parse_all() {
    skip_ws();
    json v = value();
    skip_ws();
    if (i_ != s_.size()) fail(origin_, "unexpected trailing text '" + std::string(s_.substr(i_)) + "'");
    return v;
  }

 private:
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  json value() {
    if (i_ >= s_.size()) fail(origin_, "missing value");
    const char c = s_[i_];
    if (c == '"') return string();
    if (c == '[') return list();
    std::size_t j = i_;
    while (j < s_.size() && s_[j] != ',' && s_[j] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[j]))) {
      ++j;
    }
    const std::string_view tok = s_.substr(i_, j - i_);
    i_ = j;
    if (tok == "true") return true;
    if (tok == "false") return false;
    return number(tok);
  }

  json number(std::string_view tok) {
    const bool is_real = tok.find_first_of(".eE") != std::string_view::npos ||
                         tok == "inf" || tok == "-inf" || tok == "nan";
    if (!is_real) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec == std::errc() && p == tok.data() + tok.size()) return v;
    } else {
      double v = 0;
      std::string_view t = tok;
      if (!t.empty() && t.front() == '+') t.remove_prefix(1);
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec == std::errc() && p == t.data() + t.size() && std::isfinite(v)) return v;
    }
    fail(origin_, "cannot parse value '" + std::string(tok) + "'");
  }

  json string() {
    ++i_;
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c == '\\') {
        if (i_ >= s_.size()) break;
        const char e = s_[i_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(origin_, std::string("unknown escape \\") + e);
        }
      }
      out += c;
    }
    if (i_ >= s_.size()) fail(origin_, "unterminated string");
    ++i_;
    return out;
  }

  json list() {
    ++i_;
    json arr = json::array();
    skip_ws();
    if (i_ < s_.size() && s_[i_] == ']') {
      ++i_;
      return arr;
    }
    while (true) {
      skip_ws();
      if (i_ < s_.size() && s_[i_] == ']') {  // trailing comma
        ++i_;
        return arr;
      }
      arr.push_back(value());
      skip_ws();
      if (i_ >= s_.size()) fail(origin_, "unterminated list");
      if (s_[i_] == ',') {
        ++i_;
        continue;
      }
      if (s_[i_] == ']') {
        ++i_;
        return arr;
      }
      fail(origin_, "expected ',' or ']' in list");
    }
  }

  std::string_view s_;
  std::string origin_;
  std::size_t i_ = 0;
};

// Removes a '#' comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_str && c == '\\') {
      ++i;
    } else if (c == '"') {
      in_str = !in_str;
    } else if (c == '#' && !in_str) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

int bracket_depth(const std::string& s) {
  int depth = 0;
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (in_str && s[i] == '\\') {
      ++i;
    } else if (s[i] == '"') {
      in_str = !in_str;
    } else if (!in_str) {
      depth += s[i] == '[' ? 1 : s[i] == ']' ? -1 : 0;
    }
  }
  return depth;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string format_key(const std::string& k) {
  const bool bare = !k.empty() && std::all_of(k.begin(), k.end(), bare_char);
  return bare ? k : quote(k);
}

void dump_table(const json& t, const std::string& path, std::ostringstream& out, bool& first) {
  bool header_done = path.empty();
  auto header = [&] {
    if (header_done) return;
    if (!first) out << '\n';
    out << '[' << path << "]\n";
    first = false;
    header_done = true;
  };
  bool has_subtables = false;
  for (const auto& [k, v] : t.items()) {
    if (v.is_object()) {
      has_subtables = true;
      continue;
    }
    header();
    out << format_key(k) << " = " << format_config_value(v) << '\n';
    first = false;
  }
  // Tables with no scalar keys still get a header when they are leaves
  // (e.g. an empty search space).
  if (!has_subtables) header();
  for (const auto& [k, v] : t.items()) {
    if (v.is_object()) dump_table(v, join(path, format_key(k)), out, first);
  }
}

const json* find_path(const json& tree, const std::vector<std::string>& parts) {
  const json* cur = &tree;
  for (const auto& p : parts) {
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(p);
    if (it == cur->end()) return nullptr;
    cur = &*it;
  }
  return cur;
}

std::string nearest_key(const std::string& path) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& p : schema_paths()) {
    const std::size_t d = edit_distance(path, p);
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

[[noreturn]] void unknown_key(const std::string& path, const std::string& origin) {
  fail(origin, "unknown key '" + path + "' (did you mean '" + nearest_key(path) + "'?)");
}

std::string type_name(const json& v) {
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "bool";
  if (v.is_number_integer()) return "int";
  if (v.is_number_float()) return "real";
  if (v.is_array()) return "list";
  if (v.is_object()) return "table";
  return "null";
}

// Coerces v to the schema type of s or throws.
json conform(const json& v, const json& s, const std::string& path, const std::string& origin) {
  if (s.is_number_float() && v.is_number_integer()) return static_cast<double>(v.get<std::int64_t>());
  if (s.is_array()) {
    if (!v.is_array()) {
      fail(origin, "type mismatch at '" + path + "': expected list, got " + type_name(v));
    }
    if (s.empty()) return v;
    json out = json::array();
    for (const auto& e : v) out.push_back(conform(e, s.front(), path + "[]", origin));
    return out;
  }
  if (type_name(v) != type_name(s)) {
    fail(origin, "type mismatch at '" + path + "': expected " + type_name(s) + ", got " +
                     type_name(v));
  }
  return v;
}

// Merges src into dst, checking every key against the schema.
void merge_checked(json& dst, const json& src, const json& schema, const std::string& path,
                   const std::string& origin) {
  for (const auto& [k, v] : src.items()) {
    const std::string p = join(path, k);
    if (open_table(path)) {
      if (!v.is_string()) {
        fail(origin, "'" + p + "' must be a string search spec such as \"choice(1, 2)\"");
      }
      dst[k] = v;
      continue;
    }
    auto it = schema.find(k);
    if (it == schema.end()) unknown_key(p, origin);
    if (it->is_object()) {
      if (!v.is_object()) fail(origin, "type mismatch at '" + p + "': expected table, got " + type_name(v));
      if (dst[k].is_null()) dst[k] = json::object();
      merge_checked(dst[k], v, *it, p, origin);
    } else {
      dst[k] = conform(v, *it, p, origin);
    }
  }
}

void collect_paths(const json& t, const std::string& path, std::vector<std::string>& out) {
  for (const auto& [k, v] : t.items()) {
    const std::string p = join(path, k);
    out.push_back(p);
    if (v.is_object()) collect_paths(v, p, out);
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Resolves a file and its imports into a tree (no defaults applied).
json load_file(const fs::path& file, std::vector<fs::path>& stack) {
  const fs::path canon = fs::weakly_canonical(file);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    if (stack[i] == canon) {
      std::string chain;
      for (std::size_t j = i; j < stack.size(); ++j) chain += stack[j].stem().string() + "→";
      throw ConfigError("cycle: " + chain + canon.stem().string());
    }
  }
  stack.push_back(canon);
  json own = parse_config_text(read_file(file), file.string());
  json merged = json::object();
  if (auto it = own.find("inherits"); it != own.end()) {
    if (!it->is_array()) throw ConfigError(file.string() + ": 'inherits' must be a list of paths");
    for (const auto& ref : *it) {
      if (!ref.is_string()) throw ConfigError(file.string() + ": 'inherits' entries must be strings");
      fs::path child = ref.get<std::string>();
      if (child.is_relative()) child = file.parent_path() / child;
      const json sub = load_file(child, stack);
      merge_checked(merged, sub, default_config(), "", child.string());
    }
    own.erase("inherits");
  }
  merge_checked(merged, own, default_config(), "", file.string());
  stack.pop_back();
  return merged;
}

ResolvedConfig finish(json tree) {
  ResolvedConfig r;
  r.tree = std::move(tree);
  r.text = dump_config(r.tree);
  r.hash = fnv1a64_hex(r.text);
  return r;
}

}  // namespace

json parse_config_value(const std::string& text, const std::string& origin) {
  return ValueParser(text, origin).parse_all();
}

std::string format_config_value(const json& v) {
  if (v.is_string()) return quote(v.get<std::string>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) {
    char buf[64];
    const double d = v.get<double>();
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
    std::string s(buf, p);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  if (v.is_array()) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ", ";
      out += format_config_value(v[i]);
    }
    return out + "]";
  }
  throw ConfigError("cannot format config value of type " + type_name(v));
}

json parse_config_text(const std::string& text, const std::string& origin) {
  json root = json::object();
  std::vector<std::string> table;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(where, "malformed table header '" + line + "'");
      table = split_path(trim(line.substr(1, line.size() - 2)), where);
      json* t = &root;
      for (const auto& p : table) {
        json& next = (*t)[p];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) fail(where, "'" + p + "' is already a value");
        t = &next;
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(where, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    while (bracket_depth(value) > 0 && std::getline(in, raw)) {
      ++line_no;
      value += " " + trim(strip_comment(raw));
    }
    std::vector<std::string> parts;
    if (!key.empty() && key.front() == '"') {
      if (key.size() < 2 || key.back() != '"') fail(where, "malformed quoted key");
      parts = {key.substr(1, key.size() - 2)};
    } else {
      parts = split_path(key, where);
    }
    json* t = &root;
    for (const auto& p : table) t = &(*t)[p];
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      json& next = (*t)[parts[i]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) fail(where, "'" + parts[i] + "' is already a value");
      t = &next;
    }
    if (t->contains(parts.back())) fail(where, "duplicate key '" + key + "'");
    (*t)[parts.back()] = parse_config_value(value, where);
  }
  return root;
}

std::string dump_config(const json& tree) {
  std::ostringstream out;
  bool first = true;
  dump_table(tree, "", out, first);
  return out.str();
}

const json& default_config() {
  static const json defaults = parse_config_text(kDefaults, "<defaults>");
  return defaults;
}

std::vector<std::string> schema_paths() {
  std::vector<std::string> out;
  collect_paths(default_config(), "", out);
  return out;
}

const json& config_at(const json& tree, const std::string& path) {
  const json* v = find_path(tree, split_path(path, ""));
  if (v == nullptr) throw ConfigError("no config value at '" + path + "'");
  return *v;
}

void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form path=value");
  }
  const std::string path = trim(assignment.substr(0, eq));
  const std::string text = trim(assignment.substr(eq + 1));
  const std::string origin = "override '" + assignment + "'";
  const auto parts = split_path(path, origin);

  // Free-form search-space entries.
  if (parts.size() >= 3 && parts[0] == "hpo" && parts[1] == "space") {
    std::string key = path.substr(std::string("hpo.space.").size());
    tree["hpo"]["space"][key] = text.size() >= 2 && text.front() == '"'
                                    ? parse_config_value(text, origin)
                                    : json(text);
    return;
  }
  const json* schema = find_path(default_config(), parts);
  if (schema == nullptr) unknown_key(path, origin);
  if (schema->is_object()) fail(origin, "'" + path + "' is a table, not a value");
  json value;
  try {
    value = parse_config_value(text, origin);
  } catch (const ConfigError&) {
    if (!schema->is_string()) {
      fail(origin, "type mismatch at '" + path + "': expected " + type_name(*schema) +
                       ", got '" + text + "'");
    }
    value = text;
  }
  if (schema->is_string() && !value.is_string() && !(text.size() && text.front() == '[')) {
    value = text;  // bare word such as a number-looking run id
  }
  json* t = &tree;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) t = &(*t)[parts[i]];
  (*t)[parts.back()] = conform(value, *schema, path, origin);
}

ResolvedConfig resolve_tree(const json& tree, const std::vector<std::string>& overrides) {
  json merged = default_config();
  json own = tree;
  if (own.contains("inherits")) {
    throw ConfigError("'inherits' is only valid inside config files");
  }
  merge_checked(merged, own, default_config(), "", "<config>");
  for (const auto& o : overrides) apply_override(merged, o);
  return finish(std::move(merged));
}

ResolvedConfig compose_config(const fs::path& main, const std::vector<std::string>& overrides) {
  json merged = default_config();
  if (!main.empty()) {
    std::vector<fs::path> stack;
    const json file = load_file(main, stack);
    merge_checked(merged, file, default_config(), "", main.string());
  }
  for (const auto& o : overrides) apply_override(merged, o);
  return finish(std::move(merged));
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace newsrec::engine
