#include "newsrec/data/cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "newsrec/common/error.hpp"

namespace newsrec::data {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "cache assumes little-endian hosts");

class Writer {
 public:
  explicit Writer(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write cache file " + path.string());
  }
  ~Writer() noexcept(false) {
    out_.flush();
    if (!out_ && std::uncaught_exceptions() == 0) {
      throw DataError("failed writing cache file " + path_.string());
    }
  }

  template <typename T>
  void pod(T v) { out_.write(reinterpret_cast<const char*>(&v), sizeof(T)); }
  void u64(std::uint64_t v) { pod(v); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void ids(const std::vector<std::int64_t>& v) {
    u64(v.size());
    for (auto x : v) pod(x);
  }
  void strs(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot read cache file " + path.string());
  }

  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw DataError("truncated cache file " + path_.string());
    return v;
  }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::size_t count() {
    const std::uint64_t n = u64();
    if (n > (1ull << 34)) throw DataError("corrupt length in cache file " + path_.string());
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    std::string s(count(), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in_) throw DataError("truncated cache file " + path_.string());
    return s;
  }
  std::vector<std::int64_t> ids() {
    std::vector<std::int64_t> v(count());
    for (auto& x : v) x = pod<std::int64_t>();
    return v;
  }
  std::vector<std::string> strs() {
    std::vector<std::string> v(count());
    for (auto& s : v) s = str();
    return v;
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw DataError("trailing bytes in cache file " + path_.string());
    }
  }

 private:
  fs::path path_;
  std::ifstream in_;
};

void write_news(const NewsIndex& index, const fs::path& path) {
  Writer w(path);
  w.u64(index.size());
  for (const NewsItem& n : index.items()) {
    w.str(n.news_id);
    w.ids(n.title_tokens);
    w.ids(n.abstract_tokens);
    w.pod<std::int32_t>(n.category_id);
    w.pod<std::int32_t>(n.subcategory_id);
    w.ids(n.entity_ids);
    w.pod<double>(n.sentiment_score);
    w.pod<std::int8_t>(static_cast<std::int8_t>(n.sentiment_class));
  }
}

NewsIndex read_news(const fs::path& path) {
  Reader r(path);
  NewsIndex index;
  const std::size_t n = r.count();
  for (std::size_t i = 0; i < n; ++i) {
    NewsItem item;
    item.news_id = r.str();
    item.title_tokens = r.ids();
    item.abstract_tokens = r.ids();
    item.category_id = r.pod<std::int32_t>();
    item.subcategory_id = r.pod<std::int32_t>();
    item.entity_ids = r.ids();
    item.sentiment_score = r.pod<double>();
    const auto cls = r.pod<std::int8_t>();
    if (cls < 0 || cls >= kSentimentClasses) throw DataError("bad sentiment class in " + path.string());
    item.sentiment_class = static_cast<SentimentClass>(cls);
    if (!index.add(std::move(item))) throw DataError("duplicate news id in " + path.string());
  }
  r.expect_end();
  return index;
}

void write_impressions(const std::vector<Impression>& imps, const fs::path& path) {
  Writer w(path);
  w.u64(imps.size());
  for (const Impression& imp : imps) {
    w.str(imp.impression_id);
    w.str(imp.user_key);
    w.pod<std::int64_t>(imp.user_id);
    w.pod<std::int64_t>(imp.timestamp);
    w.strs(imp.history);
    w.u64(imp.candidates.size());
    for (const Candidate& c : imp.candidates) {
      w.str(c.news_id);
      w.pod<std::int8_t>(static_cast<std::int8_t>(c.label));
    }
  }
}

std::vector<Impression> read_impressions(const fs::path& path) {
  Reader r(path);
  std::vector<Impression> imps(r.count());
  for (Impression& imp : imps) {
    imp.impression_id = r.str();
    imp.user_key = r.str();
    imp.user_id = r.pod<std::int64_t>();
    imp.timestamp = r.pod<std::int64_t>();
    imp.history = r.strs();
    imp.candidates.resize(r.count());
    for (Candidate& c : imp.candidates) {
      c.news_id = r.str();
      c.label = r.pod<std::int8_t>();
    }
  }
  r.expect_end();
  return imps;
}

void write_lines(const std::vector<std::string>& lines, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read cache file " + path.string());
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

Vocabulary vocabulary_from(const std::vector<std::string>& tokens, const fs::path& path) {
  Vocabulary v;
  if (tokens.size() < 2 || tokens[0] != v.token(Vocabulary::kPad) ||
      tokens[1] != v.token(Vocabulary::kUnk)) {
    throw DataError("vocabulary file " + path.string() + " lacks the reserved entries");
  }
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    if (v.add(tokens[i]) != static_cast<std::int64_t>(i)) {
      throw DataError("duplicate token '" + tokens[i] + "' in " + path.string());
    }
  }
  return v;
}

}  // namespace

bool PreparedData::operator==(const PreparedData& other) const {
  return tables == other.tables && split == other.split && users.n_users == other.users.n_users &&
         users.cold_id == other.users.cold_id && users.users == other.users.users &&
         source == other.source;
}

void save_cache(const PreparedData& data, const fs::path& dir) {
  fs::create_directories(dir);
  write_news(data.split.news_index, dir / "news.bin");
  write_impressions(data.split.train, dir / "train.bin");
  write_impressions(data.split.validation, dir / "val.bin");
  write_impressions(data.split.test, dir / "test.bin");
  write_lines(data.tables.words.tokens(), dir / "vocab.tsv");
  write_lines(data.tables.entities.tokens(), dir / "entities.tsv");
  write_lines(data.users.users, dir / "users.tsv");
  json meta = {
      {"format_version", kCacheFormatVersion},
      {"source", data.source},
      {"n_news", data.split.news_index.size()},
      {"n_train", data.split.train.size()},
      {"n_val", data.split.validation.size()},
      {"n_test", data.split.test.size()},
      {"n_users", data.users.n_users},
      {"categories", data.tables.categories.labels()},
      {"subcategories", data.tables.subcategories.labels()},
  };
  // meta.json goes last: its presence marks a complete cache.
  std::ofstream out(dir / "meta.json", std::ios::binary);
  out << meta.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + (dir / "meta.json").string());
}

bool cache_exists(const fs::path& dir) { return fs::exists(dir / "meta.json"); }

PreparedData load_cache(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  std::ifstream in(meta_path);
  if (!in) throw DataError("no prepared data at " + dir.string() + " (missing meta.json)");
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("corrupt " + meta_path.string() + ": " + e.what());
  }
  const int version = meta.value("format_version", -1);
  if (version != kCacheFormatVersion) {
    throw DataError("cache format version mismatch in " + meta_path.string() + ": found " +
                    std::to_string(version) + ", expected " +
                    std::to_string(kCacheFormatVersion));
  }
  PreparedData data;
  data.source = meta.value("source", "");
  data.tables.words = vocabulary_from(read_lines(dir / "vocab.tsv"), dir / "vocab.tsv");
  data.tables.entities = vocabulary_from(read_lines(dir / "entities.tsv"), dir / "entities.tsv");
  for (const auto& c : meta.at("categories")) data.tables.categories.add(c.get<std::string>());
  for (const auto& c : meta.at("subcategories")) data.tables.subcategories.add(c.get<std::string>());
  data.split.news_index = read_news(dir / "news.bin");
  data.split.train = read_impressions(dir / "train.bin");
  data.split.validation = read_impressions(dir / "val.bin");
  data.split.test = read_impressions(dir / "test.bin");
  data.users.users = read_lines(dir / "users.tsv");
  data.users.n_users = meta.at("n_users").get<std::size_t>();
  data.users.cold_id = static_cast<std::int64_t>(data.users.n_users);
  if (data.users.users.size() != data.users.n_users) {
    throw DataError("users.tsv does not match n_users in " + meta_path.string());
  }
  return data;
}

}  // namespace newsrec::data
