#include "newsrec/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include "newsrec/common/error.hpp"
#include "newsrec/data/mind.hpp"

namespace newsrec::synth {
namespace {

namespace fs = std::filesystem;

constexpr int kSentimentWords = 10;
constexpr double kSentimentValence = 4.0;
constexpr int kSentimentWordsPerTitle = 6;
constexpr double kNeutralShare = 0.2;
constexpr int kSubcategoriesPerTopic = 3;
constexpr int kEntitiesPerTopic = 20;
constexpr std::int64_t kEpochStart = 1573430400;  // 2019-11-11 00:00:00 UTC
constexpr std::int64_t kTimelineSeconds = 14 * 24 * 3600;
constexpr int kMaxResample = 10000;

struct News {
  std::string id;
  int topic = 0;
  int subtopic = 0;
  int entity = 0;
  std::string title;
  std::string abstract;
};

struct Row {
  std::int64_t ts = 0;
  int user = 0;
  std::vector<std::pair<int, int>> candidates;  // (news index, label)
};

std::vector<double> dirichlet(double alpha, int k, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(static_cast<std::size_t>(k));
  for (double& v : p) v = gamma(rng);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    // Every draw underflowed: the limit of a vanishing concentration.
    std::uniform_int_distribution<int> pick(0, k - 1);
    std::fill(p.begin(), p.end(), 0.0);
    p[static_cast<std::size_t>(pick(rng))] = 1.0;
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

std::string words(int topic, int block, int count, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> tok(0, block - 1);
  std::string out;
  for (int i = 0; i < count; ++i) {
    if (i) out += ' ';
    out += 'w' + std::to_string(topic * block + tok(rng));
  }
  return out;
}

void write_news(const std::vector<News>& news, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const News& n : news) {
    const std::string entity = "[{\"Label\": \"E" + std::to_string(n.entity) +
                               "\", \"Type\": \"O\", \"WikidataId\": \"Q" +
                               std::to_string(n.entity) +
                               "\", \"Confidence\": 1.0, \"OccurrenceOffsets\": [0], "
                               "\"SurfaceForms\": [\"e\"]}]";
    out << n.id << "\ttopic" << n.topic << "\ttopic" << n.topic << "_" << n.subtopic << '\t'
        << n.title << '\t' << n.abstract << "\thttps://example.invalid/" << n.id << '\t'
        << entity << "\t[]\n";
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_behaviors(const std::vector<Row>& rows, std::size_t begin, std::size_t end,
                     const std::vector<News>& news,
                     const std::vector<std::vector<int>>& histories, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = begin; i < end; ++i) {
    const Row& r = rows[i];
    out << (i + 1) << "\tU" << r.user << '\t' << data::format_mind_time(r.ts) << '\t';
    const auto& h = histories[static_cast<std::size_t>(r.user)];
    for (std::size_t j = 0; j < h.size(); ++j) {
      out << (j ? " " : "") << news[static_cast<std::size_t>(h[j])].id;
    }
    out << '\t';
    for (std::size_t j = 0; j < r.candidates.size(); ++j) {
      out << (j ? " " : "") << news[static_cast<std::size_t>(r.candidates[j].first)].id << '-'
          << r.candidates[j].second;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

std::vector<std::string> validate(const SynthSpec& s) {
  auto fail = [](const std::string& m) { throw DataError("invalid synthetic spec: " + m); };
  if (s.n_users < 1) fail("n_users must be >= 1");
  if (s.n_topics < 1) fail("n_topics must be >= 1");
  if (s.n_topics > s.n_news) fail("n_topics must not exceed n_news");
  if (s.vocab_size < s.n_topics) fail("vocab_size must be >= n_topics");
  if (s.tokens_per_title < 1) fail("tokens_per_title must be >= 1");
  if (!(s.affinity_concentration > 0.0)) fail("affinity_concentration must be > 0");
  if (!(s.click_noise >= 0.0 && s.click_noise <= 1.0)) fail("click_noise must lie in [0, 1]");
  if (!(s.sentiment_skew >= -1.0 && s.sentiment_skew <= 1.0)) {
    fail("sentiment_skew must lie in [-1, 1]");
  }
  if (s.impressions_per_user < 1) fail("impressions_per_user must be >= 1");
  if (s.history_length < 0) fail("history_length must be >= 0");
  if (s.candidates_per_impression < 2 || s.candidates_per_impression > s.n_news) {
    fail("candidates_per_impression must lie in [2, n_news]");
  }
  if (!(s.dev_fraction > 0.0 && s.dev_fraction < 1.0)) fail("dev_fraction must lie in (0, 1)");
  std::vector<std::string> warnings;
  if (s.vocab_size <= s.n_topics * s.tokens_per_title) {
    warnings.push_back("vocab_size <= n_topics * tokens_per_title: topic blocks are tiny");
  }
  return warnings;
}

SynthFiles generate(const SynthSpec& spec, const fs::path& out_dir) {
  SynthFiles files;
  files.warnings = validate(spec);
  std::mt19937_64 rng(spec.seed);
  const int block = spec.vocab_size / spec.n_topics;

  // Corpus: balanced topics in shuffled order.
  std::vector<int> topics(static_cast<std::size_t>(spec.n_news));
  for (int i = 0; i < spec.n_news; ++i) topics[static_cast<std::size_t>(i)] = i % spec.n_topics;
  std::shuffle(topics.begin(), topics.end(), rng);
  const double p_positive = (1.0 + spec.sentiment_skew) / 2.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> sent_word(0, kSentimentWords - 1);
  std::uniform_int_distribution<int> sub(0, kSubcategoriesPerTopic - 1);
  std::uniform_int_distribution<int> ent(0, kEntitiesPerTopic - 1);
  std::vector<News> news(static_cast<std::size_t>(spec.n_news));
  std::vector<std::vector<int>> by_topic(static_cast<std::size_t>(spec.n_topics));
  for (int i = 0; i < spec.n_news; ++i) {
    News& n = news[static_cast<std::size_t>(i)];
    n.id = "N" + std::to_string(i + 1);
    n.topic = topics[static_cast<std::size_t>(i)];
    n.subtopic = sub(rng);
    n.entity = n.topic * kEntitiesPerTopic + ent(rng);
    n.title = words(n.topic, block, spec.tokens_per_title, rng);
    if (unit(rng) >= kNeutralShare) {
      const char* polarity = unit(rng) < p_positive ? " pos" : " neg";
      for (int w = 0; w < kSentimentWordsPerTitle; ++w) {
        n.title += polarity + std::to_string(sent_word(rng));
      }
    }
    n.abstract = words(n.topic, block, spec.tokens_per_title, rng);
    by_topic[static_cast<std::size_t>(n.topic)].push_back(i);
  }

  // Users: preference vector and a fixed click history drawn from it.
  std::vector<std::vector<double>> prefs;
  std::vector<std::vector<int>> histories;
  for (int u = 0; u < spec.n_users; ++u) {
    prefs.push_back(dirichlet(spec.affinity_concentration, spec.n_topics, rng));
    std::discrete_distribution<int> topic_of(prefs.back().begin(), prefs.back().end());
    std::vector<int> h;
    for (int j = 0; j < spec.history_length; ++j) {
      const auto& pool = by_topic[static_cast<std::size_t>(topic_of(rng))];
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      h.push_back(pool[pick(rng)]);
    }
    histories.push_back(std::move(h));
  }

  // Impressions.
  std::vector<Row> rows;
  std::uniform_int_distribution<std::int64_t> when(0, kTimelineSeconds - 1);
  std::vector<int> all(static_cast<std::size_t>(spec.n_news));
  std::iota(all.begin(), all.end(), 0);
  for (int u = 0; u < spec.n_users; ++u) {
    const auto& p = prefs[static_cast<std::size_t>(u)];
    const double pmax = *std::max_element(p.begin(), p.end());
    for (int k = 0; k < spec.impressions_per_user; ++k) {
      Row row;
      row.user = u;
      row.ts = kEpochStart + when(rng);
      for (int attempt = 0;; ++attempt) {
        if (attempt == kMaxResample) {
          throw DataError(
              "synthetic generator could not draw an impression with both clicks and "
              "non-clicks; lower affinity_concentration or raise click_noise");
        }
        row.candidates.clear();
        // Partial Fisher-Yates: uniform sample without replacement.
        for (int c = 0; c < spec.candidates_per_impression; ++c) {
          std::uniform_int_distribution<int> pick(c, spec.n_news - 1);
          std::swap(all[static_cast<std::size_t>(c)], all[static_cast<std::size_t>(pick(rng))]);
          const int idx = all[static_cast<std::size_t>(c)];
          const double click = p[static_cast<std::size_t>(news[static_cast<std::size_t>(idx)].topic)] / pmax;
          int label = unit(rng) < click ? 1 : 0;
          if (unit(rng) < spec.click_noise) label = 1 - label;
          row.candidates.emplace_back(idx, label);
        }
        const auto pos = std::count_if(row.candidates.begin(), row.candidates.end(),
                                       [](const auto& c) { return c.second == 1; });
        if (pos > 0 && pos < static_cast<long>(row.candidates.size())) break;
      }
      rows.push_back(std::move(row));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
  const auto n_dev = static_cast<std::size_t>(
      std::ceil(spec.dev_fraction * static_cast<double>(rows.size())));
  const std::size_t n_train = rows.size() - std::min(n_dev, rows.size() - 1);

  files.train_dir = out_dir / "train";
  files.dev_dir = out_dir / "dev";
  files.lexicon = out_dir / "lexicon.tsv";
  fs::create_directories(files.train_dir);
  fs::create_directories(files.dev_dir);
  write_news(news, files.train_dir / "news.tsv");
  write_news(news, files.dev_dir / "news.tsv");
  write_behaviors(rows, 0, n_train, news, histories, files.train_dir / "behaviors.tsv");
  write_behaviors(rows, n_train, rows.size(), news, histories, files.dev_dir / "behaviors.tsv");
  std::ofstream lex(files.lexicon, std::ios::binary);
  for (int i = 0; i < kSentimentWords; ++i) {
    lex << "pos" << i << '\t' << kSentimentValence << '\n';
    lex << "neg" << i << '\t' << -kSentimentValence << '\n';
  }
  if (!lex) throw DataError("failed writing " + files.lexicon.string());
  return files;
}

double click_topic_agreement(const fs::path& news_tsv, const fs::path& behaviors_tsv) {
  data::NewsTables tables;
  const auto news = data::parse_mind_news(news_tsv, tables);
  std::unordered_map<std::string, int> category;
  for (const auto& n : news.items) category.emplace(n.news_id, n.category_id);
  const auto behaviors = data::parse_mind_behaviors(behaviors_tsv);
  std::size_t agree = 0, clicks = 0;
  for (const auto& imp : behaviors.impressions) {
    std::map<int, int> counts;
    for (const auto& h : imp.history) ++counts[category.at(h)];
    if (counts.empty()) continue;
    const int preferred =
        std::max_element(counts.begin(), counts.end(),
                         [](const auto& a, const auto& b) { return a.second < b.second; })
            ->first;
    for (const auto& c : imp.candidates) {
      if (c.label != 1) continue;
      ++clicks;
      agree += category.at(c.news_id) == preferred;
    }
  }
  if (clicks == 0) throw DataError("no clicks in " + behaviors_tsv.string());
  return static_cast<double>(agree) / static_cast<double>(clicks);
}

}  // namespace newsrec::synth
