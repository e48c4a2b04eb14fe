#include "newsrec/data/prepare.hpp"

#include <algorithm>

#include "newsrec/common/error.hpp"
#include "newsrec/data/adressa.hpp"
#include "newsrec/data/mind.hpp"
#include "newsrec/data/split.hpp"

namespace newsrec::data {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kMaxMessages = 10;

void note_errors(const std::vector<RowError>& errors, const fs::path& file, PrepareReport& r) {
  for (const RowError& e : errors) {
    if (r.messages.size() >= kMaxMessages) break;
    r.messages.push_back(file.string() + ":" + std::to_string(e.line) + ": " + e.message);
  }
}

// Drops references to unknown news, truncates history, and removes
// impressions that can no longer be scored. Training impressions must keep a
// positive; evaluation impressions keep whatever candidates remain.
void clean(std::vector<Impression>& imps, const NewsIndex& index, std::size_t max_history,
           bool require_positive, PrepareReport& r) {
  std::vector<Impression> kept;
  kept.reserve(imps.size());
  for (Impression& imp : imps) {
    const auto known = [&](const std::string& id) { return index.find(id) != nullptr; };
    const std::size_t h0 = imp.history.size(), c0 = imp.candidates.size();
    std::erase_if(imp.history, [&](const std::string& id) { return !known(id); });
    std::erase_if(imp.candidates, [&](const Candidate& c) { return !known(c.news_id); });
    r.dropped_references += (h0 - imp.history.size()) + (c0 - imp.candidates.size());
    truncate_history(imp, max_history);
    if (imp.candidates.empty() || (require_positive && imp.positives() == 0)) {
      ++r.dropped_impressions;
      continue;
    }
    kept.push_back(std::move(imp));
  }
  imps = std::move(kept);
}

Lexicon maybe_lexicon(const PrepareOptions& options) {
  return options.lexicon.empty() ? Lexicon{} : load_lexicon(options.lexicon);
}

}  // namespace

PreparedData prepare_mind(const fs::path& train_dir, const fs::path& dev_dir,
                          const PrepareOptions& options, PrepareReport* report) {
  PrepareReport local;
  PrepareReport& r = report ? *report : local;
  const Lexicon lexicon = maybe_lexicon(options);
  NewsParseOptions news_opts;
  news_opts.max_title_len = options.max_title_len;
  news_opts.max_abstract_len = options.max_abstract_len;
  news_opts.lexicon = lexicon.empty() ? nullptr : &lexicon;

  PreparedData data;
  data.source = "mind:" + train_dir.string() + "|" + dev_dir.string();
  for (const fs::path& dir : {train_dir, dev_dir}) {
    const fs::path file = dir / "news.tsv";
    auto parsed = parse_mind_news(file, data.tables, news_opts);
    r.news_row_errors += parsed.errors.size();
    note_errors(parsed.errors, file, r);
    for (NewsItem& item : parsed.items) data.split.news_index.add(std::move(item));
  }

  const fs::path train_file = train_dir / "behaviors.tsv";
  auto train = parse_mind_behaviors(train_file);
  r.behavior_row_errors += train.errors.size();
  note_errors(train.errors, train_file, r);
  const fs::path dev_file = dev_dir / "behaviors.tsv";
  auto dev = parse_mind_behaviors(dev_file);
  r.behavior_row_errors += dev.errors.size();
  note_errors(dev.errors, dev_file, r);

  clean(train.impressions, data.split.news_index, options.max_history, true, r);
  clean(dev.impressions, data.split.news_index, options.max_history, false, r);
  if (dev.impressions.empty()) throw DataError("no usable impressions in " + dev_file.string());

  DatasetSplit split = temporal_split(std::move(train.impressions), options.val_fraction);
  data.split.train = std::move(split.train);
  data.split.validation = std::move(split.validation);
  data.split.test = std::move(dev.impressions);
  data.users = assign_user_ids(data.split);
  return data;
}

PreparedData prepare_adressa(const fs::path& events, const PrepareOptions& options,
                             PrepareReport* report) {
  PrepareReport local;
  PrepareReport& r = report ? *report : local;
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw DataError("test_fraction must lie in (0, 1)");
  }
  const Lexicon lexicon = maybe_lexicon(options);
  NewsParseOptions news_opts;
  news_opts.max_title_len = options.max_title_len;
  news_opts.max_abstract_len = options.max_abstract_len;
  news_opts.lexicon = lexicon.empty() ? nullptr : &lexicon;

  PreparedData data;
  data.source = "adressa:" + events.string();
  auto parsed = parse_adressa_events(events, data.tables, news_opts);
  r.behavior_row_errors += parsed.errors.size();
  note_errors(parsed.errors, events, r);
  for (NewsItem& item : parsed.news) data.split.news_index.add(std::move(item));
  std::erase_if(parsed.events, [&](const ClickEvent& e) {
    const bool unknown = data.split.news_index.find(e.news_id) == nullptr;
    r.dropped_references += unknown;
    return unknown;
  });

  auto imps = build_adressa_impressions(parsed.events, data.split.news_index,
                                        options.adressa_negatives, options.seed);
  for (Impression& imp : imps) truncate_history(imp, options.max_history);
  DatasetSplit outer = temporal_split(std::move(imps), options.test_fraction);
  DatasetSplit inner = temporal_split(std::move(outer.train), options.val_fraction);
  data.split.train = std::move(inner.train);
  data.split.validation = std::move(inner.validation);
  data.split.test = std::move(outer.validation);
  data.users = assign_user_ids(data.split);
  return data;
}

}  // namespace newsrec::data
