#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace newsrec::synth {

struct SynthSpec {
  int n_users = 200;
  int n_news = 1000;
  int n_topics = 5;
  int vocab_size = 2000;
  int tokens_per_title = 8;
  double affinity_concentration = 0.05;
  double click_noise = 0.0;
  double sentiment_skew = 0.0;
  std::uint64_t seed = 7;
  // Behaviour log shape.
  int impressions_per_user = 10;
  int history_length = 10;
  int candidates_per_impression = 20;
  double dev_fraction = 0.2;
};

// Throws DataError on an invalid spec; returns warnings for legal but
// questionable settings.
std::vector<std::string> validate(const SynthSpec& spec);

struct SynthFiles {
  std::filesystem::path train_dir;  // news.tsv, behaviors.tsv
  std::filesystem::path dev_dir;    // news.tsv, behaviors.tsv
  std::filesystem::path lexicon;    // token \t valence
  std::vector<std::string> warnings;
};

// Topic t owns tokens [t*B, (t+1)*B) with B = vocab_size / n_topics. Titles
// carry tokens_per_title topic tokens and, for polar items, one sentiment
// word. Users draw topic preferences p ~ Dirichlet(concentration); a shown
// candidate of topic t is clicked with probability p[t] / max(p), and the
// label is flipped with probability click_noise. Impressions are timestamped
// and the latest dev_fraction goes to dev/.
SynthFiles generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

// Fraction of clicked candidates whose category equals the most frequent
// category in that user's history, read back from the written files.
double click_topic_agreement(const std::filesystem::path& news_tsv,
                             const std::filesystem::path& behaviors_tsv);

}  // namespace newsrec::synth
