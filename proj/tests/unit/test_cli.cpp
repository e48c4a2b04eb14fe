#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "newsrec/cli/cli.hpp"
#include "test_support.hpp"

using newsrec::testing::golden;
using newsrec::testing::read_file;
using newsrec::testing::TempDir;
using newsrec::testing::write_file;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "newsrec");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = newsrec::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const std::vector<std::string> kTiny = {
    "name=clitiny",
    "data.synthetic.n_users=20",
    "data.synthetic.n_news=60",
    "data.synthetic.vocab_size=200",
    "data.synthetic.impressions_per_user=3",
    "data.synthetic.history_length=3",
    "data.synthetic.candidates_per_impression=5",
    "model.news_encoder.d_model=8",
    "model.news_encoder.word_dim=8",
    "model.news_encoder.heads=2",
    "model.news_encoder.attention_dim=4",
    "model.user_model.heads=2",
    "model.user_model.attention_dim=4",
    "train.epochs=1",
    "train.learning_rate=0.001",
};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

std::size_t count_files(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

}  // namespace

TEST(Cli, InspectConfigWritesNothing) {
  TempDir tmp("cli_inspect");
  write_file(tmp / "main.cfg", "name = \"shown\"\n[train]\nepochs = 7\n");
  const auto r = cli({"inspect-config", "-c", (tmp / "main.cfg").string(), "train.batch_size=8"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("epochs = 7"), std::string::npos);
  EXPECT_NE(r.out.find("batch_size = 8"), std::string::npos);
  EXPECT_NE(r.out.find("name = \"shown\""), std::string::npos);
  EXPECT_EQ(count_files(tmp.path()), 1u);
}

TEST(Cli, UnknownFlagExitsTwo) {
  const auto r = cli({"train", "--no-such-flag"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
}

TEST(Cli, BadOverrideExitsOne) {
  const auto r = cli({"inspect-config", "train.epochz=3"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("train.epochs"), std::string::npos) << r.err;
}

TEST(Cli, EvaluateMissingCheckpointNamesPath) {
  TempDir tmp("cli_eval");
  const auto ckpt = (tmp / "absent.ckpt").string();
  const auto r = cli(with({"evaluate", "--out", tmp.path().string(), "--checkpoint", ckpt}, kTiny));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(ckpt), std::string::npos) << r.err;
}

TEST(Cli, TrainTwiceGivesIdenticalLogs) {
  TempDir a("cli_train_a"), b("cli_train_b");
  const auto ra = cli(with({"train", "--out", a.path().string()}, kTiny));
  ASSERT_EQ(ra.code, 0) << ra.err;
  const auto rb = cli(with({"train", "--out", b.path().string()}, kTiny));
  ASSERT_EQ(rb.code, 0) << rb.err;
  fs::path run;
  for (const auto& e : fs::directory_iterator(a.path()))
    if (e.path().filename().string().rfind("clitiny_", 0) == 0) run = e.path().filename();
  ASSERT_FALSE(run.empty());
  EXPECT_EQ(read_file(a / run / "metrics.jsonl"), read_file(b / run / "metrics.jsonl"));
  EXPECT_NE(ra.out.find("best epoch"), std::string::npos) << ra.out;

  // evaluate picks up the best checkpoint of the same run
  const auto ev = cli(with({"evaluate", "--out", a.path().string()}, kTiny));
  EXPECT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("auc"), std::string::npos);
}

TEST(Cli, SyntheticAndSeedShortcuts) {
  TempDir tmp("cli_synth");
  write_file(tmp / "spec.json", "{\"n_users\": 33, \"click_noise\": 0.2}");
  write_file(tmp / "list.json", "[1]");
  const auto r =
      cli({"inspect-config", "--synthetic", (tmp / "spec.json").string(), "--seed", "9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("n_users = 33"), std::string::npos);
  EXPECT_NE(r.out.find("click_noise = 0.2"), std::string::npos);
  EXPECT_NE(r.out.find("seed = 9"), std::string::npos);
  EXPECT_EQ(cli({"inspect-config", "--synthetic", (tmp / "list.json").string()}).code, 1);
  EXPECT_EQ(cli({"inspect-config", "--synthetic", (tmp / "none.json").string()}).code, 1);
}

TEST(Cli, PrepareDataIsCached) {
  TempDir tmp("cli_prep");
  const auto first = cli(with({"prepare-data", "--out", tmp.path().string()}, kTiny));
  ASSERT_EQ(first.code, 0) << first.err;
  const auto second = cli(with({"prepare-data", "--out", tmp.path().string()}, kTiny));
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_NE(first.out, second.out);
}

TEST(Cli, HelpMatchesGoldenSnapshots) {
  const bool update = std::getenv("NEWSREC_UPDATE_GOLDEN") != nullptr;
  for (const std::string sub : {"", "prepare-data", "train", "evaluate", "hpo", "inspect-config"}) {
    std::vector<std::string> args;
    if (!sub.empty()) args.push_back(sub);
    args.push_back("--help");
    const auto r = cli(args);
    EXPECT_EQ(r.code, 0);
    const auto file = golden("help_" + (sub.empty() ? std::string("main") : sub) + ".txt");
    if (update) write_file(file, r.out);
    EXPECT_EQ(r.out, read_file(file)) << sub;
  }
}
