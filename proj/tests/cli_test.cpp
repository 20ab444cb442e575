#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hosdp/cli.hpp"
#include "hosdp/sdp.hpp"

namespace hosdp {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hosdp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string synth(const std::string& name, std::size_t n, std::uint64_t seed) {
    CliRun r = run({"synth", "--out", path(name), "--sentences", std::to_string(n), "--seed",
                 std::to_string(seed), "--no-timestamp"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    return path(name);
  }

  fs::path dir_;
};

std::vector<std::string> tiny_settings() {
  std::vector<std::string> a;
  for (const char* kv : {"word_dim=4", "pos_dim=4", "use_char=false", "use_lemma=false",
                         "lstm_layers=1", "lstm_hidden=6", "mlp_dim=6", "gnn.layers=1",
                         "max_epochs=2", "patience=1", "min_freq=1"}) {
    a.push_back("--set");
    a.push_back(kv);
  }
  return a;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST_F(Cli, EvalOfAFileAgainstItselfIsPerfect) {
  std::string gold = synth("gold.sdp", 12, 3);
  CliRun r = run({"eval", "--gold", gold, "--pred", gold});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("LF1 1.0000  UF1 1.0000", 0), 0u) << r.out;
}

TEST_F(Cli, SynthIsDeterministicWithoutTimestamp) {
  std::string a = synth("a.sdp", 15, 9);
  std::string b = synth("b.sdp", 15, 9);
  EXPECT_EQ(slurp(a), slurp(b));
  std::string c = synth("c.sdp", 15, 10);
  EXPECT_NE(slurp(a), slurp(c));
  EXPECT_EQ(read_sdp_file(a).corpus.size(), 15u);
}

TEST_F(Cli, TimestampHeaderIsACommentLine) {
  ASSERT_EQ(run({"synth", "--out", path("t.sdp"), "--sentences", "3"}).code, kExitOk);
  std::string text = slurp(path("t.sdp"));
  EXPECT_EQ(text.rfind("# generated ", 0), 0u);
  EXPECT_EQ(read_sdp_file(path("t.sdp")).corpus.size(), 3u);
}

TEST_F(Cli, TrainPredictEvalPipeline) {
  std::string train = synth("train.sdp", 20, 1);
  std::string dev = synth("dev.sdp", 6, 2);
  std::vector<std::string> args{"train", "--train", train, "--dev", dev, "--out", path("m.ckpt"),
                                "--quiet", "--no-timestamp", "--variant", "gat", "--layers", "2"};
  auto extra = tiny_settings();
  args.insert(args.end(), extra.begin(), extra.end());
  args.push_back("--set");
  args.push_back("gnn.heads=2");
  CliRun t = run(args);
  ASSERT_EQ(t.code, kExitOk) << t.err;

  std::istringstream metrics(slurp(path("m.ckpt.metrics.tsv")));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(metrics, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].rfind("stage\tepoch\t", 0), 0u);
  EXPECT_EQ(rows[1].rfind("vanilla\t1\t", 0), 0u);
  EXPECT_EQ(rows[4].rfind("hosdp\t2\t", 0), 0u);

  CliRun p = run({"predict", "--model", path("m.ckpt"), "--input", dev, "--out", path("pred.sdp")});
  ASSERT_EQ(p.code, kExitOk) << p.err;
  EXPECT_NE(p.out.find("refining"), std::string::npos);
  Corpus pred = read_sdp_file(path("pred.sdp")).corpus;
  Corpus want = read_sdp_file(dev).corpus;
  ASSERT_EQ(pred.size(), want.size());
  for (std::size_t s = 0; s < pred.size(); ++s)
    EXPECT_EQ(pred.items[s].sentence.tokens.size(), want.items[s].sentence.tokens.size());

  CliRun e = run({"eval", "--gold", dev, "--pred", path("pred.sdp"), "--tsv", "--per-label"});
  EXPECT_EQ(e.code, kExitOk) << e.err;
  CliRun b = run({"buckets", "--gold", dev, "--pred", path("pred.sdp"), "--width", "5"});
  EXPECT_EQ(b.code, kExitOk) << b.err;
  EXPECT_EQ(b.out.rfind("lo\thi\t", 0), 0u);
}

TEST_F(Cli, VanillaOnlyCheckpointPredictsWithFirstOrderParser) {
  std::string train = synth("train.sdp", 10, 1);
  std::vector<std::string> args{"train", "--train", train, "--dev", train, "--out", path("v.ckpt"),
                                "--metrics", path("v.tsv"), "--vanilla-only", "--quiet"};
  auto extra = tiny_settings();
  args.insert(args.end(), extra.begin(), extra.end());
  ASSERT_EQ(run(args).code, kExitOk);
  EXPECT_EQ(slurp(path("v.tsv")).find("hosdp\t"), std::string::npos);
  CliRun p = run({"predict", "--model", path("v.ckpt"), "--input", train, "--out", path("p.sdp")});
  ASSERT_EQ(p.code, kExitOk) << p.err;
  EXPECT_NE(p.out.find("vanilla"), std::string::npos);
}

TEST_F(Cli, MalformedInputExitsWithDataErrorAndLineNumber) {
  std::ofstream(path("bad.sdp")) << "#1\n1\tw\tw\tNN\t+\t+\t_\n2\tonly three\tcols\n\n";
  CliRun r = run({"eval", "--gold", path("bad.sdp"), "--pred", path("bad.sdp")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingFilesAreDataErrors) {
  CliRun r = run({"eval", "--gold", path("none.sdp"), "--pred", path("none.sdp")});
  EXPECT_EQ(r.code, kExitData);
  CliRun m = run({"predict", "--model", path("none.ckpt"), "--input", path("none.sdp"), "--out",
               path("o.sdp")});
  EXPECT_EQ(m.code, kExitData);
}

TEST_F(Cli, MisalignedFilesAreDataErrors) {
  std::string a = synth("a.sdp", 5, 1);
  std::string b = synth("b.sdp", 5, 2);
  CliRun r = run({"eval", "--gold", a, "--pred", b});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("sentence"), std::string::npos) << r.err;
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"eval", "--gold", "x"}).code, kExitUsage);
  EXPECT_EQ(run({"buckets", "--gold", "x", "--pred", "y", "--width", "abc"}).code, kExitUsage);
}

TEST_F(Cli, BadConfigurationIsAUsageError) {
  std::string train = synth("train.sdp", 4, 1);
  auto base = [&] {
    return std::vector<std::string>{"train", "--train", train, "--dev", train, "--out", path("m")};
  };
  auto with = [&](std::vector<std::string> extra) {
    auto a = base();
    a.insert(a.end(), extra.begin(), extra.end());
    return run(a);
  };
  EXPECT_EQ(with({"--lambda", "1.5"}).code, kExitUsage);
  EXPECT_EQ(with({"--variant", "rnn"}).code, kExitUsage);
  EXPECT_EQ(with({"--set", "no_such_key=1"}).code, kExitUsage);
  EXPECT_EQ(with({"--set", "missing_equals"}).code, kExitUsage);
  std::ofstream(path("c.cfg")) << "lstm_hidden = 0\n";
  EXPECT_EQ(with({"--config", path("c.cfg")}).code, kExitUsage);
  EXPECT_FALSE(fs::exists(path("m")));
}

TEST_F(Cli, HelpExitsCleanly) {
  CliRun r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("synth"), std::string::npos);
  EXPECT_NE(r.out.find("buckets"), std::string::npos);
  EXPECT_EQ(run({"train", "--help"}).code, kExitOk);
}

}  // namespace
}  // namespace hosdp
