#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "minimt/cli.hpp"
#include "minimt/manifest.hpp"
#include "minimt/util.hpp"
#include "support.hpp"

using namespace minimt;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

// Runs the real executable so exit codes and the environment are exercised end to end.
int run_binary(const std::string& args, const std::string& env = "") {
  std::string cmd = env + (env.empty() ? "" : " ") + MINIMT_CLI + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Workspace {
  TempDir dir;
  fs::path src, tgt;
  Workspace() : src(dir / "in.en"), tgt(dir / "in.de") {
    write_text(src, "The house is small.\nThe book is old.\nA man reads.\nThe man reads the book.\nA small house.\n");
    write_text(tgt, "das haus ist klein .\ndas buch ist alt .\nein mann liest .\nder mann liest das buch .\nein kleines haus .\n");
  }
  std::string p(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(cli::run({}), cli::kUsage);
  EXPECT_EQ(cli::run({"frobnicate"}), cli::kUsage);
  EXPECT_EQ(cli::run({"preprocess", "--src"}), cli::kUsage);
  EXPECT_EQ(cli::run({"train", "--system", "rbmt", "--corpus", "x", "--out", "y"}), cli::kUsage);
  EXPECT_EQ(cli::run({"--version"}), cli::kSuccess);
  EXPECT_EQ(cli::run({"evaluate", "--help"}), cli::kSuccess);
}

TEST(Cli, DataErrorsExitWithTwo) {
  Workspace w;
  write_text(w.dir / "short.de", "ein .\n");
  EXPECT_EQ(cli::run({"preprocess", "--src", w.src.string(), "--tgt", w.p("short.de"), "--out", w.p("c")}),
            cli::kData);
  EXPECT_EQ(cli::run({"train", "--system", "smt", "--corpus", w.p("nothing"), "--out", w.p("m")}), cli::kData);
  EXPECT_EQ(cli::run({"evaluate", "--ref", w.src.string(), "--hyp", w.p("short.de")}), cli::kData);
}

TEST(Cli, PipelineThroughTheBinary) {
  Workspace w;
  ASSERT_EQ(run_binary("preprocess --src " + w.src.string() + " --tgt " + w.tgt.string() + " --out " + w.p("c") +
                       " --src-lang en --tgt-lang de"),
            0);
  // second run without --force must not clobber
  EXPECT_EQ(run_binary("preprocess --src " + w.src.string() + " --tgt " + w.tgt.string() + " --out " + w.p("c")), 1);
  EXPECT_EQ(run_binary("preprocess --force --src " + w.src.string() + " --tgt " + w.tgt.string() + " --out " +
                       w.p("c") + " --src-lang en --tgt-lang de"),
            0);
  EXPECT_EQ(run_binary("extract-simple --corpus " + w.p("c") + " --out " + w.p("s")), 1);  // no chunks
  ASSERT_EQ(run_binary("train --system smt --corpus " + w.p("c") + " --out " + w.p("smt")), 0);
  ASSERT_EQ(run_binary("translate --model " + w.p("smt") + " --input " + w.p("c") + " --output " + w.p("hyp")), 0);
  EXPECT_EQ(read_lines(w.dir / "hyp").size(), 5u);
  EXPECT_EQ(run_binary("evaluate --ref " + w.p("c/corpus.tgt") + " --hyp " + w.p("hyp") + " --out " + w.p("r.json")),
            0);
  EXPECT_EQ(run_binary("evaluate --metrics bleu,meteor --ref " + w.p("hyp") + " --hyp " + w.p("hyp")), 1);
  // single-system compare is a partial report
  EXPECT_EQ(run_binary("compare --whole " + w.p("c") + " --systems SMT --out " + w.p("cmp")), 3);
  EXPECT_EQ(run_binary("compare --render-only --out " + w.p("cmp")), 3);
  EXPECT_TRUE(fs::exists(w.dir / "cmp" / "compare.json"));
}

TEST(Cli, NmtDefaultsAreRecordedInTheManifest) {
  Workspace w;
  ASSERT_EQ(cli::run({"preprocess", "--src", w.src.string(), "--tgt", w.tgt.string(), "--out", w.p("c")}), 0);
  ASSERT_EQ(cli::run({"train", "--system", "nmt-word", "--corpus", w.p("c"), "--out", w.p("w"), "--epochs", "1",
                      "--hidden", "4", "--embed", "2"}),
            0);
  auto m = RunManifest::load(w.dir / "w" / "manifest.json");
  const auto& nmt = m["config"]["nmt"];
  EXPECT_EQ(nmt["batch_size"], 256);
  EXPECT_EQ(nmt["lr"], 0.001);
  EXPECT_EQ(nmt["optimizer"], "rmsprop");
  EXPECT_EQ(nmt["epochs"], 1);
  EXPECT_EQ(nmt["attention"], true);
  ASSERT_EQ(cli::run({"train", "--system", "nmt-char", "--corpus", w.p("c"), "--out", w.p("ch"), "--epochs", "1",
                      "--hidden", "4"}),
            0);
  auto mc = RunManifest::load(w.dir / "ch" / "manifest.json");
  EXPECT_EQ(mc["config"]["nmt"]["batch_size"], 64);
  EXPECT_EQ(mc["config"]["nmt"]["attention"], false);
}

TEST(Cli, SeedPrecedence) {
  Workspace w;
  std::string lines;
  for (int i = 0; i < 30; ++i) lines += "s" + std::to_string(i) + "\n";
  write_text(w.dir / "src", lines);
  write_text(w.dir / "hyp", lines);
  auto sheet = [&](const std::string& out, const std::string& extra, const std::string& env = "") {
    EXPECT_EQ(run_binary("rate-sheet --src " + w.p("src") + " --hyp " + w.p("hyp") + " --out " + w.p(out) + " " + extra,
                         env),
              0);
    return read_file(w.dir / out);
  };
  auto flag5 = sheet("a.csv", "--seed 5");
  auto flag6 = sheet("b.csv", "--seed 6");
  EXPECT_NE(flag5, flag6);
  EXPECT_EQ(sheet("c.csv", "", "MINIMT_SEED=5"), flag5);
  EXPECT_EQ(sheet("d.csv", "--seed 6", "MINIMT_SEED=5"), flag6);
  write_text(w.dir / "cfg.ini", "seed=5\n");
  EXPECT_EQ(sheet("e.csv", "--config " + w.p("cfg.ini")), flag5);
  EXPECT_EQ(sheet("f.csv", "--config " + w.p("cfg.ini") + " --seed 6"), flag6);
  // same seed, same bytes
  EXPECT_EQ(sheet("g.csv", "--seed 5"), flag5);
  write_text(w.dir / "bad.ini", "# comment\nbogus = 1\n");
  EXPECT_EQ(cli::run({"rate-sheet", "--src", w.p("src"), "--hyp", w.p("hyp"), "--out", w.p("h.csv"), "--config",
                      w.p("bad.ini")}),
            cli::kUsage);
  write_text(w.dir / "noeq.ini", "seed 5\n");
  EXPECT_EQ(cli::run({"rate-sheet", "--src", w.p("src"), "--hyp", w.p("hyp"), "--out", w.p("h.csv"), "--config",
                      w.p("noeq.ini")}),
            cli::kUsage);
}

TEST(Cli, RatingRoundTrip) {
  Workspace w;
  write_text(w.dir / "r1.csv", "sentence_id,adequacy,fluency\n1,2,3\n");
  write_text(w.dir / "r2.csv", "sentence_id,adequacy,fluency\n1,4,5\n");
  EXPECT_EQ(cli::run({"rate-aggregate", "--sheets", w.p("r1.csv"), w.p("r2.csv"), "--out", w.p("agg.json")}), 0);
  auto j = nlohmann::json::parse(read_file(w.dir / "agg.json"));
  EXPECT_DOUBLE_EQ(j["avg_adequacy"].get<double>(), 3.0);
  write_text(w.dir / "bad.csv", "sentence_id,adequacy,fluency\n1,6,5\n");
  EXPECT_EQ(cli::run({"rate-aggregate", "--sheets", w.p("bad.csv")}), cli::kData);
}
