#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fanns/bench.hpp"
#include "fanns/gls.hpp"
#include "test_util.hpp"

using namespace fanns;

namespace {

struct Outcome {
  int code = -1;
  std::string err;
  std::string out;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli(const testutil::TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(FANNS_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.err = slurp(err);
  o.out = slurp(out);
  return o;
}

std::string p(const testutil::TempDir& dir, const char* name) { return (dir / name).string(); }

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, GenIsByteIdenticalAcrossRuns) {
  testutil::TempDir dir;
  ASSERT_EQ(cli(dir, "gen --n 100 --d 4 --seed 7 --out " + p(dir, "a.fvc")).code, 0);
  ASSERT_EQ(cli(dir, "gen --n 100 --d 4 --seed 7 --out " + p(dir, "b.fvc")).code, 0);
  EXPECT_EQ(slurp(dir / "a.fvc"), slurp(dir / "b.fvc"));
  EXPECT_EQ(load_corpus(dir / "a.fvc"), generate_synthetic({100, 4, 7}));
}

TEST(Cli, GenAttributeCsvAndModes) {
  testutil::TempDir dir;
  ASSERT_EQ(cli(dir, "gen --n 50 --d 3 --seed 1 --attr-mode cluster_correlated --strength 0.5 --metric l2 "
                     "--out " + p(dir, "c.fvc") + " --attributes-csv " + p(dir, "c.csv")).code,
            0);
  const Corpus c = load_corpus(dir / "c.fvc");
  EXPECT_EQ(c.metric(), Metric::kL2);
  const std::string csv = slurp(dir / "c.csv");
  EXPECT_EQ(csv.rfind("id,attribute\n", 0), 0u);
  EXPECT_EQ(line_count(csv), 51u);
}

TEST(Cli, FullPipeline) {
  testutil::TempDir dir;
  const std::string corpus = p(dir, "c.fvc");
  ASSERT_EQ(cli(dir, "gen --n 2000 --d 8 --seed 3 --out " + corpus).code, 0);
  ASSERT_EQ(cli(dir, "build --corpus " + corpus + " --index hnsw --M 8 --ef-construction 32 --out " + p(dir, "h.idx")).code, 0);
  ASSERT_EQ(cli(dir, "build --corpus " + corpus + " --index ivfflat --n-clusters 20 --out " + p(dir, "i.idx")).code, 0);
  const std::string grid = " --n-queries 3 --targets 0.1 0.5 --ks 1 10";
  ASSERT_EQ(cli(dir, "gt --corpus " + corpus + grid + " --out " + p(dir, "gt.fgt")).code, 0);
  const std::string before = slurp(dir / "c.fvc");
  const Outcome run = cli(dir, "run --corpus " + corpus + " --index-files " + p(dir, "h.idx") + " " + p(dir, "i.idx") +
                                   grid + " --strategies PreAnns PreAnns:dual AdaptiveAuto --ef-search 16 64" +
                                   " --n-probe 2 --gt " + p(dir, "gt.fgt") + " --dataset unit --out " + p(dir, "r.csv"));
  ASSERT_EQ(run.code, 0) << run.err;
  EXPECT_NE(run.err.find("skipped"), std::string::npos);
  const auto rows = read_results_csv(dir / "r.csv");
  // 3 queries x 3 filters x 2 ks per cell; HNSW 2 x 3 cells, IVF 1 x 2 cells.
  EXPECT_EQ(rows.size(), 18u * (6 + 2));
  for (const auto& r : rows) EXPECT_EQ(r.dataset, "unit");
  ASSERT_EQ(cli(dir, "summarize --results " + p(dir, "r.csv") + " --out " + p(dir, "s.csv")).code, 0);
  const std::string summary = slurp(dir / "s.csv");
  EXPECT_EQ(summary.substr(0, kSummaryHeader.size()), kSummaryHeader);
  EXPECT_EQ(line_count(summary), 1u + 8u * 3 * 2);
  EXPECT_EQ(slurp(dir / "c.fvc"), before);
}

TEST(Cli, RunOneQueryGivesOneRowPerCell) {
  testutil::TempDir dir;
  const std::string corpus = p(dir, "c.fvc");
  ASSERT_EQ(cli(dir, "gen --n 500 --d 4 --seed 3 --out " + corpus).code, 0);
  {
    std::ofstream(dir / "run.json") << R"({"workload": {"n_queries": 1, "targets": [0.2], "ks": [5],
      "include_unfiltered": false}, "ivf": [{"n_clusters": 8}], "n_probe": [2],
      "strategies": ["PreExact"]})";
  }
  const Outcome o = cli(dir, "run --corpus " + corpus + " --config " + p(dir, "run.json") + " --out " + p(dir, "r.csv"));
  ASSERT_EQ(o.code, 0) << o.err;
  const std::string csv = slurp(dir / "r.csv");
  EXPECT_EQ(line_count(csv), 2u);
  EXPECT_EQ(csv.substr(0, kResultsHeader.size()), kResultsHeader);
}

TEST(Cli, FlagsOverrideConfig) {
  testutil::TempDir dir;
  const std::string corpus = p(dir, "c.fvc");
  ASSERT_EQ(cli(dir, "gen --n 500 --d 4 --seed 3 --out " + corpus).code, 0);
  {
    std::ofstream(dir / "run.json") << R"({"workload": {"n_queries": 7, "targets": [0.2], "ks": [5]},
      "ivf": [{"n_clusters": 8}], "n_probe": [2], "strategies": ["PreExact"]})";
  }
  ASSERT_EQ(cli(dir, "run --corpus " + corpus + " --config " + p(dir, "run.json") +
                         " --n-queries 2 --no-unfiltered --strategies Post --out " + p(dir, "r.csv")).code,
            0);
  const auto rows = read_results_csv(dir / "r.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].strategy, "Post");
}

TEST(Cli, GlsExactAndApprox) {
  testutil::TempDir dir;
  const std::string corpus = p(dir, "c.fvc");
  ASSERT_EQ(cli(dir, "gen --n 1000 --d 8 --seed 3 --out " + corpus).code, 0);
  const Outcome exact = cli(dir, "gls --corpus " + corpus + " --n-queries 10 --targets 0.2 0.5 --k-neighborhood 100 --out " +
                                     p(dir, "g.csv"));
  ASSERT_EQ(exact.code, 0) << exact.err;
  EXPECT_EQ(exact.out.rfind("rho_bar ", 0), 0u);
  const std::string csv = slurp(dir / "g.csv");
  EXPECT_EQ(csv.rfind("query_id,sigma_g,sigma_l,ratio,rho,bin\n", 0), 0u);
  EXPECT_EQ(line_count(csv), 21u);
  ASSERT_EQ(cli(dir, "build --corpus " + corpus + " --index ivfflat --n-clusters 10 --out " + p(dir, "i.idx")).code, 0);
  const Outcome approx = cli(dir, "gls --corpus " + corpus + " --n-queries 10 --targets 0.5 --k-neighborhood 100 --index " +
                                      p(dir, "i.idx") + " --sample-size 500 --search-param 10 --out " + p(dir, "a.csv"));
  ASSERT_EQ(approx.code, 0) << approx.err;
  EXPECT_EQ(line_count(slurp(dir / "a.csv")), 11u);
}

TEST(Cli, ErrorsHaveDistinctPrefixes) {
  testutil::TempDir dir;
  const Outcome unknown = cli(dir, "gen --n 10 --d 2 --seed 1 --bogus --out " + p(dir, "x"));
  EXPECT_EQ(unknown.code, 2);
  EXPECT_EQ(unknown.err.rfind("usage error:", 0), 0u);

  const Outcome missing = cli(dir, "build --corpus " + p(dir, "none.fvc") + " --index hnsw --out " + p(dir, "h"));
  EXPECT_EQ(missing.code, 3);
  EXPECT_EQ(missing.err.rfind("io error:", 0), 0u);

  { std::ofstream(dir / "junk.fvc") << "not a corpus"; }
  const Outcome bad = cli(dir, "build --corpus " + p(dir, "junk.fvc") + " --index hnsw --out " + p(dir, "h"));
  EXPECT_EQ(bad.code, 4);
  EXPECT_EQ(bad.err.rfind("format error:", 0), 0u);

  ASSERT_EQ(cli(dir, "gen --n 100 --d 2 --seed 1 --out " + p(dir, "c.fvc")).code, 0);
  const Outcome cfg = cli(dir, "run --corpus " + p(dir, "c.fvc") + " --n-queries 2 --strategies Warp --out " + p(dir, "r.csv"));
  EXPECT_EQ(cfg.code, 5);
  EXPECT_EQ(cfg.err.rfind("config error:", 0), 0u);

  const Outcome input = cli(dir, "gen --n 0 --d 2 --seed 1 --out " + p(dir, "z.fvc"));
  EXPECT_EQ(input.code, 6);
  EXPECT_EQ(input.err.rfind("input error:", 0), 0u);

  EXPECT_EQ(cli(dir, "").code, 2);
}

TEST(Cli, RefusesToOverwriteInputs) {
  testutil::TempDir dir;
  ASSERT_EQ(cli(dir, "gen --n 100 --d 2 --seed 1 --out " + p(dir, "c.fvc")).code, 0);
  const std::string before = slurp(dir / "c.fvc");
  const Outcome o = cli(dir, "build --corpus " + p(dir, "c.fvc") + " --index hnsw --M 4 --ef-construction 8 --out " +
                                 p(dir, "c.fvc"));
  EXPECT_EQ(o.code, 2);
  EXPECT_EQ(slurp(dir / "c.fvc"), before);
}

TEST(Cli, IvfBuildNeedsClusterCount) {
  testutil::TempDir dir;
  ASSERT_EQ(cli(dir, "gen --n 100 --d 2 --seed 1 --out " + p(dir, "c.fvc")).code, 0);
  const Outcome o = cli(dir, "build --corpus " + p(dir, "c.fvc") + " --index ivfflat --out " + p(dir, "i.idx"));
  EXPECT_EQ(o.code, 2);
  EXPECT_FALSE(std::filesystem::exists(dir / "i.idx"));
}
