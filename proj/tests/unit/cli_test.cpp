#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "comprof/tools/cli.hpp"
#include "tools_fixture.hpp"

using namespace comprof;
using namespace testing_helpers;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "comprof");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = tools::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, UnknownFlagIsUsageError) {
  const auto r = run({"train", "--bogus"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE((r.out + r.err).empty());
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
}

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"train", "--help"}).code, 0);
}

TEST(Cli, MissingFileIsRuntimeError) {
  const auto r = run({"rank", "--model", "/nonexistent/m.snap", "-q", "hello"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  EXPECT_NE(r.err.find("/nonexistent/m.snap"), std::string::npos);
}

TEST(Cli, ConfigFileAndEnvironment) {
  const auto& f = model_files();
  const auto dir = temp_dir("cli-config");
  {
    std::ofstream cfg(dir / "comprof.toml");
    cfg << "[train]\niterations = 2\ncommunities = 2\ntopics = 3\nlda-sweeps = 1\n";
  }
  ::setenv("COMPROF_SEED", "41", 1);
  const auto model = (dir / "m.snap").string();
  const auto r = run({"--config", (dir / "comprof.toml").string(), "train", "--graph", f.graph_dir.string(),
                      "--model", model, "--workers", "1"});
  ::unsetenv("COMPROF_SEED");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto snap = load_snapshot(model);
  EXPECT_EQ(snap.hyper.iterations, 2u);
  EXPECT_EQ(snap.hyper.communities, 2u);
  EXPECT_EQ(snap.hyper.topics, 3u);
  EXPECT_EQ(snap.seed, 41u);
  EXPECT_TRUE(std::filesystem::exists(model + ".report.csv"));
}

TEST(Cli, FlagOverridesConfig) {
  const auto& f = model_files();
  const auto dir = temp_dir("cli-override");
  {
    std::ofstream cfg(dir / "c.toml");
    cfg << "[train]\niterations = 5\nlda-sweeps = 1\n";
  }
  const auto model = (dir / "m.snap").string();
  const auto r = run({"--config", (dir / "c.toml").string(), "train", "--graph", f.graph_dir.string(), "--model",
                      model, "--iterations", "1", "-C", "2", "-Z", "2", "--workers", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_snapshot(model).hyper.iterations, 1u);
}

TEST(Cli, PredictAndExport) {
  const auto& f = model_files();
  const auto p = run({"predict", "--model", f.snapshot.string(), "--graph", f.graph_dir.string(), "--u", f.some_user,
                      "--v", f.other_user, "--doc", f.some_doc});
  ASSERT_EQ(p.code, 0) << p.err;
  const auto j = nlohmann::json::parse(p.out);
  EXPECT_GT(j["probability"].get<double>(), 0.0);

  const auto out = (temp_dir("cli-export") / "g.json").string();
  const auto e = run({"export-graph", "--model", f.snapshot.string(), "--topic", "1", "--out", out});
  ASSERT_EQ(e.code, 0) << e.err;
  std::ifstream in(out);
  EXPECT_EQ(nlohmann::json::parse(in)["topic"], 1);

  EXPECT_EQ(run({"predict", "--model", f.snapshot.string(), "--graph", f.graph_dir.string(), "--u", "nobody", "--v",
                 f.other_user, "--doc", f.some_doc})
                .code,
            1);
}

TEST(Cli, IngestAndGenerate) {
  const auto dir = temp_dir("cli-gen");
  {
    std::ofstream spec(dir / "spec.json");
    spec << R"({"users": 10, "docs_per_user": 2, "friendships": 20, "diffusions": 10, "words": 30})";
  }
  const auto g = run({"generate", "--spec", (dir / "spec.json").string(), "--output", (dir / "data").string()});
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "data" / "truth.json"));
  const auto i = run({"ingest", "--input", (dir / "data").string(), "--output", (dir / "clean").string()});
  ASSERT_EQ(i.code, 0) << i.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "clean" / "docs.jsonl"));
}
