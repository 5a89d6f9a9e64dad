#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lgcn/cli.hpp"
#include "lgcn/dataset_io.hpp"
#include "support.hpp"

using namespace lgcn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

const std::vector<std::string> kSmallGraph{"-s", "n_vertices_init=200", "-s", "n_edges_target=500", "-s", "seed=4"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(SeedList, Forms) {
  EXPECT_EQ(cli::parse_seed_list("3"), (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(cli::parse_seed_list("1..4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(cli::parse_seed_list("1,4,7"), (std::vector<std::uint64_t>{1, 4, 7}));
  for (const char* bad : {"", "a", "4..1", "1,,2", "1,1", "-3", "1..", "2.5"}) {
    EXPECT_THROW(cli::parse_seed_list(bad), cli::UsageError) << bad;
  }
}

TEST(Config, DefaultsFollowTrainingProtocol) {
  const json d = cli::defaults(cli::train_schema());
  EXPECT_EQ(d["epochs"], 2000);
  EXPECT_EQ(d["weight_decay"], 5e-4);
  EXPECT_EQ(d["model"], "L4-GCN+");
  const cli::TrainSettings s = cli::train_settings(d);
  EXPECT_EQ(s.train_for(DatasetKind::Financial1Hop).learning_rate, 5e-4);
  EXPECT_EQ(s.train_for(DatasetKind::Transport).learning_rate, 1.5e-4);
  EXPECT_EQ(s.spec_for(DatasetKind::Financial1Hop).hidden, 20u);
  EXPECT_EQ(s.spec_for(DatasetKind::Transport).hidden, 6u);
}

TEST(Config, OverridesAreTyped) {
  json c = cli::defaults(cli::train_schema());
  cli::apply_override(cli::train_schema(), c, "epochs=7");
  cli::apply_override(cli::train_schema(), c, "model=L2-GCN");
  cli::apply_override(cli::train_schema(), c, "bucket_boundaries=4,9");
  cli::apply_override(cli::train_schema(), c, "learning_rate=null");
  EXPECT_EQ(c["epochs"], 7);
  EXPECT_EQ(c["model"], "L2-GCN");
  EXPECT_EQ(c["bucket_boundaries"], json({4, 9}));
  EXPECT_TRUE(c["learning_rate"].is_null());
  for (const char* bad : {"epochs=-1", "epochs=abc", "nokey=1", "epochs", "=3", "shared_self_weight=2",
                          "bucket_boundaries=4,x", "schema_version=2", "hidden=1.5"}) {
    json copy = c;
    EXPECT_THROW(cli::apply_override(cli::train_schema(), copy, bad), cli::UsageError) << bad;
  }
}

TEST(Config, MalformedFilesExitWithUsageCode) {
  fixtures::TempDir dir("cli-config");
  CounterRng rng(5, "malformed");
  const std::vector<std::string> malformed{
      "{}",
      "[]",
      "not json",
      R"({"schema_version": 2})",
      R"({"schema_version": "1"})",
      R"({"schema_version": 1, "kind": 3})",
      R"({"schema_version": 1, "kind": "transport"})",
      R"({"schema_version": 1, "kind": "financial-3hop"})",
      R"({"schema_version": 1, "n_vertices_init": -5})",
      R"({"schema_version": 1, "n_vertices_init": 2.5})",
      R"({"schema_version": 1, "fraud_ratio": "high"})",
      R"({"schema_version": 1, "fraud_ratio": 1.5})",
      R"({"schema_version": 1, "seeds": 3})",
      R"({"schema_version": 1, "mutation_prob": null})",
  };
  for (std::size_t i = 0; i < malformed.size(); ++i) {
    const fs::path cfg = dir.path() / ("bad" + std::to_string(i) + ".json");
    spit(cfg, malformed[i]);
    const Result r = run({"generate", "-c", cfg.string(), "-o", (dir.path() / "out").string()});
    EXPECT_EQ(r.code, cli::kExitUsage) << malformed[i] << "\n" << r.err;
    EXPECT_FALSE(fs::exists(dir.path() / "out")) << malformed[i];
  }
  // Random corruption of a valid config: every failure must be a usage error.
  const std::string valid = R"({"schema_version": 1, "kind": "financial-1hop", "n_vertices_init": 50})";
  for (int trial = 0; trial < 60; ++trial) {
    std::string text = valid;
    const std::size_t pos = rng.below(text.size());
    text[pos] = "x\"{}:,1-"[rng.below(8)];
    const fs::path cfg = dir.path() / "random.json";
    spit(cfg, text);
    fs::remove_all(dir.path() / "rand-out");
    const Result r = run(with({"generate", "-c", cfg.string(), "-o", (dir.path() / "rand-out").string()},
                              {"-s", "n_edges_target=0"}));
    EXPECT_TRUE(r.code == cli::kExitOk || r.code == cli::kExitUsage) << text << "\n" << r.err;
  }
}

TEST(Cli, UnknownVerbAndBadFlags) {
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"train"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"generate", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"inspect"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, GenerateSummaryAndRefusal) {
  fixtures::TempDir dir("cli-gen");
  const std::string out = (dir.path() / "data").string();
  const Result r = run(with({"generate", "-o", out}, kSmallGraph));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  for (const char* col : {"Data Set", "|V|", "|E|", "|N|", "|F|", "|M|"}) {
    EXPECT_NE(r.out.find(col), std::string::npos) << col << "\n" << r.out;
  }
  EXPECT_TRUE(fs::exists(dir.path() / "data" / "meta.json"));
  const std::string meta = slurp(dir.path() / "data" / "meta.json");
  EXPECT_EQ(run(with({"generate", "-o", out}, kSmallGraph)).code, cli::kExitUsage);
  ASSERT_EQ(run(with({"generate", "-o", out, "--force"}, kSmallGraph)).code, cli::kExitOk);
  EXPECT_EQ(slurp(dir.path() / "data" / "meta.json"), meta);
  const Result inspect = run({"inspect", "-d", out});
  EXPECT_EQ(inspect.code, cli::kExitOk);
  EXPECT_EQ(inspect.out, r.out);
}

TEST(Cli, EmptyTargetWarns) {
  fixtures::TempDir dir("cli-empty");
  const Result r = run({"generate", "-o", (dir.path() / "d").string(), "-s", "n_edges_target=0"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos) << r.err;
  EXPECT_EQ(load_dataset(dir.path() / "d").num_edges(), 0u);
}

TEST(Cli, OutputRootFromEnvironment) {
  fixtures::TempDir dir("cli-env");
  ::setenv(cli::kOutputRootEnv, dir.path().c_str(), 1);
  const Result r = run(with({"generate"}, kSmallGraph));
  ::unsetenv(cli::kOutputRootEnv);
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir.path() / "financial-1hop-seed4" / "meta.json"));
}

TEST(Cli, TrainEvalExportWorkflow) {
  fixtures::TempDir dir("cli-flow");
  const std::string data = (dir.path() / "data").string();
  ASSERT_EQ(run(with({"generate", "-o", data}, kSmallGraph)).code, cli::kExitOk);
  const std::string run_dir = (dir.path() / "run").string();
  const std::vector<std::string> train_args{"train",        "-d", data, "-o", run_dir, "-s", "model=L2-GCN+", "-s",
                                            "epochs=3",     "-s", "train_ratio=0.3", "-s", "test_ratio=0.6",
                                            "-s",           "val_ratio=0.1"};
  const Result t = run(train_args);
  ASSERT_EQ(t.code, cli::kExitOk) << t.err;
  for (const char* f : {"checkpoint.json", "report.json", "loss.csv", "timing.json", "config.json"}) {
    EXPECT_TRUE(fs::exists(dir.path() / "run" / f)) << f;
  }
  EXPECT_EQ(count_lines(slurp(dir.path() / "run" / "loss.csv")), 4u);
  const std::string checkpoint = slurp(dir.path() / "run" / "checkpoint.json");
  const std::string report = slurp(dir.path() / "run" / "report.json");

  EXPECT_EQ(run(train_args).code, cli::kExitUsage);
  ASSERT_EQ(run(with(train_args, {"--force"})).code, cli::kExitOk);
  EXPECT_EQ(slurp(dir.path() / "run" / "checkpoint.json"), checkpoint);
  EXPECT_EQ(slurp(dir.path() / "run" / "report.json"), report);

  const std::string ck = (dir.path() / "run" / "checkpoint.json").string();
  const Result e = run({"eval", "-k", ck, "-d", data});
  ASSERT_EQ(e.code, cli::kExitOk) << e.err;
  const json trained = json::parse(report);
  const json evaluated = json::parse(slurp(dir.path() / "run" / "eval-transductive.json"));
  EXPECT_EQ(evaluated["test"], trained["test"]);

  const Result x = run({"export-embeddings", "-k", ck, "-d", data});
  ASSERT_EQ(x.code, cli::kExitOk) << x.err;
  const Multigraph g = load_dataset(data);
  const std::string csv = slurp(dir.path() / "run" / "embeddings.csv");
  EXPECT_EQ(count_lines(csv), g.num_edges() + 1);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "edge_id,src,dst,trans_type,fraud_type,w_1,w_2");

  EXPECT_EQ(run({"eval", "-k", (dir.path() / "missing.json").string(), "-d", data}).code, cli::kExitFailure);
  EXPECT_EQ(run({"eval", "-k", ck}).code, cli::kExitUsage);
  EXPECT_EQ(run({"inspect", "-k", ck}).code, cli::kExitOk);
}

TEST(Cli, GcnHasNothingToExport) {
  fixtures::TempDir dir("cli-gcn");
  const std::string data = (dir.path() / "data").string();
  ASSERT_EQ(run(with({"generate", "-o", data}, kSmallGraph)).code, cli::kExitOk);
  const std::string out = (dir.path() / "gcn").string();
  ASSERT_EQ(run({"train", "-d", data, "-o", out, "-s", "model=GCN", "-s", "epochs=1", "--progress-every", "0"}).code,
            cli::kExitOk);
  const Result r = run({"export-embeddings", "-k", out + "/checkpoint.json", "-d", data});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("GCN"), std::string::npos);
}

TEST(Cli, SeedFanOutWritesSummary) {
  fixtures::TempDir dir("cli-seeds");
  const std::string data = (dir.path() / "data").string();
  ASSERT_EQ(run(with({"generate", "-o", data}, kSmallGraph)).code, cli::kExitOk);
  const std::string out = (dir.path() / "runs").string();
  const Result r = run({"train", "-d", data, "-o", out, "-s", "model=GCN", "-s", "epochs=2", "--seeds", "1..3",
                        "-j", "2", "--progress-every", "0"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  for (int s = 1; s <= 3; ++s) {
    EXPECT_TRUE(fs::exists(dir.path() / "runs" / ("seed_" + std::to_string(s)) / "report.json"));
  }
  EXPECT_EQ(count_lines(slurp(dir.path() / "runs" / "summary.csv")), 2u);
  EXPECT_TRUE(fs::exists(dir.path() / "runs" / "summary.txt"));
}
