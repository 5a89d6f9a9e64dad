#include <fstream>
#include <sstream>

#include "lgcn/dataset_io.hpp"
#include "lgcn/generator.hpp"
#include "support.hpp"

using namespace lgcn;
namespace fs = std::filesystem;

namespace {

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

const char* kFiles[] = {"meta.json", "nodes.csv", "edges.csv", "remap.csv", "transactions.csv"};

}  // namespace

TEST(DatasetIo, SmallGraphRoundTripIsByteIdentical) {
  fixtures::TempDir a("io-a"), b("io-b");
  const Multigraph g = fixtures::random_graph({.vertices = 3, .edges = 2, .normalized = false}, 5);
  save_dataset(g, a.path());
  const Multigraph back = load_dataset(a.path());
  EXPECT_TRUE(back == g);
  save_dataset(back, b.path());
  for (const char* f : kFiles) EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
}

TEST(DatasetIo, RandomCorpusRoundTrip) {
  fixtures::TempDir dir("io-corpus");
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    fixtures::RandomGraphOptions o{.vertices = 2 + seed % 11, .edges = seed * 2, .normalized = false};
    if (seed % 5 == 4) {
      o.kind = DatasetKind::Transport;
      o.features = 6;
      o.attr_dim = 24;
      o.max_length = 1;
      o.classes = 3;
      o.metadata = false;
    }
    const Multigraph g = fixtures::random_graph(o, seed);
    const fs::path p = dir.path() / std::to_string(seed);
    save_dataset(g, p);
    EXPECT_TRUE(load_dataset(p) == g) << "seed " << seed;
  }
}

TEST(DatasetIo, GeneratedDatasetKeepsTransactionCount) {
  fixtures::TempDir dir("io-gen");
  gen::GenConfig cfg;
  cfg.n_vertices_init = 400;
  cfg.n_edges_target = 1000;
  cfg.seed = 3;
  cfg.two_hop = true;
  const Multigraph g = gen::generate_financial(cfg);
  save_dataset(g, dir.path());
  const Multigraph back = load_dataset(dir.path());
  EXPECT_EQ(back.sequences().total_length(), g.sequences().total_length());
  EXPECT_TRUE(back == g);
}

TEST(DatasetIo, UnknownEdgeInTransactionsIsParseError) {
  fixtures::TempDir dir("io-bad");
  save_dataset(fixtures::random_graph({.vertices = 3, .edges = 2, .normalized = false}, 1), dir.path());
  std::string text = slurp(dir.path() / "transactions.csv");
  text += "7,0,1.5,2.5\n";
  spit(dir.path() / "transactions.csv", text);
  try {
    load_dataset(dir.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("transactions.csv line"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, VersionMismatchIsExplicit) {
  fixtures::TempDir dir("io-version");
  save_dataset(fixtures::random_graph({.vertices = 3, .edges = 2, .normalized = false}, 1), dir.path());
  std::string meta = slurp(dir.path() / "meta.json");
  const auto pos = meta.find("\"format_version\": 1");
  ASSERT_NE(pos, std::string::npos);
  meta.replace(pos, 19, "\"format_version\": 9");
  spit(dir.path() / "meta.json", meta);
  try {
    load_dataset(dir.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("format_version"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, RefusesNormalizedGraph) {
  fixtures::TempDir dir("io-norm");
  EXPECT_THROW(save_dataset(fixtures::random_graph({}, 1), dir.path()), std::invalid_argument);
}

TEST(DatasetIo, DoublesKeepSeventeenDigits) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 123456789.123456789}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}
