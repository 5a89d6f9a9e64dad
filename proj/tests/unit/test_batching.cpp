#include "lgcn/batching.hpp"
#include "lgcn/generator.hpp"
#include "lgcn/models.hpp"
#include "support.hpp"

using namespace lgcn;
using ad::Tensor;

namespace {

SequenceStore store_with_lengths(std::initializer_list<std::size_t> lengths, std::uint64_t seed = 0) {
  CounterRng rng(seed, "lengths");
  SequenceStore s(2);
  for (std::size_t len : lengths) {
    std::vector<double> flat(len * 2);
    for (double& v : flat) v = rng.uniform();
    s.append(flat);
  }
  return s;
}

Tensor embed_all(const ModelSpec& spec, Model& model, const Multigraph& g, std::span<const std::size_t> bounds) {
  const GraphContext ctx = make_context(g, bounds);
  ad::Tape t;
  return t.value(gamma_forward(t, model.parameters(), "layer1.gamma", spec.gamma, ctx, false, CounterRng{}));
}

}  // namespace

TEST(Bucketize, PaddingArithmeticExample) {
  const SequenceStore s = store_with_lengths({3, 50, 52});
  const std::vector<std::size_t> bounds{16, 64};
  const EdgeBatches b = bucketize_edges(s, bounds);
  ASSERT_EQ(b.buckets.size(), 2u);
  EXPECT_EQ(b.buckets[0].edge_ids, (std::vector<std::uint32_t>{0}));
  EXPECT_EQ(b.buckets[1].edge_ids, (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(b.padded_positions(), 39u);
  EXPECT_EQ(pad_to_max_positions(s), 51u);
}

TEST(Bucketize, SingleBucketEqualsNaivePadding) {
  const SequenceStore s = store_with_lengths({4, 9, 7, 12});
  const std::vector<std::size_t> bounds{12};
  EXPECT_EQ(bucketize_edges(s, bounds).padded_positions(), pad_to_max_positions(s));
}

TEST(Bucketize, OverflowBucketFitsLongest) {
  const SequenceStore s = store_with_lengths({5, 300, 140});
  const EdgeBatches b = bucketize_edges(s, kDefaultBucketBoundaries);
  ASSERT_EQ(b.buckets.size(), 2u);
  EXPECT_EQ(b.buckets[0].capacity, 8u);
  EXPECT_EQ(b.buckets[1].capacity, 300u);
  EXPECT_EQ(b.buckets[1].edge_ids, (std::vector<std::uint32_t>{1, 2}));
}

TEST(Bucketize, ShortAndEmptySequencesGetThreePositions) {
  const SequenceStore s = store_with_lengths({0, 1, 2});
  const std::vector<std::size_t> bounds{1, 2};
  const EdgeBatches b = bucketize_edges(s, bounds);
  EXPECT_EQ(b.empty_sequences, 1u);
  for (const auto& bucket : b.buckets) EXPECT_EQ(bucket.capacity, 3u);
  EXPECT_EQ(b.num_edges, 3u);
}

TEST(Bucketize, PaddingIsZeroAndDataIsCopied) {
  const SequenceStore s = store_with_lengths({2, 5}, 3);
  const std::vector<std::size_t> bounds{8};
  const EdgeBatches b = bucketize_edges(s, bounds);
  const EdgeBucket& bucket = b.buckets[0];
  for (std::size_t i = 0; i < 2; ++i) {
    const auto seq = s.sequence(bucket.edge_ids[i]);
    const double* row = bucket.sequence(i, 2);
    for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(row[j], j < seq.size() ? seq[j] : 0.0);
  }
}

TEST(Bucketize, RejectsBadBoundaries) {
  const SequenceStore s = store_with_lengths({3});
  for (const std::vector<std::size_t>& bad : {std::vector<std::size_t>{8, 8}, {16, 8}, {0, 4}}) {
    EXPECT_THROW(bucketize_edges(s, bad), std::invalid_argument);
  }
}

TEST(Bucketize, EveryEdgeLandsInSmallestFittingBucket) {
  CounterRng rng(9, "bucket-property");
  for (int trial = 0; trial < 200; ++trial) {
    SequenceStore s(1);
    const std::size_t m = 1 + rng.below(40);
    for (std::size_t e = 0; e < m; ++e) s.append(std::vector<double>(rng.below(200), 1.0));
    const EdgeBatches b = bucketize_edges(s, kDefaultBucketBoundaries);
    std::vector<int> seen(m, 0);
    for (const auto& bucket : b.buckets) {
      for (std::size_t i = 0; i < bucket.size(); ++i) {
        const std::size_t len = s.length(bucket.edge_ids[i]);
        ++seen[bucket.edge_ids[i]];
        ASSERT_LE(len, bucket.capacity);
        for (std::size_t bound : kDefaultBucketBoundaries) {
          if (bound >= std::max(len, kMinSequenceCapacity)) {
            ASSERT_LE(bucket.capacity, std::max(bound, kMinSequenceCapacity));
            break;
          }
        }
      }
    }
    for (int c : seen) ASSERT_EQ(c, 1);
    std::size_t padding = 0;
    for (const auto& bucket : b.buckets) {
      for (std::size_t i = 0; i < bucket.size(); ++i) padding += bucket.capacity - s.length(bucket.edge_ids[i]);
    }
    ASSERT_EQ(b.padded_positions(), padding);
  }
}

TEST(GammaBatching, BatchedEqualsUnbatchedBitExactly) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Multigraph g = fixtures::random_graph({.vertices = 8, .edges = 60, .max_length = 150}, seed);
    ModelSpec spec = ModelSpec::financial(Family::LGCN, 4);
    Model model(spec, seed);
    const Tensor batched = embed_all(spec, model, g, kDefaultBucketBoundaries);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      const auto seq = g.sequences().sequence(e);
      const Tensor single =
          gamma_single(model.parameters(), "layer1.gamma", spec.gamma, seq, g.sequences().length(e));
      for (std::size_t k = 0; k < 4; ++k) ASSERT_EQ(batched.at(e, k), single[k]) << "edge " << e;
    }
  }
}

TEST(GammaBatching, BoundariesDoNotChangeOutput) {
  const Multigraph g = fixtures::random_graph({.vertices = 8, .edges = 80, .max_length = 70}, 4);
  ModelSpec spec = ModelSpec::financial(Family::LGCN, 3);
  Model model(spec, 2);
  const std::vector<std::size_t> one{128}, many{3, 5, 9, 17, 33};
  EXPECT_EQ(embed_all(spec, model, g, one), embed_all(spec, model, g, many));
  EXPECT_EQ(embed_all(spec, model, g, one), embed_all(spec, model, g, kDefaultBucketBoundaries));
}

TEST(GammaBatching, ZeroWeightsCollapseToLastBias) {
  ModelSpec spec = ModelSpec::financial(Family::DVE, 4);
  Model model(spec, 0);
  for (auto& p : model.parameters().all()) {
    if (p.name.starts_with("gamma.")) p.value.fill(0.0);
  }
  model.parameters()["gamma.conv_bias"].value.fill(0.7);
  model.parameters()["gamma.fc1_bias"].value.fill(-0.3);
  model.parameters()["gamma.fc2_bias"].value = Tensor::vector({0.5, -1.0, 2.0, 0.0});
  const Multigraph g = fixtures::random_graph({.vertices = 5, .edges = 12}, 1);
  const Tensor emb = model.edge_embeddings(make_context(g));
  for (std::size_t e = 0; e < 12; ++e) {
    EXPECT_EQ(emb.at(e, 0), 0.5);
    EXPECT_EQ(emb.at(e, 1), 0.0);
    EXPECT_EQ(emb.at(e, 2), 2.0);
    EXPECT_EQ(emb.at(e, 3), 0.0);
  }
}

TEST(GammaBatching, GeneratedDatasetPaddingBound) {
  gen::GenConfig cfg;
  cfg.n_vertices_init = 2000;
  cfg.n_edges_target = 5000;
  cfg.seed = 2;
  const Multigraph g = gen::normalize_dataset(gen::generate_financial(cfg));
  const EdgeBatches b = bucketize_edges(g.sequences(), kDefaultBucketBoundaries);
  EXPECT_LE(2 * b.padded_positions(), pad_to_max_positions(g.sequences()));
}
