#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lgcn/batching.hpp"
#include "lgcn/graph.hpp"
#include "lgcn/ops.hpp"
#include "lgcn/rng.hpp"
#include "lgcn/tape.hpp"

namespace lgcn {

enum class Family { GCN, DVE, LGCN, LGCNPlus };
enum class GammaKind { Transactions, Transport };

/// Which endpoint of edge u->v receives the canonical [w, 0] block.
/// TargetCanonical: v aggregates u through [w, 0], u aggregates v through
/// [0, w]. SourceCanonical swaps the two.
enum class DirectionConvention { TargetCanonical, SourceCanonical };

/// How DVE combines the incoming and outgoing edge means. Concat appends
/// both (F + 2L features), Sum appends their sum (F + L).
enum class DveMerge { Concat, Sum };

std::string_view to_string(Family f);
Family parse_family(std::string_view text);
std::string_view to_string(GammaKind k);
GammaKind parse_gamma_kind(std::string_view text);
std::string_view to_string(DirectionConvention d);
DirectionConvention parse_direction(std::string_view text);
std::string_view to_string(DveMerge m);
DveMerge parse_dve_merge(std::string_view text);

inline constexpr double kNormalizerFloor = 1e-12;

struct GammaConfig {
  GammaKind kind = GammaKind::Transactions;
  std::size_t kernels = 20;      // conv kernels (transactions)
  std::size_t channels = 2;      // attributes per transaction
  std::size_t latent = 4;        // output size L
  std::size_t input_width = 24;  // profile length (transport)
  double dropout = 0.2;          // between the two FC layers (transactions)
};

struct ModelSpec {
  Family family = Family::LGCNPlus;
  std::size_t in_features = 13;
  std::size_t hidden = 20;
  std::size_t classes = 2;
  GammaConfig gamma;
  double layer_dropout = 0.5;
  DirectionConvention direction = DirectionConvention::TargetCanonical;
  /// One self-weight vector for both graph layers instead of one per layer.
  bool shared_self_weight = true;
  DveMerge dve_merge = DveMerge::Concat;

  bool uses_gamma() const { return family != Family::GCN; }
  /// Table-style label: GCN, DVE, L4-GCN, L4-GCN+.
  std::string name() const;
  void validate() const;

  static ModelSpec financial(Family family, std::size_t latent = 4);
  static ModelSpec transport(Family family, std::size_t latent = 3);
  /// Parses a label such as "L2-GCN+" or "DVE" with dataset defaults.
  static ModelSpec from_name(std::string_view label, DatasetKind kind);
};

void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);

/// Graph-derived tensors and index lists reused by every forward pass.
struct GraphContext {
  DatasetKind kind = DatasetKind::Financial1Hop;
  std::size_t num_vertices = 0;
  std::size_t num_edges = 0;
  ad::Tensor features;  // n x F

  // Binarized undirected neighbourhoods.
  ad::Index neighbor_src;
  ad::Index neighbor_tgt;
  ad::Tensor neighbor_scale;  // n x 1, 1 / (|N_i| + 1)

  // Latent-relation messages: n self messages, then one per edge in the
  // canonical direction, then one per edge in the inverse direction.
  ad::Index message_src[2];  // indexed by DirectionConvention
  ad::Index message_tgt[2];
  std::shared_ptr<const std::vector<double>> message_counts;  // messages per vertex

  // Edge endpoints and incident-edge mean factors.
  ad::Index edge_src;
  ad::Index edge_dst;
  ad::Tensor inv_in_degree;   // n x 1, 0 for vertices without in-edges
  ad::Tensor inv_out_degree;  // n x 1

  EdgeBatches batches;  // transactions
  ad::Tensor profiles;  // transport, E x input_width
};

GraphContext make_context(const Multigraph& g,
                          std::span<const std::size_t> boundaries = kDefaultBucketBoundaries);

// Building blocks, exposed for testing.

void add_gamma_parameters(ad::ParameterSet& params, const std::string& prefix, const GammaConfig& cfg,
                          CounterRng& init);
/// E x L edge embeddings from the context's sequences or profiles.
ad::Var gamma_forward(ad::Tape& t, ad::ParameterSet& params, const std::string& prefix, const GammaConfig& cfg,
                      const GraphContext& ctx, bool training, CounterRng rng);
/// Inference-mode embedding of one transaction sequence (length x channels
/// values), evaluated without batching.
ad::Tensor gamma_single(ad::ParameterSet& params, const std::string& prefix, const GammaConfig& cfg,
                        std::span<const double> sequence, std::size_t length);

ad::Var gcn_layer(ad::Tape& t, ad::Var h, const GraphContext& ctx, ad::Var weight, ad::Var bias, bool relu);

/// Per-message relation weights (rows of length 2L) with their endpoints.
struct LatentMessages {
  ad::Var weights;
  ad::Index src;
  ad::Index tgt;
  std::size_t num_vertices = 0;
  std::shared_ptr<const std::vector<double>> counts;
};

LatentMessages latent_messages(ad::Tape& t, ad::Var edge_latent, ad::Var self_weight, const GraphContext& ctx,
                               DirectionConvention direction);

ad::Var lgcn_layer(ad::Tape& t, ad::Var h, const LatentMessages& msg, ad::Var weight, ad::Var bias, bool relu);
ad::Var lgcn_plus_layer(ad::Tape& t, ad::Var h, const LatentMessages& msg, ad::Var weight1, ad::Var bias1,
                        ad::Var weight2, ad::Var bias2, bool relu);

/// Two-layer node classifier of one of the four families.
class Model {
 public:
  explicit Model(ModelSpec spec, std::uint64_t init_seed = 0);

  const ModelSpec& spec() const { return spec_; }
  ad::ParameterSet& parameters() { return params_; }
  const ad::ParameterSet& parameters() const { return params_; }
  std::size_t num_parameters() const { return params_.count(); }

  struct Output {
    ad::Var logits;       // n x C, before softmax
    ad::Var edge_latent;  // E x L from the first Gamma; invalid for GCN
  };

  /// Records one pass on `t`. Dropout sites draw from substreams of `rng`.
  Output forward(ad::Tape& t, const GraphContext& ctx, bool training, CounterRng rng = CounterRng{});

  ad::Tensor predict(const GraphContext& ctx);
  /// First-layer Gamma outputs in inference mode.
  ad::Tensor edge_embeddings(const GraphContext& ctx);

  /// Total Gamma applications (one per edge per instance per pass).
  std::size_t gamma_evaluations() const { return gamma_evaluations_; }

 private:
  void check_context(const GraphContext& ctx) const;

  ModelSpec spec_;
  ad::ParameterSet params_;
  std::size_t gamma_evaluations_ = 0;
};

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

}  // namespace lgcn
