#include "lgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lgcn/rng.hpp"

namespace lgcn {

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Financial1Hop: return "financial-1hop";
    case DatasetKind::Financial2Hop: return "financial-2hop";
    case DatasetKind::Transport: return "transport";
  }
  return "unknown";
}

DatasetKind parse_dataset_kind(std::string_view text) {
  if (text == "financial-1hop") return DatasetKind::Financial1Hop;
  if (text == "financial-2hop") return DatasetKind::Financial2Hop;
  if (text == "transport") return DatasetKind::Transport;
  throw std::invalid_argument("unknown dataset kind '" + std::string(text) + "'");
}

std::string_view to_string(FraudType fraud) {
  switch (fraud) {
    case FraudType::A: return "A";
    case FraudType::B: return "B";
    case FraudType::None: break;
  }
  return "None";
}

FraudType parse_fraud_type(std::string_view text) {
  if (text == "A") return FraudType::A;
  if (text == "B") return FraudType::B;
  if (text == "None") return FraudType::None;
  throw std::invalid_argument("unknown fraud type '" + std::string(text) + "'");
}

void SequenceStore::append(std::span<const double> flat) {
  if (attr_dim_ == 0 || flat.size() % attr_dim_ != 0) {
    throw StructuralError("sequence of " + std::to_string(flat.size()) +
                          " values is not a multiple of attribute width " +
                          std::to_string(attr_dim_));
  }
  values_.insert(values_.end(), flat.begin(), flat.end());
  offsets_.push_back(values_.size());
}

void SequenceStore::reserve(std::size_t sequences, std::size_t values) {
  offsets_.reserve(sequences + 1);
  values_.reserve(values);
}

std::pair<AdjacencyIndex, AdjacencyIndex> build_indices(std::span<const MultiEdge> edges,
                                                        std::size_t n_vertices) {
  std::vector<std::size_t> in_off(n_vertices + 1, 0), out_off(n_vertices + 1, 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& edge = edges[e];
    if (edge.src >= n_vertices || edge.dst >= n_vertices) {
      std::ostringstream msg;
      msg << "edge " << e << " (" << edge.src << "->" << edge.dst
          << ") references a vertex outside [0, " << n_vertices << ")";
      throw StructuralError(msg.str());
    }
    ++out_off[edge.src + 1];
    ++in_off[edge.dst + 1];
  }
  std::partial_sum(in_off.begin(), in_off.end(), in_off.begin());
  std::partial_sum(out_off.begin(), out_off.end(), out_off.begin());

  std::vector<std::size_t> in_items(edges.size()), out_items(edges.size());
  std::vector<std::size_t> in_fill(in_off.begin(), in_off.end() - 1);
  std::vector<std::size_t> out_fill(out_off.begin(), out_off.end() - 1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out_items[out_fill[edges[e].src]++] = e;
    in_items[in_fill[edges[e].dst]++] = e;
  }
  return {AdjacencyIndex(std::move(in_off), std::move(in_items)),
          AdjacencyIndex(std::move(out_off), std::move(out_items))};
}

Multigraph::Multigraph(DatasetKind kind, VertexTable vertices, std::vector<MultiEdge> edges,
                       SequenceStore sequences, std::vector<EdgeMeta> metadata, DatasetInfo info)
    : kind_(kind),
      vertices_(std::move(vertices)),
      edges_(std::move(edges)),
      sequences_(std::move(sequences)),
      metadata_(std::move(metadata)),
      info_(info) {
  const std::size_t n = vertices_.size();
  if (vertices_.features.size() != n * vertices_.num_features) {
    throw StructuralError("feature matrix has " + std::to_string(vertices_.features.size()) +
                          " values, expected " + std::to_string(n * vertices_.num_features));
  }
  if (!vertices_.hidden_class.empty() && vertices_.hidden_class.size() != n) {
    throw StructuralError("hidden_class length does not match vertex count");
  }
  if (!vertices_.original_ids.empty() && vertices_.original_ids.size() != n) {
    throw StructuralError("remap table length does not match vertex count");
  }
  if (sequences_.num_sequences() != edges_.size()) {
    throw StructuralError("sequence count " + std::to_string(sequences_.num_sequences()) +
                          " does not match edge count " + std::to_string(edges_.size()));
  }
  if (metadata_.empty()) metadata_.resize(edges_.size());
  if (metadata_.size() != edges_.size()) {
    throw StructuralError("edge metadata count does not match edge count");
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].src == edges_[e].dst) {
      throw StructuralError("edge " + std::to_string(e) + " is a self-loop on vertex " +
                            std::to_string(edges_[e].src));
    }
  }
  std::tie(in_index_, out_index_) = build_indices(edges_, n);
}

std::size_t Multigraph::num_classes() const {
  return kind_ == DatasetKind::Transport ? 3 : 2;
}

bool Multigraph::operator==(const Multigraph& other) const {
  return kind_ == other.kind_ && vertices_ == other.vertices_ && edges_ == other.edges_ &&
         sequences_ == other.sequences_ && metadata_ == other.metadata_ && info_ == other.info_;
}

AdjacencyIndex undirected_binary_adjacency(const Multigraph& g) {
  const std::size_t n = g.num_vertices();
  std::vector<std::vector<std::size_t>> sets(n);
  for (const auto& e : g.edges()) {
    sets[e.src].push_back(e.dst);
    sets[e.dst].push_back(e.src);
  }
  std::vector<std::size_t> offsets{0};
  offsets.reserve(n + 1);
  std::vector<std::size_t> items;
  for (auto& s : sets) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    items.insert(items.end(), s.begin(), s.end());
    offsets.push_back(items.size());
  }
  return AdjacencyIndex(std::move(offsets), std::move(items));
}

SplitMask make_splits(std::size_t n_vertices, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0) {
    throw std::invalid_argument("split ratios must be positive");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  const auto n_train = static_cast<std::size_t>(std::llround(ratios.train * n_vertices));
  const auto n_val = static_cast<std::size_t>(std::llround(ratios.val * n_vertices));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n_vertices) {
    throw std::invalid_argument("split ratios leave an empty split for " +
                                std::to_string(n_vertices) + " vertices");
  }
  std::vector<std::size_t> perm(n_vertices);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(seed, "splits");
  for (std::size_t i = n_vertices; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.below(i)]);
  }
  SplitMask mask;
  mask.seed = seed;
  mask.train.assign(perm.begin(), perm.begin() + n_train);
  mask.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  mask.test.assign(perm.begin() + n_train + n_val, perm.end());
  std::sort(mask.train.begin(), mask.train.end());
  std::sort(mask.val.begin(), mask.val.end());
  std::sort(mask.test.begin(), mask.test.end());
  return mask;
}

}  // namespace lgcn
