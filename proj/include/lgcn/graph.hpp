#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lgcn {

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DatasetKind { Financial1Hop, Financial2Hop, Transport };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view text);
inline bool is_financial(DatasetKind kind) { return kind != DatasetKind::Transport; }

enum class FraudType : std::uint8_t { None = 0, A = 1, B = 2 };

std::string_view to_string(FraudType fraud);
FraudType parse_fraud_type(std::string_view text);

// Class ids.
inline constexpr int kNormal = 0;
inline constexpr int kFraud = 1;

/// Per-vertex data. `hidden_class` and `original_ids` are diagnostic only and
/// never consumed by a model.
struct VertexTable {
  std::size_t num_features = 0;
  std::vector<double> features;  // row-major, size() x num_features
  std::vector<int> labels;
  std::vector<std::uint8_t> hidden_class;   // empty or one flag per vertex
  std::vector<std::int64_t> original_ids;   // empty or one id per vertex

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t v) const {
    return {features.data() + v * num_features, num_features};
  }
  bool operator==(const VertexTable&) const = default;
};

struct MultiEdge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  bool operator==(const MultiEdge&) const = default;
};

/// Generator metadata attached to an edge. Kept apart from MultiEdge so that
/// model code has no path to it.
struct EdgeMeta {
  int trans_type = 0;  // 1..3 for financial data, 0 when absent
  FraudType fraud = FraudType::None;
  bool operator==(const EdgeMeta&) const = default;
};

/// Variable-length attribute sequences stored back to back (CSR layout).
class SequenceStore {
 public:
  SequenceStore() = default;
  explicit SequenceStore(std::size_t attr_dim) : attr_dim_(attr_dim) {}

  std::size_t attr_dim() const { return attr_dim_; }
  std::size_t num_sequences() const { return offsets_.size() - 1; }
  std::size_t length(std::size_t e) const {
    return (offsets_[e + 1] - offsets_[e]) / attr_dim_;
  }
  std::span<const double> sequence(std::size_t e) const {
    return {values_.data() + offsets_[e], offsets_[e + 1] - offsets_[e]};
  }
  std::size_t total_length() const { return values_.size() / (attr_dim_ ? attr_dim_ : 1); }
  std::span<const double> values() const { return values_; }

  /// Appends one sequence; `flat` holds length * attr_dim values.
  void append(std::span<const double> flat);
  void reserve(std::size_t sequences, std::size_t values);

  bool operator==(const SequenceStore&) const = default;

 private:
  std::size_t attr_dim_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<double> values_;
};

/// Per-vertex lists of edge ids in CSR form.
class AdjacencyIndex {
 public:
  AdjacencyIndex() = default;
  AdjacencyIndex(std::vector<std::size_t> offsets, std::vector<std::size_t> items)
      : offsets_(std::move(offsets)), items_(std::move(items)) {}

  std::size_t num_vertices() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const std::size_t> operator[](std::size_t v) const {
    return {items_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(std::size_t v) const { return offsets_[v + 1] - offsets_[v]; }
  std::size_t total() const { return items_.size(); }
  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const std::size_t> items() const { return items_; }

  bool operator==(const AdjacencyIndex&) const = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> items_;
};

/// Buckets edge ids by source (out) and destination (in), preserving edge
/// insertion order. Throws StructuralError naming the first offending edge.
std::pair<AdjacencyIndex, AdjacencyIndex> build_indices(std::span<const MultiEdge> edges,
                                                        std::size_t n_vertices);

/// Generation and normalization record persisted in meta.json.
struct DatasetInfo {
  std::uint64_t seed = 0;
  double fraud_ratio = 0.0;
  std::size_t n_vertices_init = 0;
  std::size_t n_edges_target = 0;
  std::size_t mule_count = 0;
  std::size_t dt_clamp_count = 0;
  double time_log_scale = 0.0;    // log(dt minutes) is divided by this
  double amount_log_scale = 0.0;  // log(amount) is divided by this
  bool normalized = false;
  bool operator==(const DatasetInfo&) const = default;
};

/// Directed multigraph whose edges each carry an attribute sequence. Immutable
/// once built.
class Multigraph {
 public:
  Multigraph() = default;
  Multigraph(DatasetKind kind, VertexTable vertices, std::vector<MultiEdge> edges,
             SequenceStore sequences, std::vector<EdgeMeta> metadata, DatasetInfo info = {});

  DatasetKind kind() const { return kind_; }
  const VertexTable& vertices() const { return vertices_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_features() const { return vertices_.num_features; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<MultiEdge>& edges() const { return edges_; }
  const MultiEdge& edge(std::size_t e) const { return edges_[e]; }
  const SequenceStore& sequences() const { return sequences_; }
  const AdjacencyIndex& in_index() const { return in_index_; }
  const AdjacencyIndex& out_index() const { return out_index_; }
  const DatasetInfo& info() const { return info_; }
  std::span<const int> labels() const { return vertices_.labels; }
  std::size_t num_classes() const;

  /// Generator metadata; excluded from every model input path.
  const EdgeMeta& metadata(std::size_t e) const { return metadata_[e]; }
  const std::vector<EdgeMeta>& all_metadata() const { return metadata_; }

  bool operator==(const Multigraph& other) const;

 private:
  DatasetKind kind_ = DatasetKind::Financial1Hop;
  VertexTable vertices_;
  std::vector<MultiEdge> edges_;
  SequenceStore sequences_;
  std::vector<EdgeMeta> metadata_;
  DatasetInfo info_;
  AdjacencyIndex in_index_;
  AdjacencyIndex out_index_;
};

/// Distinct neighbors in either direction, sorted, no self entries.
AdjacencyIndex undirected_binary_adjacency(const Multigraph& g);

struct SplitRatios {
  double train = 0.05;
  double val = 0.05;
  double test = 0.90;
};

struct SplitMask {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  bool operator==(const SplitMask&) const = default;
};

/// Uniform random permutation cut by ratio (unstratified). Train and
/// validation sizes are rounded; test receives the remainder.
SplitMask make_splits(std::size_t n_vertices, SplitRatios ratios, std::uint64_t seed);

}  // namespace lgcn
