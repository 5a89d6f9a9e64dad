#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "lgcn/graph.hpp"
#include "lgcn/rng.hpp"

namespace lgcn::gen {

inline constexpr double kMinutesPerDay = 1440.0;
inline constexpr double kYearMinutes = 365.0 * kMinutesPerDay;
inline constexpr std::size_t kFinancialFeatures = 13;

struct GenConfig {
  std::size_t n_vertices_init = 50000;
  std::size_t n_edges_target = 125000;
  double fraud_ratio = 0.1;
  bool two_hop = false;
  std::uint64_t seed = 0;
  double mutation_prob = 1.0 / 3.0;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

void to_json(nlohmann::json& j, const GenConfig& cfg);
void from_json(const nlohmann::json& j, GenConfig& cfg);

/// Preferential-attachment sampling state: vertex i is drawn with probability
/// proportional to k_i + 1, where k_i counts in- and out-edges. Backed by an
/// integer Fenwick tree so draws and updates are O(log n) and exact.
class AttachmentState {
 public:
  explicit AttachmentState(std::size_t n_vertices);

  std::size_t draw(CounterRng& rng) const;
  void add_edge(std::size_t src, std::size_t dst);

  std::uint64_t weight(std::size_t v) const { return degrees_[v] + 1; }
  std::uint64_t total_weight() const { return total_; }
  std::uint64_t degree(std::size_t v) const { return degrees_[v]; }

 private:
  void bump(std::size_t v, std::uint64_t delta);

  std::vector<std::uint64_t> degrees_;
  std::vector<std::uint64_t> tree_;
  std::uint64_t total_ = 0;
  std::size_t top_bit_ = 1;
};

struct Skeleton {
  std::size_t n_vertices = 0;                  // after pruning
  std::vector<MultiEdge> edges;                // compact ids, insertion order
  std::vector<std::int64_t> original_ids;      // compact id -> initial id
  std::size_t sampled_pairs = 0;               // distinct pairs incl. self-loops
  std::size_t self_loops_removed = 0;
};

/// Samples distinct ordered pairs until `n_edges_target` is reached, then drops
/// self-connections and zero-degree vertices and compacts ids.
Skeleton generate_skeleton(const GenConfig& cfg);

/// Independent class draw for each of the `n` initial vertices.
std::vector<int> assign_classes(std::size_t n, double fraud_ratio, std::uint64_t seed);

struct Transaction {
  double time = 0.0;    // minutes since start of year
  double amount = 0.0;
};

struct TransactionStats {
  std::size_t dt_clamps = 0;
};

std::vector<Transaction> make_transactions(int trans_type, FraudType fraud, CounterRng& rng,
                                           double mutation_prob = 1.0 / 3.0,
                                           TransactionStats* stats = nullptr);

/// 1-hop fraud rule: A for F->N, B for N->F, None otherwise.
FraudType one_hop_fraud(int src_label, int dst_label);

struct TwoHopAssignment {
  std::vector<std::uint8_t> mule;  // per vertex
  std::size_t mule_count = 0;
};

/// Flags every N vertex adjacent (either direction) to an F vertex as a mule.
TwoHopAssignment apply_two_hop(std::size_t n_vertices, std::span<const MultiEdge> edges,
                               std::span<const int> labels);

/// 2-hop fraud rule: A for M->plain N, B for plain N->M, None otherwise.
FraudType two_hop_fraud(int src_label, bool src_mule, int dst_label, bool dst_mule);

/// Raw feature matrix, n x 13: employees, turnover, profit, equity, sector
/// one-hot (4), region one-hot (5).
std::vector<double> generate_node_features(std::size_t n, std::uint64_t seed);

/// Sector / region sampling weights.
std::vector<double> sector_weights();
std::vector<double> region_weights();

/// Attaches transaction sequences and metadata to a labelled skeleton.
Multigraph populate_edges(const Skeleton& skeleton, std::vector<int> labels,
                          std::vector<std::uint8_t> mule, const GenConfig& cfg);

/// Full pipeline: classes, skeleton, optional mules, features, transactions.
Multigraph generate_financial(const GenConfig& cfg);

struct NormalizationConstants {
  // log(dt in minutes) <= log(525600) ~ 13.17; log(amount) rarely exceeds log(1e4)
  double time_log_scale = 13.2;
  double amount_log_scale = 9.25;
};

/// Model-ready copy: min-max scaled features; per sequence the first
/// transaction is dropped and (log dt, log amount) are divided by the
/// dataset constants. Transport graphs only get feature scaling.
Multigraph normalize_dataset(const Multigraph& raw, NormalizationConstants constants = {});

/// Min-max scaling per column; constant columns map to 0.
void min_max_scale(std::vector<double>& features, std::size_t n_cols);

}  // namespace lgcn::gen
