#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lgcn/graph.hpp"

namespace lgcn {

inline constexpr std::size_t kMinSequenceCapacity = 3;

/// Edges whose sequences share one padded capacity.
struct EdgeBucket {
  std::size_t capacity = 0;
  std::vector<std::uint32_t> edge_ids;  // ascending
  std::vector<std::uint32_t> lengths;   // true lengths, before padding
  std::vector<double> padded;           // edges x capacity x attr_dim, zero filled

  std::size_t size() const { return edge_ids.size(); }
  const double* sequence(std::size_t i, std::size_t attr_dim) const {
    return padded.data() + i * capacity * attr_dim;
  }
};

struct EdgeBatches {
  std::size_t attr_dim = 0;
  std::size_t num_edges = 0;
  std::vector<EdgeBucket> buckets;
  /// Sequences of length 0, evaluated as a single zero position.
  std::size_t empty_sequences = 0;

  /// Zero positions added by padding, summed over edges.
  std::size_t padded_positions() const;
};

inline const std::vector<std::size_t> kDefaultBucketBoundaries = {8, 16, 32, 64, 128};

/// Assigns every edge to the smallest boundary >= its length. Longer
/// sequences go to an overflow bucket sized to the longest one. Boundaries
/// must be strictly increasing and positive; capacities below 3 are raised
/// to 3 so the width-3 convolution always has one output position.
EdgeBatches bucketize_edges(const SequenceStore& seqs, std::span<const std::size_t> boundaries);

/// Padding positions if every sequence were padded to the global maximum.
std::size_t pad_to_max_positions(const SequenceStore& seqs);

}  // namespace lgcn
