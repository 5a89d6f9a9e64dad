#include "lgcn/batching.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace lgcn {

std::size_t EdgeBatches::padded_positions() const {
  std::size_t total = 0;
  for (const auto& b : buckets) {
    for (auto len : b.lengths) total += b.capacity - len;
  }
  return total;
}

EdgeBatches bucketize_edges(const SequenceStore& seqs, std::span<const std::size_t> boundaries) {
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (boundaries[i] == 0 || (i > 0 && boundaries[i] <= boundaries[i - 1])) {
      throw std::invalid_argument("bucket boundaries must be positive and strictly increasing");
    }
  }
  const std::size_t m = seqs.num_sequences();
  const std::size_t dim = seqs.attr_dim();
  std::size_t longest = 0;
  for (std::size_t e = 0; e < m; ++e) longest = std::max(longest, seqs.length(e));

  std::vector<std::size_t> caps(boundaries.begin(), boundaries.end());
  if (caps.empty() || caps.back() < longest) caps.push_back(longest);

  EdgeBatches out;
  out.attr_dim = dim;
  out.num_edges = m;
  std::vector<EdgeBucket> buckets(caps.size());
  for (std::size_t i = 0; i < caps.size(); ++i) buckets[i].capacity = std::max(caps[i], kMinSequenceCapacity);

  std::vector<std::size_t> slot(m);
  for (std::size_t e = 0; e < m; ++e) {
    const std::size_t len = seqs.length(e);
    if (len == 0) ++out.empty_sequences;
    const auto it = std::lower_bound(caps.begin(), caps.end(), len);
    slot[e] = static_cast<std::size_t>(it - caps.begin());
    buckets[slot[e]].edge_ids.push_back(static_cast<std::uint32_t>(e));
    buckets[slot[e]].lengths.push_back(static_cast<std::uint32_t>(len));
  }
  for (auto& b : buckets) {
    if (b.edge_ids.empty()) continue;
    b.padded.assign(b.size() * b.capacity * dim, 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto src = seqs.sequence(b.edge_ids[i]);
      std::copy(src.begin(), src.end(), b.padded.begin() + static_cast<std::ptrdiff_t>(i * b.capacity * dim));
    }
    out.buckets.push_back(std::move(b));
  }
  return out;
}

std::size_t pad_to_max_positions(const SequenceStore& seqs) {
  std::size_t longest = 0;
  for (std::size_t e = 0; e < seqs.num_sequences(); ++e) longest = std::max(longest, seqs.length(e));
  return longest * seqs.num_sequences() - seqs.total_length();
}

}  // namespace lgcn
