#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lgcn/graph.hpp"

namespace lgcn::transport {

inline constexpr std::size_t kHoursPerWeek = 168;
inline constexpr std::size_t kChannels = 2;  // ride count, tip
inline constexpr std::size_t kBins = 12;     // two-hour bins
inline constexpr std::size_t kProfileWidth = kBins * kChannels;
inline constexpr std::size_t kNodeFeatures = 6;

/// Folds a weekly profile (168 x 2, hour-of-week major) into the average
/// 24-hour cycle with two-hour bins; output is 12 x 2, bin major.
std::array<double, kProfileWidth> aggregate_profile(std::span<const double> weekly);

/// Synthetic stand-in for the taxi network: every vertex gets at least one
/// in- and one out-edge, classes drawn with ratio 5:3:1 (R, C, M), node
/// features i.i.d. uniform and class independent. With `class_correlated`
/// the ride profile of u->v follows the class template of v and the tip
/// profile that of u; otherwise templates are picked at random.
struct ToyConfig {
  std::size_t n_vertices = 300;
  std::size_t n_edges = 1500;
  bool class_correlated = true;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

Multigraph generate_toy(const ToyConfig& cfg);

}  // namespace lgcn::transport
