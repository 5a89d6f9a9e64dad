#include "lgcn/transport.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lgcn/rng.hpp"

namespace lgcn::transport {

std::array<double, kProfileWidth> aggregate_profile(std::span<const double> weekly) {
  if (weekly.size() != kHoursPerWeek * kChannels) {
    throw std::invalid_argument("weekly profile must hold 168 x 2 values");
  }
  std::array<double, kProfileWidth> out{};
  for (std::size_t h = 0; h < kHoursPerWeek; ++h) {
    const std::size_t bin = (h % 24) / 2;
    for (std::size_t c = 0; c < kChannels; ++c) out[bin * kChannels + c] += weekly[h * kChannels + c];
  }
  for (double& x : out) x /= 14.0;  // 7 days x 2 hours per bin
  return out;
}

namespace {

// Hour-of-day activity shape per class, values in (0, 1).
double class_template(int cls, std::size_t hour) {
  const double t = 2.0 * std::numbers::pi * static_cast<double>(hour) / 24.0;
  switch (cls) {
    case 0: return 0.5 + 0.4 * std::cos(t - 2.0 * std::numbers::pi * 20.0 / 24.0);  // evenings
    case 1: return 0.5 + 0.4 * std::cos(t - 2.0 * std::numbers::pi * 12.0 / 24.0);  // midday
    default: return 0.5 + 0.4 * std::cos(t - 2.0 * std::numbers::pi * 6.0 / 24.0);  // early
  }
}

int draw_class(CounterRng& rng) {
  const double u = rng.uniform() * 9.0;
  return u < 5.0 ? 0 : (u < 8.0 ? 1 : 2);
}

}  // namespace

Multigraph generate_toy(const ToyConfig& cfg) {
  if (cfg.n_vertices < 3) throw std::invalid_argument("toy graph needs at least 3 vertices");
  if (cfg.n_edges < 2 * cfg.n_vertices) {
    throw std::invalid_argument("toy graph needs at least 2 edges per vertex");
  }
  CounterRng rng(cfg.seed, "transport-toy");
  const std::size_t n = cfg.n_vertices;

  VertexTable vt;
  vt.num_features = kNodeFeatures;
  vt.labels.resize(n);
  for (auto& y : vt.labels) y = draw_class(rng);
  vt.features.resize(n * kNodeFeatures);
  for (auto& x : vt.features) x = rng.uniform();

  auto other = [&](std::size_t v) {
    std::size_t u = rng.below(n - 1);
    return u >= v ? u + 1 : u;
  };
  std::vector<MultiEdge> edges;
  edges.reserve(cfg.n_edges);
  for (std::size_t v = 0; v < n; ++v) {
    edges.push_back({static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(other(v))});
    edges.push_back({static_cast<std::uint32_t>(other(v)), static_cast<std::uint32_t>(v)});
  }
  while (edges.size() < cfg.n_edges) {
    const auto s = rng.below(n);
    edges.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(other(s))});
  }

  SequenceStore seqs(kProfileWidth);
  std::vector<double> weekly(kHoursPerWeek * kChannels);
  for (const auto& e : edges) {
    const int ride_cls = cfg.class_correlated ? vt.labels[e.dst] : draw_class(rng);
    const int tip_cls = cfg.class_correlated ? vt.labels[e.src] : draw_class(rng);
    const double volume = 0.3 + 0.7 * rng.uniform();
    for (std::size_t h = 0; h < kHoursPerWeek; ++h) {
      const std::size_t hour = h % 24;
      weekly[h * 2] = volume * class_template(ride_cls, hour) + rng.normal(0.0, cfg.noise);
      weekly[h * 2 + 1] = class_template(tip_cls, hour) + rng.normal(0.0, cfg.noise);
    }
    const auto profile = aggregate_profile(weekly);
    seqs.append(profile);
  }
  std::vector<EdgeMeta> metadata(edges.size());
  DatasetInfo info;
  info.seed = cfg.seed;
  return Multigraph(DatasetKind::Transport, std::move(vt), std::move(edges), std::move(seqs),
                    std::move(metadata), info);
}

}  // namespace lgcn::transport
