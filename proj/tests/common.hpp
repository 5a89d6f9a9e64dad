#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lgcn/graph.hpp"
#include "lgcn/ops.hpp"
#include "lgcn/rng.hpp"
#include "lgcn/tape.hpp"

namespace lgcn::fixtures {

inline ad::Tensor random_tensor(ad::Shape shape, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  ad::Tensor t(std::move(shape));
  for (double& v : t.values()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

struct RandomGraphOptions {
  std::size_t vertices = 12;
  std::size_t edges = 30;
  std::size_t features = 13;
  std::size_t max_length = 12;
  std::size_t attr_dim = 2;
  std::size_t classes = 2;
  DatasetKind kind = DatasetKind::Financial1Hop;
  bool normalized = true;
  bool metadata = true;
};

/// Random multigraph without self-loops. Sequence values lie in [0, 1).
inline Multigraph random_graph(const RandomGraphOptions& o, std::uint64_t seed) {
  CounterRng rng(seed, "test-graph");
  VertexTable vt;
  vt.num_features = o.features;
  for (std::size_t i = 0; i < o.vertices * o.features; ++i) vt.features.push_back(rng.uniform());
  for (std::size_t v = 0; v < o.vertices; ++v) vt.labels.push_back(static_cast<int>(rng.below(o.classes)));
  std::vector<MultiEdge> edges;
  std::vector<EdgeMeta> meta;
  SequenceStore seqs(o.attr_dim);
  for (std::size_t e = 0; e < o.edges; ++e) {
    const auto src = static_cast<std::uint32_t>(rng.below(o.vertices));
    auto dst = static_cast<std::uint32_t>(rng.below(o.vertices - 1));
    if (dst >= src) ++dst;
    edges.push_back({src, dst});
    EdgeMeta m;
    if (o.metadata) {
      m.trans_type = 1 + static_cast<int>(rng.below(3));
      m.fraud = static_cast<FraudType>(rng.below(3));
    }
    meta.push_back(m);
    const std::size_t len = 1 + rng.below(o.max_length);
    std::vector<double> flat(len * o.attr_dim);
    for (double& v : flat) v = rng.uniform();
    seqs.append(flat);
  }
  DatasetInfo info;
  info.seed = seed;
  info.normalized = o.normalized;
  return Multigraph(o.kind, std::move(vt), std::move(edges), std::move(seqs), std::move(meta), info);
}

/// Records sum(x * weights) so any tensor output becomes a scalar loss.
inline ad::Var weighted_total(ad::Tape& t, ad::Var x, std::shared_ptr<const ad::Tensor> weights) {
  const ad::Tensor& X = t.value(x);
  double s = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) s += X[i] * (*weights)[i];
  const ad::Var ins[] = {x};
  return t.record("weighted_total", ad::Tensor::scalar(s), ins, [x, weights](ad::Tape& tp, const ad::Tensor& g) {
    ad::Tensor& dx = tp.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[0] * (*weights)[i];
  });
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates at a kink
};

/// One-sided differences that disagree beyond curvature noise: a relu or
/// max switched branch inside the step.
inline bool at_kink(double forward, double backward) {
  return std::abs(forward - backward) > 1e-4 * std::max(std::abs(forward), std::abs(backward)) + 1e-8;
}

/// Central-difference check of every input coordinate. `build` records a
/// scalar on the tape from the given leaves. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor). Coordinates
/// whose one-sided differences disagree sit at a non-differentiable point
/// and are skipped.
inline GradCheckResult check_gradients(
    std::vector<ad::Tensor> inputs, const std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>& build,
    double h = 1e-5, double floor = 1e-6) {
  auto evaluate = [&](const std::vector<ad::Tensor>& values) {
    ad::Tape t;
    std::vector<ad::Var> leaves;
    for (const auto& v : values) leaves.push_back(t.variable(v));
    return t.value(build(t, leaves))[0];
  };
  std::vector<ad::Tensor> analytic;
  {
    ad::Tape t;
    std::vector<ad::Var> leaves;
    for (const auto& v : inputs) leaves.push_back(t.variable(v));
    const ad::Var out = build(t, leaves);
    t.backward(out);
    for (const auto& leaf : leaves) analytic.push_back(t.grad(leaf));
  }
  const double f0 = evaluate(inputs);
  GradCheckResult r;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double x0 = inputs[k][i];
      inputs[k][i] = x0 + h;
      const double fp = evaluate(inputs);
      inputs[k][i] = x0 - h;
      const double fm = evaluate(inputs);
      inputs[k][i] = x0;
      const double forward = (fp - f0) / h, backward = (f0 - fm) / h;
      if (at_kink(forward, backward)) {
        ++r.skipped;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      r.max_rel_error = std::max(r.max_rel_error, err);
      ++r.checked;
    }
  }
  return r;
}

}  // namespace lgcn::fixtures
