#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "lgcn/graph.hpp"
#include "lgcn/models.hpp"
#include "lgcn/tensor.hpp"

namespace lgcn::fixtures {

// Direct reference implementations used to cross-check the library.

/// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
inline double brute_auc(std::span<const double> scores, std::span<const int> labels,
                        std::span<const std::size_t> mask) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a : mask) {
    if (labels[a] != 1) continue;
    for (std::size_t b : mask) {
      if (labels[b] == 1) continue;
      ++pairs;
      if (scores[a] > scores[b]) wins += 1.0;
      if (scores[a] == scores[b]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

inline int brute_argmax(const ad::Tensor& logits, std::size_t row) {
  int best = 0;
  for (std::size_t k = 1; k < logits.cols(); ++k) {
    if (logits.at(row, k) > logits.at(row, best)) best = static_cast<int>(k);
  }
  return best;
}

inline double brute_accuracy(const ad::Tensor& logits, std::span<const int> labels,
                             std::span<const std::size_t> mask) {
  std::size_t hits = 0;
  for (std::size_t i : mask) hits += brute_argmax(logits, i) == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

/// Mean over classes of F1 from explicit confusion counts, written as
/// 2TP / (2TP + FP + FN) so the result is exactly reproducible.
inline double brute_macro_f1(std::span<const int> predictions, std::span<const int> labels,
                             std::span<const std::size_t> mask, std::size_t classes) {
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const int k = static_cast<int>(c);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i : mask) {
      if (predictions[i] == k && labels[i] == k) ++tp;
      if (predictions[i] == k && labels[i] != k) ++fp;
      if (predictions[i] != k && labels[i] == k) ++fn;
    }
    if (tp + fp + fn == 0) continue;
    total += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  }
  return total / static_cast<double>(classes);
}

/// Same quantity through precision and recall.
inline double precision_recall_macro_f1(std::span<const int> predictions, std::span<const int> labels,
                                        std::span<const std::size_t> mask, std::size_t classes) {
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const int k = static_cast<int>(c);
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i : mask) {
      if (predictions[i] == k && labels[i] == k) ++tp;
      if (predictions[i] == k && labels[i] != k) ++fp;
      if (predictions[i] != k && labels[i] == k) ++fn;
    }
    if (tp == 0) continue;
    const double p = tp / (tp + fp), r = tp / (tp + fn);
    total += 2.0 * p * r / (p + r);
  }
  return total / static_cast<double>(classes);
}

/// Dense normalized adjacency times h times W plus b, before activation.
inline ad::Tensor dense_gcn_preactivation(const Multigraph& g, const ad::Tensor& h, const ad::Tensor& weight,
                                          const ad::Tensor& bias) {
  const std::size_t n = g.num_vertices();
  std::vector<double> adj(n * n, 0.0);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    adj[g.edge(e).src * n + g.edge(e).dst] = 1.0;
    adj[g.edge(e).dst * n + g.edge(e).src] = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) adj[i * n + i] = 1.0;
  ad::Tensor out({n, weight.cols()});
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += adj[i * n + j];
    for (std::size_t o = 0; o < weight.cols(); ++o) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t f = 0; f < h.cols(); ++f) s += adj[i * n + j] / deg * h.at(j, f) * weight.at(f, o);
      }
      out.at(i, o) = s + bias[o];
    }
  }
  return out;
}

struct RelationMessage {
  std::size_t from = 0;
  std::vector<double> weights;  // one entry per latent relation
};

/// Messages arriving at every vertex: the self relation first, then one
/// per incident edge with the edge latent placed in the canonical or the
/// inverse half.
inline std::vector<std::vector<RelationMessage>> relation_messages(const Multigraph& g, const ad::Tensor& latent,
                                                                   const ad::Tensor& self_weight,
                                                                   DirectionConvention direction) {
  const std::size_t n = g.num_vertices(), l = latent.cols();
  std::vector<std::vector<RelationMessage>> in(n);
  for (std::size_t i = 0; i < n; ++i) {
    in[i].push_back({i, std::vector<double>(self_weight.values().begin(), self_weight.values().end())});
  }
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    std::vector<double> first(2 * l, 0.0), second(2 * l, 0.0);
    for (std::size_t r = 0; r < l; ++r) {
      first[r] = latent.at(e, r);
      second[l + r] = latent.at(e, r);
    }
    const std::size_t u = g.edge(e).src, v = g.edge(e).dst;
    if (direction == DirectionConvention::TargetCanonical) {
      in[v].push_back({u, first});
      in[u].push_back({v, second});
    } else {
      in[u].push_back({v, first});
      in[v].push_back({u, second});
    }
  }
  return in;
}

inline double relation_normalizer(const std::vector<RelationMessage>& msgs) {
  double c = 0.0;
  for (const auto& m : msgs) {
    for (double w : m.weights) c += w;
  }
  return std::max(c, kNormalizerFloor);
}

/// sum_r w^r * (h_from W_r) with W_r the r-th block of F rows of W.
inline std::vector<double> per_relation_product(const RelationMessage& m, const ad::Tensor& h, const ad::Tensor& w) {
  const std::size_t f = h.cols();
  std::vector<double> out(w.cols(), 0.0);
  for (std::size_t r = 0; r < m.weights.size(); ++r) {
    for (std::size_t o = 0; o < w.cols(); ++o) {
      double s = 0.0;
      for (std::size_t k = 0; k < f; ++k) s += h.at(m.from, k) * w.at(r * f + k, o);
      out[o] += m.weights[r] * s;
    }
  }
  return out;
}

/// Latent-relation layer written as a loop over relations, before activation.
inline ad::Tensor per_relation_lgcn(const Multigraph& g, const ad::Tensor& h, const ad::Tensor& latent,
                                    const ad::Tensor& self_weight, const ad::Tensor& weight, const ad::Tensor& bias,
                                    DirectionConvention direction) {
  const auto in = relation_messages(g, latent, self_weight, direction);
  ad::Tensor out({g.num_vertices(), weight.cols()});
  for (std::size_t i = 0; i < g.num_vertices(); ++i) {
    const double c = relation_normalizer(in[i]);
    for (const auto& m : in[i]) {
      const auto p = per_relation_product(m, h, weight);
      for (std::size_t o = 0; o < p.size(); ++o) out.at(i, o) += p[o];
    }
    for (std::size_t o = 0; o < weight.cols(); ++o) out.at(i, o) = out.at(i, o) / c + bias[o];
  }
  return out;
}

/// Two-matrix variant: every message goes through its own small MLP
/// before the sum.
inline ad::Tensor per_relation_lgcn_plus(const Multigraph& g, const ad::Tensor& h, const ad::Tensor& latent,
                                         const ad::Tensor& self_weight, const ad::Tensor& weight1,
                                         const ad::Tensor& bias1, const ad::Tensor& weight2, const ad::Tensor& bias2,
                                         DirectionConvention direction) {
  const auto in = relation_messages(g, latent, self_weight, direction);
  ad::Tensor out({g.num_vertices(), weight2.cols()});
  for (std::size_t i = 0; i < g.num_vertices(); ++i) {
    const double c = relation_normalizer(in[i]);
    for (const auto& m : in[i]) {
      auto inner = per_relation_product(m, h, weight1);
      for (std::size_t q = 0; q < inner.size(); ++q) inner[q] = std::max(0.0, inner[q] / c + bias1[q]);
      for (std::size_t o = 0; o < weight2.cols(); ++o) {
        double s = bias2[o];
        for (std::size_t q = 0; q < inner.size(); ++q) s += inner[q] * weight2.at(q, o);
        out.at(i, o) += s;
      }
    }
  }
  return out;
}

}  // namespace lgcn::fixtures
