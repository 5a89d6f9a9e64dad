#include "lgcn/generator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <unordered_set>

namespace lgcn::gen {

void GenConfig::validate() const {
  if (!(fraud_ratio >= 0.0 && fraud_ratio < 1.0)) {
    throw std::invalid_argument("fraud_ratio must lie in [0, 1)");
  }
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) {
    throw std::invalid_argument("mutation_prob must lie in [0, 1]");
  }
  if (n_vertices_init == 0) throw std::invalid_argument("n_vertices_init must be positive");
  const double max_pairs = static_cast<double>(n_vertices_init) * static_cast<double>(n_vertices_init);
  if (static_cast<double>(n_edges_target) > max_pairs) {
    throw std::invalid_argument("n_edges_target exceeds the number of ordered vertex pairs");
  }
}

void to_json(nlohmann::json& j, const GenConfig& cfg) {
  j = nlohmann::json{{"n_vertices_init", cfg.n_vertices_init},
                     {"n_edges_target", cfg.n_edges_target},
                     {"fraud_ratio", cfg.fraud_ratio},
                     {"two_hop", cfg.two_hop},
                     {"seed", cfg.seed},
                     {"mutation_prob", cfg.mutation_prob}};
}

void from_json(const nlohmann::json& j, GenConfig& cfg) {
  static const std::unordered_set<std::string> known{
      "n_vertices_init", "n_edges_target", "fraud_ratio", "two_hop", "seed", "mutation_prob"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown generator field '" + key + "'");
  }
  cfg.n_vertices_init = j.value("n_vertices_init", cfg.n_vertices_init);
  cfg.n_edges_target = j.value("n_edges_target", cfg.n_edges_target);
  cfg.fraud_ratio = j.value("fraud_ratio", cfg.fraud_ratio);
  cfg.two_hop = j.value("two_hop", cfg.two_hop);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.mutation_prob = j.value("mutation_prob", cfg.mutation_prob);
}

AttachmentState::AttachmentState(std::size_t n_vertices)
    : degrees_(n_vertices, 0), tree_(n_vertices + 1, 0) {
  top_bit_ = n_vertices == 0 ? 1 : std::bit_floor(n_vertices);
  for (std::size_t v = 0; v < n_vertices; ++v) bump(v, 1);
}

void AttachmentState::bump(std::size_t v, std::uint64_t delta) {
  total_ += delta;
  for (std::size_t i = v + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
}

std::size_t AttachmentState::draw(CounterRng& rng) const {
  // Smallest index whose inclusive prefix sum exceeds the target.
  std::uint64_t target = rng.below(total_);
  std::size_t pos = 0;
  for (std::size_t step = top_bit_; step > 0; step >>= 1) {
    const std::size_t next = pos + step;
    if (next < tree_.size() && tree_[next] <= target) {
      pos = next;
      target -= tree_[next];
    }
  }
  return pos;
}

void AttachmentState::add_edge(std::size_t src, std::size_t dst) {
  ++degrees_[src];
  ++degrees_[dst];
  bump(src, 1);
  bump(dst, 1);
}

Skeleton generate_skeleton(const GenConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_vertices_init;
  CounterRng rng(cfg.seed, "skeleton");
  AttachmentState state(n);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(cfg.n_edges_target * 2);
  std::vector<MultiEdge> sampled;
  sampled.reserve(cfg.n_edges_target);
  while (sampled.size() < cfg.n_edges_target) {
    const std::size_t i = state.draw(rng);
    const std::size_t j = state.draw(rng);
    if (!seen.insert(static_cast<std::uint64_t>(i) * n + j).second) continue;
    sampled.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
    state.add_edge(i, j);
  }

  Skeleton out;
  out.sampled_pairs = sampled.size();
  std::vector<std::size_t> degree(n, 0);
  std::vector<MultiEdge> kept;
  kept.reserve(sampled.size());
  for (const auto& e : sampled) {
    if (e.src == e.dst) {
      ++out.self_loops_removed;
      continue;
    }
    ++degree[e.src];
    ++degree[e.dst];
    kept.push_back(e);
  }
  std::vector<std::uint32_t> compact(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    if (degree[v] == 0) continue;
    compact[v] = static_cast<std::uint32_t>(out.original_ids.size());
    out.original_ids.push_back(static_cast<std::int64_t>(v));
  }
  out.n_vertices = out.original_ids.size();
  out.edges.reserve(kept.size());
  for (const auto& e : kept) out.edges.push_back({compact[e.src], compact[e.dst]});
  return out;
}

std::vector<int> assign_classes(std::size_t n, double fraud_ratio, std::uint64_t seed) {
  CounterRng rng(seed, "classes");
  std::vector<int> labels(n);
  for (auto& y : labels) y = rng.bernoulli(fraud_ratio) ? kFraud : kNormal;
  return labels;
}

namespace {

double positive_normal(CounterRng& rng, double mean, double sd) {
  double x;
  do {
    x = rng.normal(mean, sd);
  } while (x <= 0.0);
  return x;
}

}  // namespace

std::vector<Transaction> make_transactions(int trans_type, FraudType fraud, CounterRng& rng,
                                           double mutation_prob, TransactionStats* stats) {
  std::vector<Transaction> base;
  if (trans_type == 1 || trans_type == 2) {
    const double amount = trans_type == 1 ? positive_normal(rng, 30.0, 5.0)
                                          : positive_normal(rng, 200.0, 15.0);
    const double period = (trans_type == 1 ? 7.0 : 30.0) * kMinutesPerDay;
    base.reserve(static_cast<std::size_t>(kYearMinutes / period) + 2);
    for (double t = 0.0; t < kYearMinutes; t += period + rng.normal(0.0, 2.0)) {
      base.push_back({t, amount});
    }
    if (fraud == FraudType::A) {
      std::vector<Transaction> kept;
      kept.reserve(base.size());
      for (const auto& tx : base) {
        if (!rng.bernoulli(mutation_prob)) kept.push_back(tx);
      }
      if (kept.empty()) kept.push_back(base.front());
      return kept;
    }
    if (fraud == FraudType::B) {
      std::vector<Transaction> doubled;
      doubled.reserve(base.size() * 2);
      for (const auto& tx : base) {
        doubled.push_back(tx);
        if (rng.bernoulli(mutation_prob)) {
          doubled.push_back({tx.time + static_cast<double>(rng.uniform_int(1, 1440)), tx.amount});
        }
      }
      return doubled;
    }
    return base;
  }
  if (trans_type != 3) throw std::invalid_argument("trans_type must be 1, 2 or 3");

  double max_amount;
  do {
    max_amount = std::round(rng.normal(220.0, 100.0));
  } while (max_amount < 10.0);
  const double base_days = std::max(1.0, std::round(rng.normal(10.0, 10.0)));
  for (double t = 0.0; t < kYearMinutes;) {
    double amount = rng.truncated_exponential(1.0 / 3000.0, 10.0, max_amount);
    if (fraud != FraudType::None && rng.bernoulli(mutation_prob)) {
      amount = fraud == FraudType::A ? amount / 10.0 : amount * 5.0;
    }
    base.push_back({t, amount});
    double dt = base_days * kMinutesPerDay + rng.normal(0.0, base_days / 2.0) * kMinutesPerDay +
                static_cast<double>(rng.uniform_int(1, 24)) * 60.0 +
                static_cast<double>(rng.uniform_int(1, 60));
    if (dt < 1.0) {
      dt = 1.0;
      if (stats) ++stats->dt_clamps;
    }
    t += dt;
  }
  return base;
}

FraudType one_hop_fraud(int src_label, int dst_label) {
  if (src_label == kFraud && dst_label == kNormal) return FraudType::A;
  if (src_label == kNormal && dst_label == kFraud) return FraudType::B;
  return FraudType::None;
}

TwoHopAssignment apply_two_hop(std::size_t n_vertices, std::span<const MultiEdge> edges,
                               std::span<const int> labels) {
  TwoHopAssignment out;
  out.mule.assign(n_vertices, 0);
  for (const auto& e : edges) {
    if (labels[e.src] == kFraud && labels[e.dst] == kNormal) out.mule[e.dst] = 1;
    if (labels[e.dst] == kFraud && labels[e.src] == kNormal) out.mule[e.src] = 1;
  }
  out.mule_count = static_cast<std::size_t>(std::count(out.mule.begin(), out.mule.end(), 1));
  return out;
}

FraudType two_hop_fraud(int src_label, bool src_mule, int dst_label, bool dst_mule) {
  const bool src_plain = src_label == kNormal && !src_mule;
  const bool dst_plain = dst_label == kNormal && !dst_mule;
  if (src_mule && dst_plain) return FraudType::A;
  if (src_plain && dst_mule) return FraudType::B;
  return FraudType::None;
}

std::vector<double> sector_weights() {
  std::vector<double> w(4);
  for (int s = 0; s < 4; ++s) w[s] = 2.0 + std::pow(std::sin(static_cast<double>(s)), 2);
  return w;
}

std::vector<double> region_weights() {
  std::vector<double> w(5);
  for (int r = 0; r < 5; ++r) w[r] = 3.0 + std::pow(std::sin(static_cast<double>(r + 1)), 2);
  return w;
}

namespace {

std::size_t draw_category(CounterRng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

}  // namespace

std::vector<double> generate_node_features(std::size_t n, std::uint64_t seed) {
  const CounterRng base(seed, "features");
  const auto sectors = sector_weights();
  const auto regions = region_weights();
  std::vector<double> x(n * kFinancialFeatures, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    CounterRng rng = base.substream(v);
    double* row = x.data() + v * kFinancialFeatures;
    row[0] = rng.truncated_exponential(0.005, 10.0, 1500.0);
    row[1] = rng.truncated_exponential(5e-5, 1e4, 1e7);
    row[2] = row[1] - rng.normal(0.0, 0.5 * row[1]);
    row[3] = rng.truncated_exponential(3e-5, 1e5, 1e7);
    row[4 + draw_category(rng, sectors)] = 1.0;
    row[8 + draw_category(rng, regions)] = 1.0;
  }
  return x;
}

Multigraph populate_edges(const Skeleton& skeleton, std::vector<int> labels,
                          std::vector<std::uint8_t> mule, const GenConfig& cfg) {
  const std::size_t n = skeleton.n_vertices;
  const bool two_hop = !mule.empty();
  const CounterRng base(cfg.seed, "edges");
  SequenceStore seqs(2);
  seqs.reserve(skeleton.edges.size(), skeleton.edges.size() * 110);
  std::vector<EdgeMeta> metadata(skeleton.edges.size());
  TransactionStats stats;
  std::vector<double> flat;
  for (std::size_t e = 0; e < skeleton.edges.size(); ++e) {
    const auto& edge = skeleton.edges[e];
    CounterRng rng = base.substream(e);
    auto& m = metadata[e];
    m.trans_type = 1 + static_cast<int>(rng.below(3));
    m.fraud = two_hop ? two_hop_fraud(labels[edge.src], mule[edge.src] != 0, labels[edge.dst],
                                      mule[edge.dst] != 0)
                      : one_hop_fraud(labels[edge.src], labels[edge.dst]);
    const auto txs = make_transactions(m.trans_type, m.fraud, rng, cfg.mutation_prob, &stats);
    flat.clear();
    for (const auto& tx : txs) {
      flat.push_back(tx.time);
      flat.push_back(tx.amount);
    }
    seqs.append(flat);
  }

  VertexTable vt;
  vt.num_features = kFinancialFeatures;
  vt.features = generate_node_features(n, cfg.seed);
  vt.labels = std::move(labels);  // mules keep their public N label
  vt.original_ids = skeleton.original_ids;
  DatasetInfo info;
  info.seed = cfg.seed;
  info.fraud_ratio = cfg.fraud_ratio;
  info.n_vertices_init = cfg.n_vertices_init;
  info.n_edges_target = cfg.n_edges_target;
  info.dt_clamp_count = stats.dt_clamps;
  const NormalizationConstants defaults;
  info.time_log_scale = defaults.time_log_scale;
  info.amount_log_scale = defaults.amount_log_scale;
  if (two_hop) {
    info.mule_count = static_cast<std::size_t>(std::count(mule.begin(), mule.end(), 1));
    vt.hidden_class = std::move(mule);
  }
  return Multigraph(two_hop ? DatasetKind::Financial2Hop : DatasetKind::Financial1Hop,
                    std::move(vt), skeleton.edges, std::move(seqs), std::move(metadata), info);
}

Multigraph generate_financial(const GenConfig& cfg) {
  cfg.validate();
  const auto initial_labels = assign_classes(cfg.n_vertices_init, cfg.fraud_ratio, cfg.seed);
  const auto skeleton = generate_skeleton(cfg);
  std::vector<int> labels(skeleton.n_vertices);
  for (std::size_t v = 0; v < skeleton.n_vertices; ++v) {
    labels[v] = initial_labels[static_cast<std::size_t>(skeleton.original_ids[v])];
  }
  std::vector<std::uint8_t> mule;
  if (cfg.two_hop) mule = apply_two_hop(skeleton.n_vertices, skeleton.edges, labels).mule;
  return populate_edges(skeleton, std::move(labels), std::move(mule), cfg);
}

void min_max_scale(std::vector<double>& features, std::size_t n_cols) {
  if (n_cols == 0 || features.empty()) return;
  const std::size_t n = features.size() / n_cols;
  for (std::size_t c = 0; c < n_cols; ++c) {
    double lo = features[c], hi = features[c];
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, features[i * n_cols + c]);
      hi = std::max(hi, features[i * n_cols + c]);
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
      double& x = features[i * n_cols + c];
      x = span > 0.0 ? (x - lo) / span : 0.0;
    }
  }
}

Multigraph normalize_dataset(const Multigraph& raw, NormalizationConstants constants) {
  if (raw.info().normalized) throw std::invalid_argument("graph is already normalized");
  DatasetInfo info = raw.info();
  if (info.time_log_scale > 0.0) constants.time_log_scale = info.time_log_scale;
  if (info.amount_log_scale > 0.0) constants.amount_log_scale = info.amount_log_scale;
  info.time_log_scale = constants.time_log_scale;
  info.amount_log_scale = constants.amount_log_scale;
  info.normalized = true;

  VertexTable vt = raw.vertices();
  min_max_scale(vt.features, vt.num_features);

  const auto& src = raw.sequences();
  SequenceStore seqs(src.attr_dim());
  if (!is_financial(raw.kind())) {
    seqs = src;
  } else {
    seqs.reserve(raw.num_edges(), src.values().size());
    std::vector<double> flat;
    for (std::size_t e = 0; e < raw.num_edges(); ++e) {
      const auto s = src.sequence(e);
      const std::size_t len = src.length(e);
      flat.clear();
      for (std::size_t k = 1; k < len; ++k) {
        const double dt = s[2 * k] - s[2 * (k - 1)];
        flat.push_back(std::log(dt) / constants.time_log_scale);
        flat.push_back(std::log(s[2 * k + 1]) / constants.amount_log_scale);
      }
      seqs.append(flat);
    }
  }
  return Multigraph(raw.kind(), std::move(vt), raw.edges(), std::move(seqs), raw.all_metadata(),
                    info);
}

}  // namespace lgcn::gen
