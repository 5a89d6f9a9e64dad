#include "lgcn/models.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <unordered_set>

#include "lgcn/transport.hpp"

namespace lgcn {

using ad::Tape;
using ad::Tensor;
using ad::Var;

std::string_view to_string(Family f) {
  switch (f) {
    case Family::GCN: return "gcn";
    case Family::DVE: return "dve";
    case Family::LGCN: return "lgcn";
    case Family::LGCNPlus: return "lgcn+";
  }
  return "?";
}

Family parse_family(std::string_view text) {
  if (text == "gcn") return Family::GCN;
  if (text == "dve") return Family::DVE;
  if (text == "lgcn") return Family::LGCN;
  if (text == "lgcn+") return Family::LGCNPlus;
  throw std::invalid_argument("unknown model family '" + std::string(text) + "'");
}

std::string_view to_string(GammaKind k) { return k == GammaKind::Transactions ? "transactions" : "transport"; }

GammaKind parse_gamma_kind(std::string_view text) {
  if (text == "transactions") return GammaKind::Transactions;
  if (text == "transport") return GammaKind::Transport;
  throw std::invalid_argument("unknown gamma kind '" + std::string(text) + "'");
}

std::string_view to_string(DirectionConvention d) {
  return d == DirectionConvention::TargetCanonical ? "target-canonical" : "source-canonical";
}

DirectionConvention parse_direction(std::string_view text) {
  if (text == "target-canonical") return DirectionConvention::TargetCanonical;
  if (text == "source-canonical") return DirectionConvention::SourceCanonical;
  throw std::invalid_argument("unknown direction convention '" + std::string(text) + "'");
}

std::string_view to_string(DveMerge m) { return m == DveMerge::Concat ? "concat" : "sum"; }

DveMerge parse_dve_merge(std::string_view text) {
  if (text == "concat") return DveMerge::Concat;
  if (text == "sum") return DveMerge::Sum;
  throw std::invalid_argument("unknown DVE merge '" + std::string(text) + "'");
}

std::string ModelSpec::name() const {
  switch (family) {
    case Family::GCN: return "GCN";
    case Family::DVE: return "DVE";
    case Family::LGCN: return "L" + std::to_string(gamma.latent) + "-GCN";
    case Family::LGCNPlus: return "L" + std::to_string(gamma.latent) + "-GCN+";
  }
  return "?";
}

void ModelSpec::validate() const {
  if (in_features == 0 || hidden == 0 || classes < 2) {
    throw std::invalid_argument("model needs input features, a hidden size and at least 2 classes");
  }
  if (!(layer_dropout >= 0.0 && layer_dropout < 1.0) || !(gamma.dropout >= 0.0 && gamma.dropout < 1.0)) {
    throw std::invalid_argument("dropout probabilities must lie in [0, 1)");
  }
  if (uses_gamma()) {
    if (gamma.latent == 0) throw std::invalid_argument("latent size L must be at least 1");
    if (gamma.kind == GammaKind::Transactions && (gamma.kernels == 0 || gamma.channels == 0)) {
      throw std::invalid_argument("gamma needs at least one kernel and one channel");
    }
    if (gamma.kind == GammaKind::Transport && gamma.input_width == 0) {
      throw std::invalid_argument("transport gamma needs a positive input width");
    }
  }
}

ModelSpec ModelSpec::financial(Family family, std::size_t latent) {
  ModelSpec s;
  s.family = family;
  s.gamma.latent = latent;
  return s;
}

ModelSpec ModelSpec::transport(Family family, std::size_t latent) {
  ModelSpec s;
  s.family = family;
  s.in_features = transport::kNodeFeatures;
  s.hidden = 6;
  s.classes = 3;
  s.gamma.kind = GammaKind::Transport;
  s.gamma.latent = latent;
  s.gamma.input_width = transport::kProfileWidth;
  s.gamma.dropout = 0.0;
  return s;
}

ModelSpec ModelSpec::from_name(std::string_view label, DatasetKind kind) {
  const bool fin = is_financial(kind);
  const std::size_t default_latent = fin ? 4 : 3;
  auto make = [&](Family f, std::size_t l) { return fin ? financial(f, l) : transport(f, l); };
  if (label == "GCN") return make(Family::GCN, default_latent);
  if (label == "DVE") return make(Family::DVE, default_latent);
  if (label.size() >= 5 && label[0] == 'L') {
    const auto dash = label.find('-');
    if (dash != std::string_view::npos && dash > 1) {
      const std::string digits(label.substr(1, dash - 1));
      const auto rest = label.substr(dash);
      if (digits.find_first_not_of("0123456789") == std::string::npos && (rest == "-GCN" || rest == "-GCN+")) {
        const std::size_t l = std::stoul(digits);
        if (l > 0) return make(rest == "-GCN" ? Family::LGCN : Family::LGCNPlus, l);
      }
    }
  }
  throw std::invalid_argument("unknown model label '" + std::string(label) +
                              "' (expected GCN, DVE, L<k>-GCN or L<k>-GCN+)");
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = nlohmann::json{{"family", to_string(s.family)},
                     {"in_features", s.in_features},
                     {"hidden", s.hidden},
                     {"classes", s.classes},
                     {"layer_dropout", s.layer_dropout},
                     {"direction", to_string(s.direction)},
                     {"shared_self_weight", s.shared_self_weight},
                     {"dve_merge", to_string(s.dve_merge)},
                     {"gamma",
                      {{"kind", to_string(s.gamma.kind)},
                       {"kernels", s.gamma.kernels},
                       {"channels", s.gamma.channels},
                       {"latent", s.gamma.latent},
                       {"input_width", s.gamma.input_width},
                       {"dropout", s.gamma.dropout}}}};
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::unordered_set<std::string>& known, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument(std::string("unknown ") + what + " field '" + key + "'");
  }
}

}  // namespace

void from_json(const nlohmann::json& j, ModelSpec& s) {
  reject_unknown(j,
                 {"family", "in_features", "hidden", "classes", "layer_dropout", "direction",
                  "shared_self_weight", "dve_merge", "gamma"},
                 "model");
  if (j.contains("family")) s.family = parse_family(j.at("family").get<std::string>());
  s.in_features = j.value("in_features", s.in_features);
  s.hidden = j.value("hidden", s.hidden);
  s.classes = j.value("classes", s.classes);
  s.layer_dropout = j.value("layer_dropout", s.layer_dropout);
  if (j.contains("direction")) s.direction = parse_direction(j.at("direction").get<std::string>());
  s.shared_self_weight = j.value("shared_self_weight", s.shared_self_weight);
  if (j.contains("dve_merge")) s.dve_merge = parse_dve_merge(j.at("dve_merge").get<std::string>());
  if (j.contains("gamma")) {
    const auto& g = j.at("gamma");
    reject_unknown(g, {"kind", "kernels", "channels", "latent", "input_width", "dropout"}, "gamma");
    if (g.contains("kind")) s.gamma.kind = parse_gamma_kind(g.at("kind").get<std::string>());
    s.gamma.kernels = g.value("kernels", s.gamma.kernels);
    s.gamma.channels = g.value("channels", s.gamma.channels);
    s.gamma.latent = g.value("latent", s.gamma.latent);
    s.gamma.input_width = g.value("input_width", s.gamma.input_width);
    s.gamma.dropout = g.value("dropout", s.gamma.dropout);
  }
  s.validate();
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

namespace {

void add_glorot(ad::ParameterSet& params, const std::string& name, ad::Shape shape, std::size_t fan_in,
                std::size_t fan_out, const CounterRng& init) {
  CounterRng rng = init.substream(stream_id(name));
  const double bound = glorot_bound(fan_in, fan_out);
  Tensor value(std::move(shape), 0.0);
  for (double& v : value.storage()) v = (2.0 * rng.uniform() - 1.0) * bound;
  params.add(name, std::move(value));
}

void add_zeros(ad::ParameterSet& params, const std::string& name, std::size_t size) {
  params.add(name, Tensor({size}, 0.0));
}

std::shared_ptr<const std::vector<double>> shared_doubles(std::vector<double> v) {
  return std::make_shared<const std::vector<double>>(std::move(v));
}

}  // namespace

GraphContext make_context(const Multigraph& g, std::span<const std::size_t> boundaries) {
  GraphContext ctx;
  ctx.kind = g.kind();
  const std::size_t n = g.num_vertices();
  const std::size_t m = g.num_edges();
  ctx.num_vertices = n;
  ctx.num_edges = m;
  ctx.features = Tensor({n, g.num_features()}, g.vertices().features);

  const AdjacencyIndex nb = undirected_binary_adjacency(g);
  std::vector<std::uint32_t> nsrc, ntgt;
  nsrc.reserve(nb.total());
  ntgt.reserve(nb.total());
  ctx.neighbor_scale = Tensor({n, 1}, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t u : nb[v]) {
      nsrc.push_back(static_cast<std::uint32_t>(u));
      ntgt.push_back(static_cast<std::uint32_t>(v));
    }
    ctx.neighbor_scale[v] = 1.0 / static_cast<double>(nb.degree(v) + 1);
  }
  ctx.neighbor_src = ad::make_index(std::move(nsrc));
  ctx.neighbor_tgt = ad::make_index(std::move(ntgt));

  std::vector<std::uint32_t> esrc(m), edst(m);
  for (std::size_t e = 0; e < m; ++e) {
    esrc[e] = g.edge(e).src;
    edst[e] = g.edge(e).dst;
  }
  for (int conv = 0; conv < 2; ++conv) {
    // Canonical messages run from the canonical sender to the canonical receiver.
    const auto& sender = conv == 0 ? esrc : edst;
    const auto& receiver = conv == 0 ? edst : esrc;
    std::vector<std::uint32_t> src(n + 2 * m), tgt(n + 2 * m);
    for (std::size_t v = 0; v < n; ++v) src[v] = tgt[v] = static_cast<std::uint32_t>(v);
    for (std::size_t e = 0; e < m; ++e) {
      src[n + e] = sender[e];
      tgt[n + e] = receiver[e];
      src[n + m + e] = receiver[e];
      tgt[n + m + e] = sender[e];
    }
    ctx.message_src[conv] = ad::make_index(std::move(src));
    ctx.message_tgt[conv] = ad::make_index(std::move(tgt));
  }
  std::vector<double> counts(n);
  ctx.inv_in_degree = Tensor({n, 1}, 0.0);
  ctx.inv_out_degree = Tensor({n, 1}, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t din = g.in_index().degree(v), dout = g.out_index().degree(v);
    counts[v] = static_cast<double>(1 + din + dout);
    if (din) ctx.inv_in_degree[v] = 1.0 / static_cast<double>(din);
    if (dout) ctx.inv_out_degree[v] = 1.0 / static_cast<double>(dout);
  }
  ctx.message_counts = shared_doubles(std::move(counts));
  ctx.edge_src = ad::make_index(std::move(esrc));
  ctx.edge_dst = ad::make_index(std::move(edst));

  if (is_financial(g.kind())) {
    ctx.batches = bucketize_edges(g.sequences(), boundaries);
  } else {
    const std::size_t width = g.sequences().attr_dim();
    ctx.profiles = Tensor({m, width}, 0.0);
    for (std::size_t e = 0; e < m; ++e) {
      const auto s = g.sequences().sequence(e);
      if (s.size() != width) throw StructuralError("edge " + std::to_string(e) + " lacks a single profile row");
      std::copy(s.begin(), s.end(), ctx.profiles.data() + e * width);
    }
  }
  return ctx;
}

void add_gamma_parameters(ad::ParameterSet& params, const std::string& prefix, const GammaConfig& cfg,
                          CounterRng& init) {
  const std::size_t l = cfg.latent;
  std::size_t in = cfg.input_width;
  if (cfg.kind == GammaKind::Transactions) {
    const std::size_t k = cfg.kernels, z = cfg.channels;
    add_glorot(params, prefix + ".conv_kernels", {k, 3, z}, 3 * z, 3 * k, init);
    add_zeros(params, prefix + ".conv_bias", k);
    in = k;
  }
  add_glorot(params, prefix + ".fc1_weight", {in, 2 * l}, in, 2 * l, init);
  add_zeros(params, prefix + ".fc1_bias", 2 * l);
  add_glorot(params, prefix + ".fc2_weight", {2 * l, l}, 2 * l, l, init);
  add_zeros(params, prefix + ".fc2_bias", l);
}

namespace {

Var dense(Tape& t, ad::ParameterSet& params, Var x, const std::string& weight, const std::string& bias) {
  return ad::add_bias(t, ad::matmul(t, x, t.parameter(params[weight])), t.parameter(params[bias]));
}

// Shared tail of the transactions Gamma after pooling: relu, FC 2L, relu,
// dropout, FC L, relu.
Var gamma_transactions_head(Tape& t, ad::ParameterSet& params, const std::string& prefix, const GammaConfig& cfg,
                            Var pooled, bool training, CounterRng rng) {
  Var x = ad::relu(t, pooled);
  x = ad::relu(t, dense(t, params, x, prefix + ".fc1_weight", prefix + ".fc1_bias"));
  x = ad::dropout(t, x, cfg.dropout, training, rng);
  return ad::relu(t, dense(t, params, x, prefix + ".fc2_weight", prefix + ".fc2_bias"));
}

}  // namespace

Var gamma_forward(Tape& t, ad::ParameterSet& params, const std::string& prefix, const GammaConfig& cfg,
                  const GraphContext& ctx, bool training, CounterRng rng) {
  if (cfg.kind == GammaKind::Transactions) {
    if (!is_financial(ctx.kind)) throw std::invalid_argument("transactions gamma applied to a transport graph");
    if (ctx.batches.attr_dim != cfg.channels) {
      throw std::invalid_argument("gamma expects " + std::to_string(cfg.channels) + " channels, data has " +
                                  std::to_string(ctx.batches.attr_dim));
    }
    const Var pooled = ad::conv1d_maxpool(t, ctx.batches, t.parameter(params[prefix + ".conv_kernels"]),
                                          t.parameter(params[prefix + ".conv_bias"]));
    return gamma_transactions_head(t, params, prefix, cfg, pooled, training, rng);
  }
  if (is_financial(ctx.kind)) throw std::invalid_argument("transport gamma applied to a financial graph");
  if (ctx.profiles.cols() != cfg.input_width) throw std::invalid_argument("profile width does not match gamma input");
  Var x = t.constant(ctx.profiles);
  x = ad::sigmoid(t, dense(t, params, x, prefix + ".fc1_weight", prefix + ".fc1_bias"));
  return ad::sigmoid(t, dense(t, params, x, prefix + ".fc2_weight", prefix + ".fc2_bias"));
}

Tensor gamma_single(ad::ParameterSet& params, const std::string& prefix, const GammaConfig& cfg,
                    std::span<const double> sequence, std::size_t length) {
  if (cfg.kind != GammaKind::Transactions) throw std::invalid_argument("gamma_single handles transaction sequences");
  const std::size_t z = cfg.channels;
  if (sequence.size() != length * z) throw std::invalid_argument("sequence size does not match length");
  const std::size_t rows = std::max<std::size_t>(length, kMinSequenceCapacity);
  Tensor seq({rows, z}, 0.0);
  std::copy(sequence.begin(), sequence.end(), seq.data());
  Tape t;
  const Var map = ad::conv1d(t, t.constant(std::move(seq)), t.parameter(params[prefix + ".conv_kernels"]),
                             t.parameter(params[prefix + ".conv_bias"]));
  const Tensor pooled = t.value(ad::global_maxpool(t, map));
  const Var row = t.constant(Tensor({1, pooled.size()}, std::vector<double>(pooled.values().begin(), pooled.values().end())));
  const Var out = gamma_transactions_head(t, params, prefix, cfg, row, false, CounterRng{});
  return Tensor({cfg.latent}, std::vector<double>(t.value(out).values().begin(), t.value(out).values().end()));
}

Var gcn_layer(Tape& t, Var h, const GraphContext& ctx, Var weight, Var bias, bool relu) {
  const Var neigh = ad::segment_sum(t, ad::gather_rows(t, h, ctx.neighbor_src), ctx.neighbor_tgt, ctx.num_vertices);
  const Var mean = ad::scale_rows(t, ad::add(t, h, neigh), t.constant(ctx.neighbor_scale));
  const Var pre = ad::add_bias(t, ad::matmul(t, mean, weight), bias);
  return relu ? ad::relu(t, pre) : pre;
}

LatentMessages latent_messages(Tape& t, Var edge_latent, Var self_weight, const GraphContext& ctx,
                               DirectionConvention direction) {
  const int conv = direction == DirectionConvention::TargetCanonical ? 0 : 1;
  const Var parts[] = {ad::broadcast_rows(t, self_weight, ctx.num_vertices),
                       ad::expand_bidirectional(t, edge_latent, ad::Expansion::Canonical),
                       ad::expand_bidirectional(t, edge_latent, ad::Expansion::Inverse)};
  return {ad::concat_rows(t, parts), ctx.message_src[conv], ctx.message_tgt[conv], ctx.num_vertices,
          ctx.message_counts};
}

namespace {

// 1 / c_i with c_i the total relation weight arriving at vertex i.
Var inverse_normalizer(Tape& t, const LatentMessages& msg) {
  const Var c = ad::segment_sum(t, ad::row_sum(t, msg.weights), msg.tgt, msg.num_vertices);
  return ad::reciprocal_clamped(t, c, kNormalizerFloor);
}

}  // namespace

Var lgcn_layer(Tape& t, Var h, const LatentMessages& msg, Var weight, Var bias, bool relu) {
  const Var inv_c = inverse_normalizer(t, msg);
  const Var per_message = ad::kron_matmul(t, msg.weights, h, msg.src, weight);
  const Var summed = ad::segment_sum(t, per_message, msg.tgt, msg.num_vertices);
  const Var pre = ad::add_bias(t, ad::scale_rows(t, summed, inv_c), bias);
  return relu ? ad::relu(t, pre) : pre;
}

Var lgcn_plus_layer(Tape& t, Var h, const LatentMessages& msg, Var weight1, Var bias1, Var weight2, Var bias2,
                    bool relu) {
  const Var inv_c = ad::gather_rows(t, inverse_normalizer(t, msg), msg.tgt);
  Var inner = ad::scale_rows(t, ad::kron_matmul(t, msg.weights, h, msg.src, weight1), inv_c);
  inner = ad::relu(t, ad::add_bias(t, inner, bias1));
  // Summing f over messages: the second matrix and its bias factor out.
  const Var summed = ad::segment_sum(t, inner, msg.tgt, msg.num_vertices);
  const Var pre = ad::add_scaled_bias(t, ad::matmul(t, summed, weight2), bias2, msg.counts);
  return relu ? ad::relu(t, pre) : pre;
}

Model::Model(ModelSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
  spec_.validate();
  CounterRng init(init_seed, "init");
  const std::size_t f = spec_.in_features, h = spec_.hidden, c = spec_.classes, l = spec_.gamma.latent;
  switch (spec_.family) {
    case Family::GCN:
      add_glorot(params_, "layer1.weight", {f, h}, f, h, init);
      add_zeros(params_, "layer1.bias", h);
      add_glorot(params_, "layer2.weight", {h, c}, h, c, init);
      add_zeros(params_, "layer2.bias", c);
      break;
    case Family::DVE: {
      add_gamma_parameters(params_, "gamma", spec_.gamma, init);
      const std::size_t in = f + (spec_.dve_merge == DveMerge::Concat ? 2 * l : l);
      add_glorot(params_, "layer1.weight", {in, h}, in, h, init);
      add_zeros(params_, "layer1.bias", h);
      add_glorot(params_, "layer2.weight", {h, c}, h, c, init);
      add_zeros(params_, "layer2.bias", c);
      break;
    }
    case Family::LGCN:
    case Family::LGCNPlus: {
      const bool plus = spec_.family == Family::LGCNPlus;
      const std::size_t widths[2][2] = {{f, h}, {h, c}};
      for (int layer = 1; layer <= 2; ++layer) {
        const std::string p = "layer" + std::to_string(layer);
        const std::size_t in = widths[layer - 1][0] * 2 * l, out = widths[layer - 1][1];
        if (layer == 1 || !spec_.shared_self_weight) {
          params_.add(spec_.shared_self_weight ? "self_weight" : p + ".self_weight", Tensor({2 * l}, 1.0));
        }
        add_gamma_parameters(params_, p + ".gamma", spec_.gamma, init);
        if (plus) {
          add_glorot(params_, p + ".weight1", {in, 2 * out}, in, 2 * out, init);
          add_zeros(params_, p + ".bias1", 2 * out);
          add_glorot(params_, p + ".weight2", {2 * out, out}, 2 * out, out, init);
          add_zeros(params_, p + ".bias2", out);
        } else {
          add_glorot(params_, p + ".weight", {in, out}, in, out, init);
          add_zeros(params_, p + ".bias", out);
        }
      }
      break;
    }
  }
}

void Model::check_context(const GraphContext& ctx) const {
  if (ctx.features.cols() != spec_.in_features) {
    throw std::invalid_argument("model expects " + std::to_string(spec_.in_features) + " vertex features, graph has " +
                                std::to_string(ctx.features.cols()));
  }
  if (spec_.uses_gamma()) {
    const bool fin = is_financial(ctx.kind);
    if (fin != (spec_.gamma.kind == GammaKind::Transactions)) {
      throw std::invalid_argument("model gamma kind '" + std::string(to_string(spec_.gamma.kind)) +
                                  "' does not match dataset kind '" + std::string(to_string(ctx.kind)) + "'");
    }
  }
}

Model::Output Model::forward(Tape& t, const GraphContext& ctx, bool training, CounterRng rng) {
  check_context(ctx);
  const Var x = t.constant(ctx.features);
  auto P = [&](const std::string& name) { return t.parameter(params_[name]); };
  auto gamma = [&](const std::string& prefix, std::uint64_t site) {
    gamma_evaluations_ += ctx.num_edges;
    return gamma_forward(t, params_, prefix, spec_.gamma, ctx, training, rng.substream(site));
  };
  auto drop = [&](Var v) { return ad::dropout(t, v, spec_.layer_dropout, training, rng.substream(0)); };

  Output out;
  switch (spec_.family) {
    case Family::GCN: {
      Var h = drop(gcn_layer(t, x, ctx, P("layer1.weight"), P("layer1.bias"), true));
      out.logits = gcn_layer(t, h, ctx, P("layer2.weight"), P("layer2.bias"), false);
      break;
    }
    case Family::DVE: {
      out.edge_latent = gamma("gamma", 1);
      const Var in_mean = ad::scale_rows(t, ad::segment_sum(t, out.edge_latent, ctx.edge_dst, ctx.num_vertices),
                                         t.constant(ctx.inv_in_degree));
      const Var out_mean = ad::scale_rows(t, ad::segment_sum(t, out.edge_latent, ctx.edge_src, ctx.num_vertices),
                                          t.constant(ctx.inv_out_degree));
      std::vector<Var> parts{x};
      if (spec_.dve_merge == DveMerge::Concat) {
        parts.push_back(in_mean);
        parts.push_back(out_mean);
      } else {
        parts.push_back(ad::add(t, in_mean, out_mean));
      }
      const Var expanded = ad::concat_cols(t, parts);
      Var h = drop(ad::relu(t, ad::add_bias(t, ad::matmul(t, expanded, P("layer1.weight")), P("layer1.bias"))));
      out.logits = ad::add_bias(t, ad::matmul(t, h, P("layer2.weight")), P("layer2.bias"));
      break;
    }
    case Family::LGCN:
    case Family::LGCNPlus: {
      const bool plus = spec_.family == Family::LGCNPlus;
      Var h = x;
      for (int layer = 1; layer <= 2; ++layer) {
        const std::string p = "layer" + std::to_string(layer);
        const Var latent = gamma(p + ".gamma", static_cast<std::uint64_t>(layer));
        if (layer == 1) out.edge_latent = latent;
        const Var self = P(spec_.shared_self_weight ? "self_weight" : p + ".self_weight");
        const LatentMessages msg = latent_messages(t, latent, self, ctx, spec_.direction);
        const bool relu = layer == 1;
        h = plus ? lgcn_plus_layer(t, h, msg, P(p + ".weight1"), P(p + ".bias1"), P(p + ".weight2"), P(p + ".bias2"),
                                   relu)
                 : lgcn_layer(t, h, msg, P(p + ".weight"), P(p + ".bias"), relu);
        if (layer == 1) h = drop(h);
      }
      out.logits = h;
      break;
    }
  }
  return out;
}

Tensor Model::predict(const GraphContext& ctx) {
  Tape t;
  return t.value(forward(t, ctx, false).logits);
}

Tensor Model::edge_embeddings(const GraphContext& ctx) {
  if (!spec_.uses_gamma()) throw std::invalid_argument(spec_.name() + " has no edge learning function");
  check_context(ctx);
  Tape t;
  gamma_evaluations_ += ctx.num_edges;
  const std::string prefix = spec_.family == Family::DVE ? "gamma" : "layer1.gamma";
  return t.value(gamma_forward(t, params_, prefix, spec_.gamma, ctx, false, CounterRng{}));
}

}  // namespace lgcn
