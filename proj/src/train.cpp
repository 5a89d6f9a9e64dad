#include "lgcn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_set>

#include "lgcn/metrics.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace lgcn {

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be at least 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
  if (val_every == 0) throw std::invalid_argument("val_every must be at least 1");
}

TrainConfig TrainConfig::for_kind(DatasetKind kind) {
  TrainConfig c;
  if (!is_financial(kind)) c.learning_rate = 1.5e-4;
  return c;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"learning_rate", c.learning_rate},
                     {"weight_decay", c.weight_decay},
                     {"init_seed", c.init_seed},
                     {"val_every", c.val_every}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  static const std::unordered_set<std::string> known{"epochs", "learning_rate", "weight_decay", "init_seed",
                                                     "val_every"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown training field '" + key + "'");
  }
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.init_seed = j.value("init_seed", c.init_seed);
  c.val_every = j.value("val_every", c.val_every);
}

bool RunReport::same_results(const RunReport& o) const {
  auto same_metrics = [](const Metrics& a, const Metrics& b) {
    return a.count == b.count && a.accuracy == b.accuracy && a.macro_f1 == b.macro_f1 && a.auc == b.auc;
  };
  return model == o.model && mode == o.mode && seed == o.seed && split_seed == o.split_seed &&
         epochs == o.epochs && num_parameters == o.num_parameters && class_weights == o.class_weights &&
         train_loss == o.train_loss && val_loss == o.val_loss && same_metrics(test, o.test);
}

void to_json(nlohmann::json& j, const Metrics& m) {
  j = nlohmann::json{{"count", m.count}, {"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}};
  j["auc"] = m.auc ? nlohmann::json(*m.auc) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, Metrics& m) {
  m.count = j.at("count").get<std::size_t>();
  m.accuracy = j.at("accuracy").get<double>();
  m.macro_f1 = j.at("macro_f1").get<double>();
  if (j.contains("auc") && !j.at("auc").is_null()) m.auc = j.at("auc").get<double>();
}

void to_json(nlohmann::json& j, const RunReport& r) {
  nlohmann::json val = nlohmann::json::array();
  for (const auto& [epoch, loss] : r.val_loss) val.push_back({epoch, loss});
  j = nlohmann::json{{"model", r.model},
                     {"mode", r.mode},
                     {"seed", r.seed},
                     {"split_seed", r.split_seed},
                     {"epochs", r.epochs},
                     {"num_parameters", r.num_parameters},
                     {"class_weights", r.class_weights},
                     {"class_weight_scheme", "n_total / (C * n_c) on the training mask"},
                     {"train_loss", r.train_loss},
                     {"val_loss", val},
                     {"test", r.test},
                     {"wall_seconds", r.wall_seconds}};
}

void from_json(const nlohmann::json& j, RunReport& r) {
  r.model = j.at("model").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.split_seed = j.at("split_seed").get<std::uint64_t>();
  r.epochs = j.at("epochs").get<std::size_t>();
  r.num_parameters = j.at("num_parameters").get<std::size_t>();
  r.class_weights = j.at("class_weights").get<std::vector<double>>();
  r.train_loss = j.at("train_loss").get<std::vector<double>>();
  r.val_loss.clear();
  for (const auto& e : j.at("val_loss")) r.val_loss.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<double>());
  r.test = j.at("test").get<Metrics>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
}

std::vector<double> class_weights(std::span<const int> labels, std::span<const std::size_t> mask,
                                  std::size_t classes) {
  if (mask.empty()) throw std::invalid_argument("class weights need a non-empty mask");
  std::vector<std::size_t> counts(classes, 0);
  for (auto i : mask) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (y >= classes) throw std::out_of_range("label " + std::to_string(labels[i]) + " out of range");
    ++counts[y];
  }
  std::vector<double> w(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c]) {
      w[c] = static_cast<double>(mask.size()) / (static_cast<double>(classes) * static_cast<double>(counts[c]));
    }
  }
  return w;
}

Metrics score(const ad::Tensor& logits, std::span<const int> labels, std::span<const std::size_t> mask,
              std::size_t classes) {
  Metrics m;
  m.count = mask.size();
  m.accuracy = accuracy(logits, labels, mask);
  m.macro_f1 = macro_f1(logits, labels, mask, classes);
  if (classes == 2) {
    bool pos = false, neg = false;
    for (auto i : mask) (labels[i] == 1 ? pos : neg) = true;
    if (pos && neg) m.auc = auc(class_probabilities(logits, 1), labels, mask);
  }
  return m;
}

Metrics evaluate(Model& model, const GraphContext& ctx, std::span<const int> labels,
                 std::span<const std::size_t> mask) {
  return score(model.predict(ctx), labels, mask, model.spec().classes);
}

namespace {

// Every step allocates and frees the same large activation buffers. Keeping
// them on the heap instead of returning them to the OS avoids refaulting
// fresh pages each epoch.
void keep_large_allocations() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)done;
#endif
}

double grad_norm(const ad::ParameterSet& params) {
  double s = 0.0;
  for (const auto& p : params.all()) {
    for (double g : p.grad.values()) s += g * g;
  }
  return std::sqrt(s);
}

}  // namespace

TrainResult train(const ModelSpec& spec, const Multigraph& g, const GraphContext& ctx, const SplitMask& splits,
                  const TrainConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  if (is_financial(g.kind()) && !g.info().normalized) {
    throw std::invalid_argument("financial graphs must be normalized before training");
  }
  if (splits.train.empty()) throw std::invalid_argument("training mask is empty");
  keep_large_allocations();
  const auto start = std::chrono::steady_clock::now();

  Model model(spec, cfg.init_seed);
  ad::Adam opt({cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay}, model.parameters());
  const auto labels = g.labels();
  RunReport report;
  report.model = spec.name();
  report.seed = cfg.init_seed;
  report.split_seed = splits.seed;
  report.epochs = cfg.epochs;
  report.num_parameters = model.num_parameters();
  report.class_weights = class_weights(labels, splits.train, spec.classes);
  report.train_loss.reserve(cfg.epochs);

  const CounterRng dropout_root(cfg.init_seed, "dropout");
  double last_norm = 0.0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    try {
      model.parameters().zero_grad();
      double loss_value = 0.0;
      {
        ad::Tape tape;
        const auto out = model.forward(tape, ctx, true, dropout_root.substream(epoch));
        const ad::Var loss = ad::weighted_cross_entropy(tape, out.logits, labels, report.class_weights, splits.train);
        loss_value = tape.value(loss)[0];
        tape.backward(loss);
      }
      last_norm = grad_norm(model.parameters());
      if (!std::isfinite(last_norm)) throw ad::NumericError("gradient norm is not finite");
      opt.step(model.parameters());
      report.train_loss.push_back(loss_value);
      if (!splits.val.empty() && (epoch % cfg.val_every == 0 || epoch == cfg.epochs)) {
        ad::Tape tape;
        const auto out = model.forward(tape, ctx, false);
        const ad::Var loss = ad::weighted_cross_entropy(tape, out.logits, labels, report.class_weights, splits.val);
        report.val_loss.emplace_back(epoch, tape.value(loss)[0]);
      }
      if (progress) progress(epoch, loss_value);
    } catch (const ad::NumericError& e) {
      std::ostringstream msg;
      msg << "non-finite value at epoch " << epoch << ": " << e.what() << " (previous gradient norm " << last_norm
          << ")";
      throw TrainingError(msg.str());
    }
  }
  if (!splits.test.empty()) report.test = evaluate(model, ctx, labels, splits.test);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(model), std::move(opt), std::move(report)};
}

RunReport inductive_eval(Model& model, const Multigraph& fresh, std::uint64_t seed) {
  const GraphContext ctx = make_context(fresh);
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::size_t> all(fresh.num_vertices());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  RunReport r;
  r.model = model.spec().name();
  r.mode = "inductive";
  r.seed = seed;
  r.num_parameters = model.num_parameters();
  r.test = evaluate(model, ctx, fresh.labels(), all);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

AggregateRow aggregate(std::span<const RunReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate needs at least one report");
  AggregateRow row;
  row.model = reports.front().model;
  row.runs = reports.size();
  row.num_parameters = reports.front().num_parameters;
  std::vector<double> acc, f1, au, secs;
  for (const auto& r : reports) {
    acc.push_back(r.test.accuracy);
    f1.push_back(r.test.macro_f1);
    secs.push_back(r.wall_seconds);
    if (r.test.auc) au.push_back(*r.test.auc);
  }
  row.accuracy = mean_se(acc);
  row.macro_f1 = mean_se(f1);
  if (au.size() == reports.size()) row.auc = mean_se(au);
  row.mean_seconds = mean_se(secs).mean;
  return row;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string duration_text(double seconds) {
  if (seconds < 60.0) return fixed(seconds, 1) + "s";
  if (seconds < 3600.0) return fixed(seconds / 60.0, 1) + "m";
  return fixed(seconds / 3600.0, 2) + "h";
}

}  // namespace

std::string format_table(std::span<const AggregateRow> rows) {
  std::vector<std::vector<std::string>> cells{
      {"Architecture", "Accuracy (%)", "AUC", "Macro-F1", "Time", "N_params"}};
  for (const auto& r : rows) {
    cells.push_back({r.model, fixed(100.0 * r.accuracy.mean, 2) + " ± " + fixed(100.0 * r.accuracy.se, 2),
                     r.auc ? fixed(r.auc->mean, 3) + " ± " + fixed(r.auc->se, 3) : "-",
                     fixed(r.macro_f1.mean, 3) + " ± " + fixed(r.macro_f1.se, 3), duration_text(r.mean_seconds),
                     std::to_string(r.num_parameters)});
  }
  // Column widths in code points; "±" is one column but two bytes.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(cells.front().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], width(row[c]));
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const auto& s = cells[r][c];
      const std::string pad(widths[c] - width(s), ' ');
      out << (c == 0 ? s + pad : "  " + pad + s);
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  return out.str();
}

std::string format_csv(std::span<const AggregateRow> rows) {
  std::ostringstream out;
  out << "model,runs,accuracy_mean,accuracy_se,auc_mean,auc_se,macro_f1_mean,macro_f1_se,mean_seconds,"
         "num_parameters\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.model << ',' << r.runs << ',' << r.accuracy.mean << ',' << r.accuracy.se << ',';
    if (r.auc) {
      out << r.auc->mean << ',' << r.auc->se << ',';
    } else {
      out << ",,";
    }
    out << r.macro_f1.mean << ',' << r.macro_f1.se << ',' << r.mean_seconds << ',' << r.num_parameters << '\n';
  }
  return out.str();
}

std::vector<RunReport> repeat_runs(const ModelSpec& spec, const Multigraph& g, const GraphContext& ctx,
                                   const SplitMask& splits, TrainConfig cfg, std::span<const std::uint64_t> seeds,
                                   const ProgressFn& progress) {
  if (seeds.size() < 2) throw std::invalid_argument("repeat_runs needs at least two seeds");
  std::vector<RunReport> out;
  for (auto seed : seeds) {
    cfg.init_seed = seed;
    out.push_back(train(spec, g, ctx, splits, cfg, progress).report);
  }
  return out;
}

}  // namespace lgcn
