#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lgcn/adam.hpp"
#include "lgcn/graph.hpp"
#include "lgcn/metrics.hpp"
#include "lgcn/models.hpp"

namespace lgcn {

/// Training aborted on a non-finite value.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t epochs = 2000;
  double learning_rate = 5e-4;
  double weight_decay = 5e-4;
  std::uint64_t init_seed = 0;
  /// Validation loss is computed every this many epochs and at the end.
  std::size_t val_every = 10;

  void validate() const;
  static TrainConfig for_kind(DatasetKind kind);
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct Metrics {
  std::size_t count = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> auc;  // binary tasks with both classes present
};

struct RunReport {
  std::string model;
  std::string mode = "transductive";
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  std::size_t epochs = 0;
  std::size_t num_parameters = 0;
  std::vector<double> class_weights;
  std::vector<double> train_loss;                        // one per epoch
  std::vector<std::pair<std::size_t, double>> val_loss;  // (epoch, loss)
  Metrics test;
  double wall_seconds = 0.0;

  /// Equality of everything except wall time.
  bool same_results(const RunReport& other) const;
};

void to_json(nlohmann::json& j, const Metrics& m);
void from_json(const nlohmann::json& j, Metrics& m);
void to_json(nlohmann::json& j, const RunReport& r);
void from_json(const nlohmann::json& j, RunReport& r);

/// n_total / (C * n_c) from the labels under `mask`; 0 for absent classes.
std::vector<double> class_weights(std::span<const int> labels, std::span<const std::size_t> mask,
                                  std::size_t classes);

/// Inference-mode metrics over `mask`.
Metrics evaluate(Model& model, const GraphContext& ctx, std::span<const int> labels,
                 std::span<const std::size_t> mask);
Metrics score(const ad::Tensor& logits, std::span<const int> labels, std::span<const std::size_t> mask,
              std::size_t classes);

struct TrainResult {
  Model model;
  ad::Adam optimizer;
  RunReport report;
};

/// Called after every epoch with (epoch, train loss).
using ProgressFn = std::function<void(std::size_t, double)>;

/// Full-batch training on the train mask; final-epoch parameters are kept.
TrainResult train(const ModelSpec& spec, const Multigraph& g, const GraphContext& ctx, const SplitMask& splits,
                  const TrainConfig& cfg, const ProgressFn& progress = {});

/// Scores every vertex of a graph the model was not trained on.
RunReport inductive_eval(Model& model, const Multigraph& fresh, std::uint64_t seed);

struct AggregateRow {
  std::string model;
  std::size_t runs = 0;
  MeanSe accuracy;
  std::optional<MeanSe> auc;
  MeanSe macro_f1;
  double mean_seconds = 0.0;
  std::size_t num_parameters = 0;
};

AggregateRow aggregate(std::span<const RunReport> reports);
std::string format_table(std::span<const AggregateRow> rows);
std::string format_csv(std::span<const AggregateRow> rows);

/// One run per initialisation seed with fixed splits.
std::vector<RunReport> repeat_runs(const ModelSpec& spec, const Multigraph& g, const GraphContext& ctx,
                                   const SplitMask& splits, TrainConfig cfg, std::span<const std::uint64_t> seeds,
                                   const ProgressFn& progress = {});

}  // namespace lgcn
