#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgcn/batching.hpp"
#include "lgcn/generator.hpp"
#include "lgcn/graph.hpp"
#include "lgcn/models.hpp"
#include "lgcn/train.hpp"

namespace lgcn::cli {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kOutputRootEnv = "LGCN_OUTPUT_ROOT";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad command line or config; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FieldType { UInt, Number, Bool, String, UIntList };

struct Field {
  std::string name;
  FieldType type;
  bool nullable = false;
  nlohmann::json fallback;
  std::string help;
};

using Schema = std::vector<Field>;

const Schema& generate_schema();
const Schema& train_schema();

/// Every field at its default.
nlohmann::json defaults(const Schema& schema);
/// Defaults overlaid with `user`; rejects unknown keys, wrong types and a
/// schema_version other than kConfigSchemaVersion.
nlohmann::json merge_config(const Schema& schema, const nlohmann::json& user);
/// Applies one "key=value" assignment. Values are read as JSON when they
/// parse, as plain text otherwise.
void apply_override(const Schema& schema, nlohmann::json& config, std::string_view assignment);
/// Reads an optional config file, then applies the overrides in order.
nlohmann::json resolve_config(const Schema& schema, const std::filesystem::path& file,
                              const std::vector<std::string>& overrides);

struct GenerateSettings {
  DatasetKind kind = DatasetKind::Financial1Hop;
  gen::GenConfig gen;
};
GenerateSettings generate_settings(const nlohmann::json& config);

struct TrainSettings {
  std::string model;
  TrainConfig train;
  bool learning_rate_set = false;
  std::uint64_t split_seed = 0;
  SplitRatios ratios;
  std::vector<std::size_t> bucket_boundaries{kDefaultBucketBoundaries.begin(), kDefaultBucketBoundaries.end()};
  nlohmann::json model_options;  // hidden, kernels, dropouts, direction, ...

  /// Model spec for a dataset of the given kind with every option applied.
  ModelSpec spec_for(DatasetKind kind) const;
  /// Training config with the dataset default learning rate filled in.
  TrainConfig train_for(DatasetKind kind) const;
};
TrainSettings train_settings(const nlohmann::json& config);

/// "3", "1..10" or "1,4,7".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

/// Runs one command; `args` excludes the program name. Summaries go to
/// `out`, progress and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lgcn::cli
