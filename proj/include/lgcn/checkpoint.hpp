#pragma once

#include <filesystem>
#include <stdexcept>

#include "lgcn/adam.hpp"
#include "lgcn/graph.hpp"
#include "lgcn/models.hpp"
#include "lgcn/train.hpp"

namespace lgcn {

inline constexpr int kCheckpointVersion = 1;

/// Stored parameters do not fit the declared model.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointInfo {
  DatasetKind kind = DatasetKind::Financial1Hop;
  TrainConfig train;
  std::uint64_t split_seed = 0;
  SplitRatios ratios;
};

struct LoadedCheckpoint {
  Model model;
  ad::Adam optimizer;
  CheckpointInfo info;
};

/// JSON text with model spec, every parameter as (name, shape, values), the
/// optimizer state and the split recipe. Doubles round-trip exactly.
std::string checkpoint_text(const Model& model, const ad::Adam& opt, const CheckpointInfo& info);
void save_checkpoint(const std::filesystem::path& path, const Model& model, const ad::Adam& opt,
                     const CheckpointInfo& info);
LoadedCheckpoint parse_checkpoint(const std::string& text);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lgcn
