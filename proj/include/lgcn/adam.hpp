#pragma once

#include <cstdint>
#include <vector>

#include "lgcn/tape.hpp"

namespace lgcn::ad {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// L2 coefficient added to the gradient before the moment updates.
  double weight_decay = 5e-4;
};

/// Adam with bias correction over every tensor of a ParameterSet.
class Adam {
 public:
  Adam(AdamConfig cfg, const ParameterSet& params);

  /// One update from the gradients currently stored in `params`.
  void step(ParameterSet& params);

  const AdamConfig& config() const { return cfg_; }
  std::uint64_t steps() const { return t_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

  /// Restores a saved state; moment shapes must match the parameters.
  void restore(std::uint64_t steps, std::vector<Tensor> first, std::vector<Tensor> second);

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace lgcn::ad
