#include "lgcn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace lgcn::ad {

Adam::Adam(AdamConfig cfg, const ParameterSet& params) : cfg_(cfg) {
  if (!(cfg.learning_rate >= 0.0) || !(cfg.weight_decay >= 0.0)) {
    throw std::invalid_argument("learning rate and weight decay must be non-negative");
  }
  for (const auto& p : params.all()) {
    m_.emplace_back(p.value.shape(), 0.0);
    v_.emplace_back(p.value.shape(), 0.0);
  }
}

void Adam::step(ParameterSet& params) {
  if (params.size() != m_.size()) throw std::invalid_argument("parameter set changed since optimizer creation");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  std::size_t idx = 0;
  for (auto& p : params.all()) {
    Tensor& m = m_[idx];
    Tensor& v = v_[idx];
    ++idx;
    if (m.shape() != p.value.shape()) throw std::invalid_argument("moment shape mismatch for " + p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i] + cfg_.weight_decay * p.value[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

void Adam::restore(std::uint64_t steps, std::vector<Tensor> first, std::vector<Tensor> second) {
  if (first.size() != m_.size() || second.size() != v_.size()) {
    throw std::invalid_argument("optimizer state has the wrong number of tensors");
  }
  for (std::size_t i = 0; i < m_.size(); ++i) {
    if (first[i].shape() != m_[i].shape() || second[i].shape() != v_[i].shape()) {
      throw std::invalid_argument("optimizer state shape mismatch at tensor " + std::to_string(i));
    }
  }
  t_ = steps;
  m_ = std::move(first);
  v_ = std::move(second);
}

}  // namespace lgcn::ad
