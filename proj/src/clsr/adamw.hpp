#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "clsr/encoder.hpp"

namespace clsr {

struct AdamWConfig {
  double lr = 1e-5;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// A parameter as the optimizer sees it: value and gradient of equal length.
struct ParamSlot {
  std::span<float> value;
  std::span<const float> grad;
};

/// Decoupled weight decay Adam:
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p
/// with bias-corrected moments. Moment buffers are created on the first step
/// and must keep the same layout afterwards.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  void step(std::span<const ParamSlot> params);
  void step(Encoder& model);

  std::uint64_t step_count() const { return steps_; }
  const AdamWConfig& config() const { return cfg_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamWConfig cfg_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace clsr
