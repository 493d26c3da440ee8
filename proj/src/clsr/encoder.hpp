#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "clsr/layers.hpp"
#include "clsr/telemetry.hpp"
#include "clsr/tensor.hpp"

namespace clsr {

/// Architecture hyperparameters. Defaults give the 30-step, single-feature,
/// 128-wide stack used throughout the project.
struct ModelConfig {
  std::size_t steps = 30;
  std::size_t channels = 1;
  std::size_t embedding = 128;
  std::vector<std::size_t> conv_widths{128, 128, 128};
  std::size_t dense_units = 128;
  std::size_t kernel = 5;
  float dropout = 0.5f;
  float bn_epsilon = 1e-3f;
  float bn_momentum = 0.99f;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class Mode { Train, Eval };

/// Normalization -> [Conv1D, BatchNorm, ReLU] x depth -> time-distributed
/// Dense -> Dropout -> GlobalAveragePooling1D -> Dense.
///
/// `train_forward` caches activations, draws dropout masks from the supplied
/// rng and advances the batch-norm running statistics; `backward` consumes
/// that cache. `infer` is const and safe to call concurrently.
template <typename Real>
class BasicEncoder {
 public:
  using Matrix = nn::Matrix<Real>;

  explicit BasicEncoder(ModelConfig cfg = {});

  const ModelConfig& config() const { return cfg_; }

  /// He-normal weights, unit/zero batch-norm affine, zero biases.
  void init_weights(Rng& rng);

  /// Per-channel mean and population std over every cell of every
  /// situation (sentinel cells included); std is floored at 1e-6.
  void fit_normalization(std::span<const Situation> data);
  void fit_normalization(std::span<const SituationPair> pairs);
  void set_normalization(std::span<const Real> mean, std::span<const Real> stddev);
  bool normalization_ready() const { return norm_.ready(); }
  const nn::Standardize<Real>& normalization() const { return norm_; }

  /// (B*T) x C input -> B x E embeddings.
  Matrix train_forward(const Matrix& x, std::size_t batch, Rng& dropout_rng);
  Matrix infer(const Matrix& x, std::size_t batch) const;

  /// Tensor-shaped front ends: (B, T, C) -> (B, E).
  BasicTensor<Real> forward(const BasicTensor<Real>& x, Mode mode, Rng* dropout_rng = nullptr);

  /// Populates every parameter gradient and returns d loss / d input.
  Matrix backward(const Matrix& grad_out);
  bool has_cache() const { return cached_batch_ > 0; }

  /// Learnable parameters and non-learned buffers in checkpoint order.
  std::vector<nn::Param<Real>*> tensors();
  std::vector<const nn::Param<Real>*> tensors() const;
  std::vector<nn::Param<Real>*> parameters();

  std::size_t input_rows(std::size_t batch) const { return batch * cfg_.steps; }

 private:
  void check_input(const Matrix& x, std::size_t batch) const;

  ModelConfig cfg_;
  nn::Standardize<Real> norm_;
  std::vector<nn::Conv1d<Real>> convs_;
  std::vector<nn::BatchNorm<Real>> bns_;
  std::vector<nn::Relu<Real>> relus_;
  nn::Dense<Real> time_dense_;
  nn::Dropout<Real> dropout_;
  nn::Dense<Real> head_;
  std::size_t cached_batch_ = 0;
};

using Encoder = BasicEncoder<float>;

extern template class BasicEncoder<float>;
extern template class BasicEncoder<double>;

/// Stacks situations into a (B*T) x C matrix in row order.
template <typename Real>
nn::Matrix<Real> stack_situations(std::span<const Situation* const> items, std::size_t steps,
                                  std::size_t channels);

}  // namespace clsr
