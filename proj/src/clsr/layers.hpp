#pragma once

// Building blocks of the situation encoder. Activations are matrices with one
// row per (sample, time step) and one column per channel, so a (B, T, C)
// tensor is a (B*T) x C row-major matrix.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clsr/error.hpp"
#include "clsr/random.hpp"

namespace clsr::nn {

template <typename Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A named parameter or buffer. `shape` is the logical shape written to
/// checkpoints; `value` stores it as a 2-D matrix with the same row-major
/// element order.
template <typename Real>
struct Param {
  std::string name;
  std::vector<std::size_t> shape;
  Matrix<Real> value;
  Matrix<Real> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string name_, std::vector<std::size_t> shape_, Eigen::Index rows, Eigen::Index cols,
        bool trainable_ = true)
      : name(std::move(name_)),
        shape(std::move(shape_)),
        value(Matrix<Real>::Zero(rows, cols)),
        trainable(trainable_) {}

  Real* data() { return value.data(); }
  const Real* data() const { return value.data(); }
  std::size_t size() const { return static_cast<std::size_t>(value.size()); }
  bool has_grad() const { return grad.size() == value.size(); }
};

template <typename Real>
void he_normal(Param<Real>& p, std::size_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<Real>(dist(rng));
}

/// Fixed per-channel standardization (x - mean) / std.
template <typename Real>
class Standardize {
 public:
  explicit Standardize(std::size_t channels = 1)
      : mean_(Matrix<Real>::Zero(1, static_cast<Eigen::Index>(channels))),
        std_(Matrix<Real>::Ones(1, static_cast<Eigen::Index>(channels))) {}

  void set(const Matrix<Real>& mean, const Matrix<Real>& std) {
    mean_ = mean;
    std_ = std;
    ready_ = true;
  }
  bool ready() const { return ready_; }
  const Matrix<Real>& mean() const { return mean_; }
  const Matrix<Real>& stddev() const { return std_; }

  Matrix<Real> forward(const Matrix<Real>& x) const {
    require(ready_, ErrorKind::State, "input normalization statistics are not initialized");
    return ((x.rowwise() - mean_.row(0)).array().rowwise() / std_.row(0).array()).matrix();
  }

  Matrix<Real> backward(const Matrix<Real>& dy) const {
    return (dy.array().rowwise() / std_.row(0).array()).matrix();
  }

 private:
  Matrix<Real> mean_;
  Matrix<Real> std_;
  bool ready_ = false;
};

/// 1-D convolution over time, stride 1, zero "same" padding. Weight layout is
/// (kernel, in, out), applied as an im2col GEMM.
template <typename Real>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(std::string name, std::size_t kernel, std::size_t in, std::size_t out)
      : kernel_(kernel),
        in_(in),
        out_(out),
        weight_(name + ".weight", {kernel, in, out}, static_cast<Eigen::Index>(kernel * in),
                static_cast<Eigen::Index>(out)),
        bias_(name + ".bias", {out}, 1, static_cast<Eigen::Index>(out)) {}

  void init(Rng& rng) {
    he_normal(weight_, kernel_ * in_, rng);
    bias_.value.setZero();
  }

  Matrix<Real> forward(const Matrix<Real>& x, std::size_t batch, std::size_t steps, bool keep) {
    Matrix<Real> cols = im2col(x, batch, steps);
    Matrix<Real> y = cols * weight_.value;
    y.rowwise() += bias_.value.row(0);
    if (keep) {
      cols_ = std::move(cols);
      batch_ = batch;
      steps_ = steps;
    }
    return y;
  }

  Matrix<Real> infer(const Matrix<Real>& x, std::size_t batch, std::size_t steps) const {
    Matrix<Real> y = im2col(x, batch, steps) * weight_.value;
    y.rowwise() += bias_.value.row(0);
    return y;
  }

  Matrix<Real> backward(const Matrix<Real>& dy) {
    require(cols_.rows() == dy.rows(), ErrorKind::State, "conv backward without matching forward");
    weight_.grad.noalias() = cols_.transpose() * dy;
    bias_.grad = dy.colwise().sum();
    const Matrix<Real> dcols = dy * weight_.value.transpose();
    return col2im(dcols);
  }

  Param<Real>& weight() { return weight_; }
  Param<Real>& bias() { return bias_; }
  const Param<Real>& weight() const { return weight_; }
  const Param<Real>& bias() const { return bias_; }

 private:
  std::ptrdiff_t pad() const { return static_cast<std::ptrdiff_t>(kernel_ / 2); }

  Matrix<Real> im2col(const Matrix<Real>& x, std::size_t batch, std::size_t steps) const {
    require(static_cast<std::size_t>(x.cols()) == in_ &&
                static_cast<std::size_t>(x.rows()) == batch * steps,
            ErrorKind::Shape, "conv input shape mismatch");
    const auto T = static_cast<std::ptrdiff_t>(steps);
    const auto C = static_cast<Eigen::Index>(in_);
    Matrix<Real> cols = Matrix<Real>::Zero(x.rows(), static_cast<Eigen::Index>(kernel_ * in_));
    for (std::size_t b = 0; b < batch; ++b) {
      const auto base = static_cast<std::ptrdiff_t>(b) * T;
      for (std::ptrdiff_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < kernel_; ++k) {
          const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(k) - pad();
          if (src < 0 || src >= T) continue;
          cols.row(base + t).segment(static_cast<Eigen::Index>(k) * C, C) = x.row(base + src);
        }
      }
    }
    return cols;
  }

  Matrix<Real> col2im(const Matrix<Real>& dcols) const {
    const auto T = static_cast<std::ptrdiff_t>(steps_);
    const auto C = static_cast<Eigen::Index>(in_);
    Matrix<Real> dx = Matrix<Real>::Zero(dcols.rows(), C);
    for (std::size_t b = 0; b < batch_; ++b) {
      const auto base = static_cast<std::ptrdiff_t>(b) * T;
      for (std::ptrdiff_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < kernel_; ++k) {
          const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(k) - pad();
          if (src < 0 || src >= T) continue;
          dx.row(base + src) += dcols.row(base + t).segment(static_cast<Eigen::Index>(k) * C, C);
        }
      }
    }
    return dx;
  }

  std::size_t kernel_ = 5, in_ = 1, out_ = 1;
  Param<Real> weight_, bias_;
  Matrix<Real> cols_;
  std::size_t batch_ = 0, steps_ = 0;
};

/// Per-channel batch normalization over all rows (samples x time steps).
template <typename Real>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::string name, std::size_t channels, double epsilon, double momentum)
      : epsilon_(epsilon),
        momentum_(momentum),
        gamma_(name + ".gamma", {channels}, 1, static_cast<Eigen::Index>(channels)),
        beta_(name + ".beta", {channels}, 1, static_cast<Eigen::Index>(channels)),
        running_mean_(name + ".running_mean", {channels}, 1, static_cast<Eigen::Index>(channels), false),
        running_var_(name + ".running_var", {channels}, 1, static_cast<Eigen::Index>(channels), false) {
    init();
  }

  void init() {
    gamma_.value.setOnes();
    beta_.value.setZero();
    running_mean_.value.setZero();
    running_var_.value.setOnes();
  }

  Matrix<Real> forward(const Matrix<Real>& x, bool keep) {
    const Eigen::Index n = x.rows(), c = x.cols();
    require(n > 0 && c == gamma_.value.cols(), ErrorKind::Shape, "batch norm input shape mismatch");
    std::vector<double> mean(static_cast<std::size_t>(c), 0.0), var(static_cast<std::size_t>(c), 0.0);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index j = 0; j < c; ++j) mean[j] += static_cast<double>(x(r, j));
    for (auto& m : mean) m /= static_cast<double>(n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index j = 0; j < c; ++j) {
        const double d = static_cast<double>(x(r, j)) - mean[j];
        var[j] += d * d;
      }
    for (auto& v : var) v /= static_cast<double>(n);

    Matrix<Real> inv_std(1, c), mean_row(1, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      inv_std(0, j) = static_cast<Real>(1.0 / std::sqrt(var[j] + epsilon_));
      mean_row(0, j) = static_cast<Real>(mean[j]);
      running_mean_.value(0, j) = static_cast<Real>(momentum_ * static_cast<double>(running_mean_.value(0, j)) +
                                                   (1.0 - momentum_) * mean[j]);
      running_var_.value(0, j) = static_cast<Real>(momentum_ * static_cast<double>(running_var_.value(0, j)) +
                                                  (1.0 - momentum_) * var[j]);
    }
    Matrix<Real> xhat = ((x.rowwise() - mean_row.row(0)).array().rowwise() * inv_std.row(0).array()).matrix();
    Matrix<Real> y = (xhat.array().rowwise() * gamma_.value.row(0).array()).matrix();
    y.rowwise() += beta_.value.row(0);
    if (keep) {
      xhat_ = std::move(xhat);
      inv_std_ = std::move(inv_std);
    }
    return y;
  }

  Matrix<Real> infer(const Matrix<Real>& x) const {
    require(x.cols() == gamma_.value.cols(), ErrorKind::Shape, "batch norm input shape mismatch");
    Matrix<Real> scale(1, x.cols()), shift(1, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double inv = 1.0 / std::sqrt(static_cast<double>(running_var_.value(0, j)) + epsilon_);
      scale(0, j) = static_cast<Real>(static_cast<double>(gamma_.value(0, j)) * inv);
      shift(0, j) = static_cast<Real>(static_cast<double>(beta_.value(0, j)) -
                                      static_cast<double>(running_mean_.value(0, j)) *
                                          static_cast<double>(gamma_.value(0, j)) * inv);
    }
    Matrix<Real> y = (x.array().rowwise() * scale.row(0).array()).matrix();
    y.rowwise() += shift.row(0);
    return y;
  }

  Matrix<Real> backward(const Matrix<Real>& dy) {
    require(xhat_.rows() == dy.rows() && xhat_.cols() == dy.cols(), ErrorKind::State,
            "batch norm backward without matching forward");
    const Eigen::Index n = dy.rows(), c = dy.cols();
    gamma_.grad = (dy.array() * xhat_.array()).colwise().sum().matrix();
    beta_.grad = dy.colwise().sum();
    // dx = inv_std / N * (N * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
    Matrix<Real> dxhat = (dy.array().rowwise() * gamma_.value.row(0).array()).matrix();
    Matrix<Real> sum_dxhat = dxhat.colwise().sum();
    Matrix<Real> sum_dxhat_xhat = (dxhat.array() * xhat_.array()).colwise().sum().matrix();
    const Real inv_n = Real(1) / static_cast<Real>(n);
    Matrix<Real> dx(n, c);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index j = 0; j < c; ++j)
        dx(r, j) = inv_std_(0, j) *
                   (dxhat(r, j) - inv_n * (sum_dxhat(0, j) + xhat_(r, j) * sum_dxhat_xhat(0, j)));
    return dx;
  }

  double epsilon() const { return epsilon_; }
  double momentum() const { return momentum_; }
  Param<Real>& gamma() { return gamma_; }
  Param<Real>& beta() { return beta_; }
  Param<Real>& running_mean() { return running_mean_; }
  Param<Real>& running_var() { return running_var_; }
  const Param<Real>& running_mean() const { return running_mean_; }
  const Param<Real>& running_var() const { return running_var_; }

 private:
  double epsilon_ = 1e-3, momentum_ = 0.99;
  Param<Real> gamma_, beta_, running_mean_, running_var_;
  Matrix<Real> xhat_, inv_std_;
};

template <typename Real>
class Relu {
 public:
  Matrix<Real> forward(const Matrix<Real>& x, bool keep) {
    Matrix<Real> y = x.cwiseMax(Real(0));
    if (keep) out_ = y;
    return y;
  }
  static Matrix<Real> infer(const Matrix<Real>& x) { return x.cwiseMax(Real(0)); }

  Matrix<Real> backward(const Matrix<Real>& dy) const {
    require(out_.rows() == dy.rows() && out_.cols() == dy.cols(), ErrorKind::State,
            "relu backward without matching forward");
    return (out_.array() > Real(0)).select(dy, Matrix<Real>::Zero(dy.rows(), dy.cols()));
  }

 private:
  Matrix<Real> out_;
};

/// Affine map applied independently to every row.
template <typename Real>
class Dense {
 public:
  Dense() = default;
  Dense(std::string name, std::size_t in, std::size_t out)
      : in_(in),
        weight_(name + ".weight", {in, out}, static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out)),
        bias_(name + ".bias", {out}, 1, static_cast<Eigen::Index>(out)) {}

  void init(Rng& rng) {
    he_normal(weight_, in_, rng);
    bias_.value.setZero();
  }

  Matrix<Real> forward(const Matrix<Real>& x, bool keep) {
    Matrix<Real> y = infer(x);
    if (keep) in_cache_ = x;
    return y;
  }

  Matrix<Real> infer(const Matrix<Real>& x) const {
    require(x.cols() == weight_.value.rows(), ErrorKind::Shape, "dense input shape mismatch");
    Matrix<Real> y = x * weight_.value;
    y.rowwise() += bias_.value.row(0);
    return y;
  }

  Matrix<Real> backward(const Matrix<Real>& dy) {
    require(in_cache_.rows() == dy.rows(), ErrorKind::State, "dense backward without matching forward");
    weight_.grad.noalias() = in_cache_.transpose() * dy;
    bias_.grad = dy.colwise().sum();
    return dy * weight_.value.transpose();
  }

  Param<Real>& weight() { return weight_; }
  Param<Real>& bias() { return bias_; }
  const Param<Real>& weight() const { return weight_; }
  const Param<Real>& bias() const { return bias_; }

 private:
  std::size_t in_ = 1;
  Param<Real> weight_, bias_;
  Matrix<Real> in_cache_;
};

/// Inverted dropout: survivors are scaled by 1/(1-rate) at train time, so
/// inference is the identity.
template <typename Real>
class Dropout {
 public:
  explicit Dropout(double rate = 0.5) : rate_(rate) {
    require(rate >= 0.0 && rate < 1.0, ErrorKind::Config, "dropout rate must lie in [0, 1)");
  }

  Matrix<Real> forward(const Matrix<Real>& x, Rng& rng, bool keep) {
    Matrix<Real> mask(x.rows(), x.cols());
    const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate_));
    std::bernoulli_distribution drop(rate_);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = drop(rng) ? Real(0) : keep_scale;
    Matrix<Real> y = x.cwiseProduct(mask);
    if (keep) mask_ = std::move(mask);
    return y;
  }

  Matrix<Real> backward(const Matrix<Real>& dy) const {
    require(mask_.rows() == dy.rows() && mask_.cols() == dy.cols(), ErrorKind::State,
            "dropout backward without matching forward");
    return dy.cwiseProduct(mask_);
  }

  double rate() const { return rate_; }
  const Matrix<Real>& mask() const { return mask_; }

 private:
  double rate_;
  Matrix<Real> mask_;
};

/// Mean over the time axis: (B*T) x D -> B x D.
template <typename Real>
struct GlobalAveragePool {
  static Matrix<Real> forward(const Matrix<Real>& x, std::size_t batch, std::size_t steps) {
    require(static_cast<std::size_t>(x.rows()) == batch * steps, ErrorKind::Shape,
            "pooling input shape mismatch");
    Matrix<Real> y(static_cast<Eigen::Index>(batch), x.cols());
    const auto T = static_cast<Eigen::Index>(steps);
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(batch); ++b)
      y.row(b) = x.middleRows(b * T, T).colwise().sum() / static_cast<Real>(steps);
    return y;
  }

  static Matrix<Real> backward(const Matrix<Real>& dy, std::size_t steps) {
    const auto T = static_cast<Eigen::Index>(steps);
    Matrix<Real> dx(dy.rows() * T, dy.cols());
    for (Eigen::Index b = 0; b < dy.rows(); ++b)
      dx.middleRows(b * T, T).rowwise() = dy.row(b) / static_cast<Real>(steps);
    return dx;
  }
};

}  // namespace clsr::nn
