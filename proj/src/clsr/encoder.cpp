#include "clsr/encoder.hpp"

#include <cmath>
#include <sstream>

namespace clsr {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ')';
  return os.str();
}

void ModelConfig::validate() const {
  require(steps > 0 && channels > 0 && embedding > 0 && dense_units > 0, ErrorKind::Config,
          "model dimensions must be positive");
  require(!conv_widths.empty(), ErrorKind::Config, "model needs at least one conv block");
  for (auto w : conv_widths) require(w > 0, ErrorKind::Config, "conv widths must be positive");
  require(kernel % 2 == 1, ErrorKind::Config, "same padding needs an odd kernel size");
  require(dropout >= 0.0f && dropout < 1.0f, ErrorKind::Config, "dropout rate must lie in [0, 1)");
  require(bn_epsilon > 0.0f && bn_momentum >= 0.0f && bn_momentum < 1.0f, ErrorKind::Config,
          "batch norm epsilon must be positive and momentum in [0, 1)");
}

template <typename Real>
BasicEncoder<Real>::BasicEncoder(ModelConfig cfg)
    : cfg_(std::move(cfg)), norm_(cfg_.channels), dropout_(cfg_.dropout) {
  cfg_.validate();
  std::size_t in = cfg_.channels;
  for (std::size_t i = 0; i < cfg_.conv_widths.size(); ++i) {
    const std::string idx = std::to_string(i + 1);
    convs_.emplace_back("conv" + idx, cfg_.kernel, in, cfg_.conv_widths[i]);
    bns_.emplace_back("bn" + idx, cfg_.conv_widths[i], cfg_.bn_epsilon, cfg_.bn_momentum);
    relus_.emplace_back();
    in = cfg_.conv_widths[i];
  }
  time_dense_ = nn::Dense<Real>("dense", in, cfg_.dense_units);
  head_ = nn::Dense<Real>("head", cfg_.dense_units, cfg_.embedding);
}

template <typename Real>
void BasicEncoder<Real>::init_weights(Rng& rng) {
  for (auto& conv : convs_) conv.init(rng);
  for (auto& bn : bns_) bn.init();
  time_dense_.init(rng);
  head_.init(rng);
  cached_batch_ = 0;
}

template <typename Real>
void BasicEncoder<Real>::fit_normalization(std::span<const Situation> data) {
  require(!data.empty(), ErrorKind::State, "fit_normalization needs training data");
  const std::size_t C = cfg_.channels;
  std::vector<double> sum(C, 0.0), sq(C, 0.0);
  std::size_t rows = 0;
  for (const auto& s : data) {
    require(s.channels == C, ErrorKind::Shape, "situation channel count does not match the model");
    for (std::size_t t = 0; t < s.steps; ++t)
      for (std::size_t c = 0; c < C; ++c) sum[c] += s.at(t, c);
    rows += s.steps;
  }
  std::vector<Real> mean(C), stddev(C);
  for (std::size_t c = 0; c < C; ++c) mean[c] = static_cast<Real>(sum[c] / static_cast<double>(rows));
  for (const auto& s : data)
    for (std::size_t t = 0; t < s.steps; ++t)
      for (std::size_t c = 0; c < C; ++c) {
        const double d = s.at(t, c) - sum[c] / static_cast<double>(rows);
        sq[c] += d * d;
      }
  for (std::size_t c = 0; c < C; ++c)
    stddev[c] = static_cast<Real>(std::max(std::sqrt(sq[c] / static_cast<double>(rows)), 1e-6));
  set_normalization(mean, stddev);
}

template <typename Real>
void BasicEncoder<Real>::fit_normalization(std::span<const SituationPair> pairs) {
  require(!pairs.empty(), ErrorKind::State, "fit_normalization needs training data");
  std::vector<Situation> flat;
  flat.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    flat.push_back(p.first);
    flat.push_back(p.second);
  }
  fit_normalization(std::span<const Situation>(flat));
}

template <typename Real>
void BasicEncoder<Real>::set_normalization(std::span<const Real> mean, std::span<const Real> stddev) {
  require(mean.size() == cfg_.channels && stddev.size() == cfg_.channels, ErrorKind::Shape,
          "normalization statistics must have one entry per channel");
  Matrix m(1, static_cast<Eigen::Index>(cfg_.channels)), s(1, static_cast<Eigen::Index>(cfg_.channels));
  for (std::size_t c = 0; c < cfg_.channels; ++c) {
    m(0, static_cast<Eigen::Index>(c)) = mean[c];
    s(0, static_cast<Eigen::Index>(c)) = stddev[c];
  }
  norm_.set(m, s);
}

template <typename Real>
void BasicEncoder<Real>::check_input(const Matrix& x, std::size_t batch) const {
  require(batch > 0 && static_cast<std::size_t>(x.rows()) == batch * cfg_.steps &&
              static_cast<std::size_t>(x.cols()) == cfg_.channels,
          ErrorKind::Shape,
          "encoder expects (" + std::to_string(batch) + ", " + std::to_string(cfg_.steps) + ", " +
              std::to_string(cfg_.channels) + ") input");
  require(norm_.ready(), ErrorKind::State, "input normalization statistics are not initialized");
}

template <typename Real>
typename BasicEncoder<Real>::Matrix BasicEncoder<Real>::train_forward(const Matrix& x, std::size_t batch,
                                                                      Rng& dropout_rng) {
  check_input(x, batch);
  Matrix h = norm_.forward(x);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i].forward(h, batch, cfg_.steps, true);
    h = bns_[i].forward(h, true);
    h = relus_[i].forward(h, true);
  }
  h = time_dense_.forward(h, true);
  h = dropout_.forward(h, dropout_rng, true);
  h = nn::GlobalAveragePool<Real>::forward(h, batch, cfg_.steps);
  h = head_.forward(h, true);
  cached_batch_ = batch;
  return h;
}

template <typename Real>
typename BasicEncoder<Real>::Matrix BasicEncoder<Real>::infer(const Matrix& x, std::size_t batch) const {
  check_input(x, batch);
  Matrix h = norm_.forward(x);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i].infer(h, batch, cfg_.steps);
    h = bns_[i].infer(h);
    h = nn::Relu<Real>::infer(h);
  }
  h = time_dense_.infer(h);
  h = nn::GlobalAveragePool<Real>::forward(h, batch, cfg_.steps);
  return head_.infer(h);
}

template <typename Real>
BasicTensor<Real> BasicEncoder<Real>::forward(const BasicTensor<Real>& x, Mode mode, Rng* dropout_rng) {
  require(x.shape.size() == 3 && x.shape[1] == cfg_.steps && x.shape[2] == cfg_.channels, ErrorKind::Shape,
          "encoder expects (B, " + std::to_string(cfg_.steps) + ", " + std::to_string(cfg_.channels) +
              ") input, got " + shape_string(x.shape));
  const std::size_t batch = x.shape[0];
  Eigen::Map<const Matrix> in(x.data.data(), static_cast<Eigen::Index>(batch * cfg_.steps),
                              static_cast<Eigen::Index>(cfg_.channels));
  Matrix out;
  if (mode == Mode::Train) {
    require(dropout_rng != nullptr, ErrorKind::State, "train-mode forward needs a dropout rng");
    out = train_forward(in, batch, *dropout_rng);
  } else {
    out = infer(in, batch);
  }
  return BasicTensor<Real>({batch, cfg_.embedding},
                           std::vector<Real>(out.data(), out.data() + out.size()));
}

template <typename Real>
typename BasicEncoder<Real>::Matrix BasicEncoder<Real>::backward(const Matrix& grad_out) {
  require(cached_batch_ > 0, ErrorKind::State, "backward called without a train-mode forward cache");
  require(static_cast<std::size_t>(grad_out.rows()) == cached_batch_ &&
              static_cast<std::size_t>(grad_out.cols()) == cfg_.embedding,
          ErrorKind::Shape, "loss gradient shape does not match the cached batch");
  Matrix g = head_.backward(grad_out);
  g = nn::GlobalAveragePool<Real>::backward(g, cfg_.steps);
  g = dropout_.backward(g);
  g = time_dense_.backward(g);
  for (std::size_t i = convs_.size(); i-- > 0;) {
    g = relus_[i].backward(g);
    g = bns_[i].backward(g);
    g = convs_[i].backward(g);
  }
  return norm_.backward(g);
}

template <typename Real>
std::vector<nn::Param<Real>*> BasicEncoder<Real>::tensors() {
  std::vector<nn::Param<Real>*> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    out.push_back(&convs_[i].weight());
    out.push_back(&convs_[i].bias());
    out.push_back(&bns_[i].gamma());
    out.push_back(&bns_[i].beta());
    out.push_back(&bns_[i].running_mean());
    out.push_back(&bns_[i].running_var());
  }
  out.push_back(&time_dense_.weight());
  out.push_back(&time_dense_.bias());
  out.push_back(&head_.weight());
  out.push_back(&head_.bias());
  return out;
}

template <typename Real>
std::vector<const nn::Param<Real>*> BasicEncoder<Real>::tensors() const {
  auto mut = const_cast<BasicEncoder*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

template <typename Real>
std::vector<nn::Param<Real>*> BasicEncoder<Real>::parameters() {
  std::vector<nn::Param<Real>*> out;
  for (auto* p : tensors())
    if (p->trainable) out.push_back(p);
  return out;
}

template <typename Real>
nn::Matrix<Real> stack_situations(std::span<const Situation* const> items, std::size_t steps,
                                  std::size_t channels) {
  nn::Matrix<Real> x(static_cast<Eigen::Index>(items.size() * steps), static_cast<Eigen::Index>(channels));
  for (std::size_t b = 0; b < items.size(); ++b) {
    const Situation& s = *items[b];
    require(s.steps == steps && s.channels == channels, ErrorKind::Shape,
            "situation '" + s.id + "' has shape (" + std::to_string(s.steps) + ", " +
                std::to_string(s.channels) + "), model expects (" + std::to_string(steps) + ", " +
                std::to_string(channels) + ")");
    for (std::size_t i = 0; i < s.values.size(); ++i)
      x.data()[b * steps * channels + i] = static_cast<Real>(s.values[i]);
  }
  return x;
}

template class BasicEncoder<float>;
template class BasicEncoder<double>;
template nn::Matrix<float> stack_situations<float>(std::span<const Situation* const>, std::size_t, std::size_t);
template nn::Matrix<double> stack_situations<double>(std::span<const Situation* const>, std::size_t,
                                                     std::size_t);

}  // namespace clsr
