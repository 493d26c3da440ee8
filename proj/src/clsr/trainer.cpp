#include "clsr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clsr/checkpoint.hpp"
#include "clsr/ntxent.hpp"

namespace clsr {

void TrainConfig::validate() const {
  require(tau > 0.0, ErrorKind::Config, "tau must be positive");
  require(batch_situations >= 2 && batch_situations % 2 == 0, ErrorKind::Config,
          "batch size must be even (it holds B/2 positive pairs)");
  require(lr > 0.0 && weight_decay >= 0.0, ErrorKind::Config, "lr must be positive and weight decay >= 0");
  require(patience >= 1 && max_epochs >= 1, ErrorKind::Config, "patience and max_epochs must be >= 1");
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::EarlyStopping:
      return "early_stopping";
    case StopReason::MaxEpochs:
      return "max_epochs";
  }
  return "unknown";
}

bool EarlyStopping::update(double val_loss) {
  ++epoch_;
  improved_ = val_loss < best_;
  if (improved_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

namespace {

std::vector<const Situation*> batch_members(std::span<const SituationPair> pairs,
                                            std::span<const std::size_t> order) {
  std::vector<const Situation*> out;
  out.reserve(order.size() * 2);
  for (auto idx : order) {
    out.push_back(&pairs[idx].first);
    out.push_back(&pairs[idx].second);
  }
  return out;
}

}  // namespace

double evaluation_loss(const Encoder& model, std::span<const SituationPair> pairs, const TrainConfig& cfg) {
  require(!pairs.empty(), ErrorKind::State, "evaluation loss needs at least one pair");
  const std::size_t per_batch = cfg.batch_situations / 2;
  const auto& mc = model.config();
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double weighted = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < pairs.size(); start += per_batch) {
    const std::size_t n = std::min(per_batch, pairs.size() - start);
    const auto members = batch_members(pairs, std::span(order).subspan(start, n));
    const auto x = stack_situations<float>(members, mc.steps, mc.channels);
    const auto z = model.infer(x, members.size());
    const auto res = nt_xent_loss(std::span<const float>(z.data(), static_cast<std::size_t>(z.size())),
                                  members.size(), mc.embedding, cfg.tau, false);
    weighted += res.loss * static_cast<double>(n);
    count += n;
  }
  return weighted / static_cast<double>(count);
}

TrainReport train(std::span<const SituationPair> train_pairs, std::span<const SituationPair> val_pairs,
                  const TrainConfig& cfg, Encoder& model, const std::string& checkpoint_path,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  require(!train_pairs.empty() && !val_pairs.empty(), ErrorKind::State,
          "training and validation sets must be non-empty");
  require(model.normalization_ready(), ErrorKind::State, "fit_normalization must run before training");
  const std::size_t per_batch = cfg.batch_situations / 2;
  require(train_pairs.size() >= per_batch, ErrorKind::Config,
          "training set has " + std::to_string(train_pairs.size()) + " pairs, fewer than one batch of " +
              std::to_string(per_batch));
  const auto& mc = model.config();

  AdamW optimizer(AdamWConfig{cfg.lr, cfg.weight_decay});
  EarlyStopping stopper(cfg.patience);
  TrainReport report;
  report.checkpoint_path = checkpoint_path;
  Encoder best = model;

  std::vector<std::size_t> order(train_pairs.size());
  const std::size_t batches = train_pairs.size() / per_batch;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = substream(cfg.rng_seed, {1, epoch});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    Rng dropout_rng = substream(cfg.rng_seed, {2, epoch});

    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const auto members = batch_members(train_pairs, std::span(order).subspan(b * per_batch, per_batch));
      const auto x = stack_situations<float>(members, mc.steps, mc.channels);
      const auto z = model.train_forward(x, members.size(), dropout_rng);
      const auto res = nt_xent_loss(std::span<const float>(z.data(), static_cast<std::size_t>(z.size())),
                                    members.size(), mc.embedding, cfg.tau);
      require(std::isfinite(res.loss), ErrorKind::Numeric,
              "non-finite training loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1));
      nn::Matrix<float> grad(z.rows(), z.cols());
      for (Eigen::Index i = 0; i < grad.size(); ++i) grad.data()[i] = static_cast<float>(res.grad[i]);
      model.backward(grad);
      optimizer.step(model);
      epoch_loss += res.loss;
    }

    EpochRecord rec{epoch, epoch_loss / static_cast<double>(batches), evaluation_loss(model, val_pairs, cfg)};
    require(std::isfinite(rec.val_loss), ErrorKind::Numeric,
            "non-finite validation loss at epoch " + std::to_string(epoch));
    report.epochs.push_back(rec);
    const bool stop = stopper.update(rec.val_loss);
    if (stopper.improved()) {
      best = model;
      if (!checkpoint_path.empty()) save_checkpoint(best, checkpoint_path);
    }
    if (on_epoch) on_epoch(rec);
    if (stop) {
      report.stop_reason = StopReason::EarlyStopping;
      break;
    }
  }
  report.best_epoch = stopper.best_epoch();
  report.best_val_loss = stopper.best();
  model = best;
  return report;
}

}  // namespace clsr
