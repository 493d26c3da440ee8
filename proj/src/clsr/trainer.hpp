#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clsr/adamw.hpp"
#include "clsr/encoder.hpp"
#include "clsr/telemetry.hpp"

namespace clsr {

struct TrainConfig {
  std::string name = "clsr-10";
  double tau = 0.10;
  std::size_t batch_situations = 256;  // B situations = B/2 positive pairs
  double lr = 1e-5;
  double weight_decay = 1e-4;
  std::size_t patience = 5;
  std::size_t max_epochs = 30;  // bounded so a default run fits the time budget
  std::uint64_t rng_seed = 42;
  AugmentationSet augmentations;

  void validate() const;
};

enum class StopReason { EarlyStopping, MaxEpochs };
const char* to_string(StopReason r);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  StopReason stop_reason = StopReason::MaxEpochs;
  std::string checkpoint_path;
};

/// Tracks the best validation loss; `update` returns true when training
/// should stop (no improvement for `patience` consecutive epochs).
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  bool update(double val_loss);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mean NT-Xent over consecutive batches of `batch_situations`/2 pairs with
/// eval-mode (deterministic) embeddings. A trailing partial batch of at least
/// one pair is included, weighted by its size.
double evaluation_loss(const Encoder& model, std::span<const SituationPair> pairs, const TrainConfig& cfg);

/// Mini-batch contrastive training with validation early stopping. The model
/// must have normalization statistics; on return it holds the weights of the
/// best-validation epoch, which are also written to `checkpoint_path` when
/// non-empty.
TrainReport train(std::span<const SituationPair> train_pairs, std::span<const SituationPair> val_pairs,
                  const TrainConfig& cfg, Encoder& model, const std::string& checkpoint_path = "",
                  const EpochCallback& on_epoch = {});

}  // namespace clsr
