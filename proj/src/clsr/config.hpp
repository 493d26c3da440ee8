#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clsr/encoder.hpp"
#include "clsr/jsonl.hpp"
#include "clsr/synth.hpp"
#include "clsr/telemetry.hpp"
#include "clsr/trainer.hpp"

namespace clsr {

/// The eight named model configurations: temperature 0.10 / 0.20 crossed with
/// no augmentation, cyclic shift, vertical shift and scaling.
const std::vector<std::string>& preset_names();

/// Defaults with the named preset's tau and augmentation flags applied.
TrainConfig preset(const std::string& name);

/// Everything one pipeline run needs. The global seed is propagated into
/// every module's own seed field.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string preset = "clsr-10";
  PrepConfig prep;
  TrainConfig train;
  ModelConfig model;
  synth::UnlabeledConfig unlabeled;
  synth::LabeledConfig labeled;
  std::size_t train_pairs = 20000;
  std::size_t val_pairs = 2000;
  std::vector<std::size_t> eval_ks{1, 3, 5};
  std::vector<std::string> reproduce_presets = preset_names();

  /// Re-applies the preset and seed to the module configs.
  void apply_preset(const std::string& name);
  void propagate_seed();
  void validate() const;
};

/// Layered: defaults < "preset" < explicit sections of the document.
///
///   {"seed": 42, "preset": "clsr-10",
///    "data":  {"series", "hours_per_series", "missing_rate", "mean_episode",
///              "members_per_class", "distractors", "train_pairs", "val_pairs"},
///    "prep":  {...}, "train": {"tau", "batch_size", "lr", "weight_decay",
///              "patience", "max_epochs"},
///    "model": {"steps", "embedding", "conv_widths", "dense_units", "kernel",
///              "dropout", "bn_epsilon", "bn_momentum"},
///    "eval":  {"ks": [1, 3, 5]}, "reproduce": {"presets": [...]}}
RunConfig run_config_from_json(const jsonl::Json& doc);
jsonl::Json to_json(const RunConfig& cfg);
jsonl::Json to_json(const TrainConfig& cfg);

}  // namespace clsr
