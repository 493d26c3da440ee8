#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clsr/random.hpp"

namespace clsr {

using OptionalSeries = std::vector<std::optional<float>>;

/// Raw per-device samples at a fixed interval; absent = device not reporting.
struct RawSeries {
  std::string device_id;
  std::int64_t start_time = 0;
  int sample_interval = 10;
  OptionalSeries values;
};

struct SituationMeta {
  std::string device_id;
  std::int64_t start_time = 0;
};

/// A T x C window of telemetry with an explicit observation mask.
///
/// Values are row-major (row = time step). Cells with mask 0 hold 0 until
/// `impute` writes the sentinel into them.
struct Situation {
  std::string id;
  std::size_t steps = 0;
  std::size_t channels = 1;
  std::vector<float> values;
  std::vector<std::uint8_t> mask;
  std::optional<SituationMeta> meta;
  bool imputed = false;

  Situation() = default;
  Situation(std::string id_, std::size_t steps_, std::size_t channels_);

  float& at(std::size_t t, std::size_t c) { return values[t * channels + c]; }
  float at(std::size_t t, std::size_t c) const { return values[t * channels + c]; }
  bool observed(std::size_t t, std::size_t c) const { return mask[t * channels + c] != 0; }
  std::size_t observed_count() const;
  std::size_t size() const { return values.size(); }
};

struct SituationPair {
  Situation first;
  Situation second;
};

struct AugmentationSet {
  bool cyclic_shift = false;
  bool vertical_shift = false;
  bool scale = false;
  double shift_lo = -10.0;
  double shift_hi = 10.0;
  double scale_lo = 0.5;
  double scale_hi = 2.0;

  bool any() const { return cyclic_shift || vertical_shift || scale; }
};

struct PrepConfig {
  int segment_minutes = 60;
  int window_seconds = 60;
  std::size_t min_points = 10;
  float sentinel = -100.0f;
  float valid_lo = 0.0f;
  float valid_hi = 100.0f;
  AugmentationSet augmentations;
  std::uint64_t rng_seed = 42;

  /// Throws ErrorKind::Config on an inconsistent configuration.
  void validate() const;
};

struct PrepManifest {
  std::size_t raw_series = 0;
  std::size_t segments = 0;
  std::size_t pairs_discarded = 0;
  std::size_t pairs_emitted = 0;
  PrepConfig config;
};

struct PairDataset {
  std::vector<SituationPair> pairs;
  PrepManifest manifest;
};

/// Cuts a raw series into whole segments and averages the observed samples of
/// each window. A window without observations stays absent; a partial trailing
/// segment is dropped.
std::vector<OptionalSeries> segment_and_average(const RawSeries& raw, const PrepConfig& cfg);

/// Odd positions (1-based) go to `first`, even positions to `second`.
SituationPair odd_even_split(std::span<const std::optional<float>> seq, const std::string& id = "");

/// Inverse of odd_even_split for C = 1.
OptionalSeries interleave(const SituationPair& pair);

bool has_min_points(const Situation& s, std::size_t min_points);

Situation impute(Situation s, const PrepConfig& cfg);
Situation impute(Situation s, float sentinel);

// Deterministic forms. The rng overloads draw one parameter per situation.
Situation cyclic_shift(Situation s, std::size_t offset);
Situation vertical_shift(Situation s, float delta);
Situation scale(Situation s, float factor);

Situation augment_cyclic_shift(Situation s, Rng& rng);
Situation augment_vertical_shift(Situation s, Rng& rng, const AugmentationSet& aug = {});
Situation augment_scale(Situation s, Rng& rng, const AugmentationSet& aug = {});

/// segment -> split -> min-points filter -> augment second -> impute both.
/// Each raw series gets its own rng substream keyed by (rng_seed, index).
PairDataset build_pair_dataset(std::span<const RawSeries> raws, const PrepConfig& cfg);

}  // namespace clsr
