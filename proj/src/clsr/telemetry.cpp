#include "clsr/telemetry.hpp"

#include <algorithm>
#include <numeric>

#include "clsr/error.hpp"

namespace clsr {

Situation::Situation(std::string id_, std::size_t steps_, std::size_t channels_)
    : id(std::move(id_)),
      steps(steps_),
      channels(channels_),
      values(steps_ * channels_, 0.0f),
      mask(steps_ * channels_, 0) {}

std::size_t Situation::observed_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

void PrepConfig::validate() const {
  require(segment_minutes > 0 && window_seconds > 0, ErrorKind::Config,
          "segment_minutes and window_seconds must be positive");
  require((segment_minutes * 60) % window_seconds == 0, ErrorKind::Config,
          "segment length is not a multiple of window_seconds");
  require((segment_minutes * 60 / window_seconds) % 2 == 0, ErrorKind::Config,
          "windows per segment must be even for odd-even splitting");
  require(valid_lo < valid_hi, ErrorKind::Config, "valid range is empty");
  require(sentinel < valid_lo || sentinel > valid_hi, ErrorKind::Config,
          "sentinel lies inside the valid feature range");
  require(augmentations.shift_lo < augmentations.shift_hi, ErrorKind::Config,
          "vertical shift bounds must satisfy lo < hi");
  require(augmentations.scale_lo > 0.0 && augmentations.scale_lo < augmentations.scale_hi,
          ErrorKind::Config, "scale bounds must be positive with lo < hi");
}

std::vector<OptionalSeries> segment_and_average(const RawSeries& raw, const PrepConfig& cfg) {
  require(raw.sample_interval > 0 && cfg.window_seconds > 0 &&
              cfg.window_seconds % raw.sample_interval == 0,
          ErrorKind::Config, "sample_interval must divide window_seconds");
  require(cfg.segment_minutes > 0 && (cfg.segment_minutes * 60) % cfg.window_seconds == 0,
          ErrorKind::Config, "window_seconds must divide the segment length");

  const std::size_t per_window = static_cast<std::size_t>(cfg.window_seconds / raw.sample_interval);
  const std::size_t windows = static_cast<std::size_t>(cfg.segment_minutes * 60 / cfg.window_seconds);
  const std::size_t per_segment = per_window * windows;

  std::vector<OptionalSeries> out;
  for (std::size_t seg = 0; (seg + 1) * per_segment <= raw.values.size(); ++seg) {
    OptionalSeries seq(windows);
    for (std::size_t w = 0; w < windows; ++w) {
      double sum = 0.0;
      std::size_t n = 0;
      const std::size_t base = seg * per_segment + w * per_window;
      for (std::size_t i = 0; i < per_window; ++i) {
        if (const auto& v = raw.values[base + i]) {
          sum += *v;
          ++n;
        }
      }
      if (n > 0) seq[w] = static_cast<float>(sum / static_cast<double>(n));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

SituationPair odd_even_split(std::span<const std::optional<float>> seq, const std::string& id) {
  require(seq.size() % 2 == 0, ErrorKind::Shape,
          "odd_even_split needs an even-length sequence, got " + std::to_string(seq.size()));
  const std::size_t steps = seq.size() / 2;
  SituationPair pair{Situation(id.empty() ? "" : id + "#a", steps, 1),
                     Situation(id.empty() ? "" : id + "#b", steps, 1)};
  for (std::size_t t = 0; t < steps; ++t) {
    if (const auto& v = seq[2 * t]) {
      pair.first.values[t] = *v;
      pair.first.mask[t] = 1;
    }
    if (const auto& v = seq[2 * t + 1]) {
      pair.second.values[t] = *v;
      pair.second.mask[t] = 1;
    }
  }
  return pair;
}

OptionalSeries interleave(const SituationPair& pair) {
  require(pair.first.channels == 1 && pair.second.channels == 1 &&
              pair.first.steps == pair.second.steps,
          ErrorKind::Shape, "interleave needs two single-channel situations of equal length");
  OptionalSeries out(2 * pair.first.steps);
  for (std::size_t t = 0; t < pair.first.steps; ++t) {
    if (pair.first.mask[t]) out[2 * t] = pair.first.values[t];
    if (pair.second.mask[t]) out[2 * t + 1] = pair.second.values[t];
  }
  return out;
}

bool has_min_points(const Situation& s, std::size_t min_points) {
  return s.observed_count() >= min_points;
}

Situation impute(Situation s, float sentinel) {
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (!s.mask[i]) s.values[i] = sentinel;
  }
  s.imputed = true;
  return s;
}

Situation impute(Situation s, const PrepConfig& cfg) {
  require(cfg.sentinel < cfg.valid_lo || cfg.sentinel > cfg.valid_hi, ErrorKind::Config,
          "sentinel lies inside the valid feature range");
  return impute(std::move(s), cfg.sentinel);
}

Situation cyclic_shift(Situation s, std::size_t offset) {
  if (s.steps == 0) return s;
  offset %= s.steps;
  if (offset == 0) return s;
  // Rotating right by `offset` rows: new[t] = old[t - offset].
  const auto row_shift = static_cast<std::ptrdiff_t>((s.steps - offset) * s.channels);
  std::rotate(s.values.begin(), s.values.begin() + row_shift, s.values.end());
  std::rotate(s.mask.begin(), s.mask.begin() + row_shift, s.mask.end());
  return s;
}

Situation vertical_shift(Situation s, float delta) {
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (s.mask[i]) s.values[i] += delta;
  }
  return s;
}

Situation scale(Situation s, float factor) {
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (s.mask[i]) s.values[i] *= factor;
  }
  return s;
}

Situation augment_cyclic_shift(Situation s, Rng& rng) {
  if (s.steps == 0) return s;
  const std::size_t offset = uniform_index(rng, s.steps);
  return cyclic_shift(std::move(s), offset);
}

Situation augment_vertical_shift(Situation s, Rng& rng, const AugmentationSet& aug) {
  const auto delta = static_cast<float>(uniform(rng, aug.shift_lo, aug.shift_hi));
  return vertical_shift(std::move(s), delta);
}

Situation augment_scale(Situation s, Rng& rng, const AugmentationSet& aug) {
  const auto factor = static_cast<float>(uniform(rng, aug.scale_lo, aug.scale_hi));
  return scale(std::move(s), factor);
}

PairDataset build_pair_dataset(std::span<const RawSeries> raws, const PrepConfig& cfg) {
  cfg.validate();
  PairDataset out;
  out.manifest.config = cfg;
  out.manifest.raw_series = raws.size();

  const std::int64_t segment_seconds = static_cast<std::int64_t>(cfg.segment_minutes) * 60;
  for (std::size_t r = 0; r < raws.size(); ++r) {
    const RawSeries& raw = raws[r];
    Rng rng = substream(cfg.rng_seed, {r});
    const auto sequences = segment_and_average(raw, cfg);
    out.manifest.segments += sequences.size();

    for (std::size_t seg = 0; seg < sequences.size(); ++seg) {
      const std::int64_t seg_start = raw.start_time + static_cast<std::int64_t>(seg) * segment_seconds;
      SituationPair pair =
          odd_even_split(sequences[seg], raw.device_id + "@" + std::to_string(seg_start));
      if (!has_min_points(pair.first, cfg.min_points) || !has_min_points(pair.second, cfg.min_points)) {
        ++out.manifest.pairs_discarded;
        continue;
      }
      const SituationMeta meta{raw.device_id, seg_start};
      pair.first.meta = meta;
      pair.second.meta = meta;

      const auto& aug = cfg.augmentations;
      if (aug.cyclic_shift) pair.second = augment_cyclic_shift(std::move(pair.second), rng);
      if (aug.vertical_shift) pair.second = augment_vertical_shift(std::move(pair.second), rng, aug);
      if (aug.scale) pair.second = augment_scale(std::move(pair.second), rng, aug);

      pair.first = impute(std::move(pair.first), cfg);
      pair.second = impute(std::move(pair.second), cfg);
      out.pairs.push_back(std::move(pair));
    }
  }
  out.manifest.pairs_emitted = out.pairs.size();
  require(!out.pairs.empty(), ErrorKind::EmptyDataset,
          "data preparation produced no pairs from " + std::to_string(raws.size()) + " raw series");
  return out;
}

}  // namespace clsr
