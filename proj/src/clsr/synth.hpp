#pragma once

// Synthetic WLAN retransmission telemetry: five labeled pattern classes plus
// distractors at situation resolution, and a large unlabeled raw corpus at
// 10-second resolution.

#include <cstdint>
#include <string>
#include <vector>

#include "clsr/evaluation.hpp"
#include "clsr/telemetry.hpp"

namespace clsr::synth {

enum class PatternClass { Drop, MultiDisassoc, SingleDisassoc, Stable20, Stable40, Other };

const char* to_string(PatternClass c);
PatternClass class_from_string(const std::string& name);

/// Shape parameters for every class. Noise is truncated at 2.5 standard
/// deviations so generated members always satisfy their class predicate.
struct ClassSpec {
  std::size_t steps = 30;
  // drop: plateau, temporary fall, recovery
  double drop_high_lo = 55.0, drop_high_hi = 85.0;
  double drop_floor_lo = 0.05, drop_floor_hi = 0.35;  // fraction of the plateau
  std::size_t drop_width_lo = 3, drop_width_hi = 8;
  double drop_noise = 2.0;
  // disassociations
  double gap_level_lo = 10.0, gap_level_hi = 60.0;
  double gap_noise = 2.5;
  std::size_t multi_gaps_lo = 2, multi_gaps_hi = 4;
  std::size_t multi_gap_len_lo = 1, multi_gap_len_hi = 4;
  std::size_t single_gap_len_lo = 5, single_gap_len_hi = 12;
  // stable levels
  double stable20_noise = 1.2;
  double stable40_noise = 2.5;
};

struct LabeledConfig {
  ClassSpec spec;
  std::size_t members_per_class = 8;
  std::size_t distractors = 48;
  float sentinel = -100.0f;
  std::uint64_t rng_seed = 42;
};

struct LabeledSet {
  std::vector<Situation> situations;  // class members first, then distractors; imputed
  TaskSet tasks;
};

/// One un-imputed situation of the given class.
Situation generate_instance(PatternClass cls, const ClassSpec& spec, Rng& rng, const std::string& id);

LabeledSet generate_labeled(const LabeledConfig& cfg);

// Machine-checkable class predicates on un-imputed or imputed situations
// (only the mask and observed values are inspected).
std::vector<std::size_t> missing_runs(const Situation& s);
bool is_drop(const Situation& s);
bool is_multi_disassoc(const Situation& s);
bool is_single_disassoc(const Situation& s);
bool is_stable(const Situation& s, double level, double tolerance);
bool is_stable20(const Situation& s, const ClassSpec& spec);
bool is_stable40(const Situation& s, const ClassSpec& spec);
bool satisfies(PatternClass cls, const Situation& s, const ClassSpec& spec);

struct UnlabeledConfig {
  std::size_t series = 2250;
  std::size_t hours_per_series = 10;
  int sample_interval = 10;
  /// Stationary fraction of missing samples produced by the disconnect process.
  double missing_rate = 0.08;
  /// Mean disconnect episode length in samples.
  double mean_episode = 24.0;
  std::int64_t start_time = 1'700'000'400;  // hour aligned
  std::uint64_t rng_seed = 42;
};

/// Each hour of each series follows one regime (stable, drop, random walk,
/// ramp, oscillation, spiky); missing samples come from a two-state
/// disconnect process. Values are clipped to [0, 100].
std::vector<RawSeries> generate_unlabeled(const UnlabeledConfig& cfg);

}  // namespace clsr::synth
