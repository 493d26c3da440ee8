#include "clsr/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "clsr/error.hpp"

namespace clsr::synth {

namespace {

constexpr double kTruncation = 2.5;

double truncated_noise(Rng& rng, double stddev) {
  if (stddev <= 0.0) return 0.0;
  for (;;) {
    const double z = normal(rng, 0.0, 1.0);
    if (std::abs(z) <= kTruncation) return z * stddev;
  }
}

std::size_t uniform_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + uniform_index(rng, hi - lo + 1);
}

float clip(double v) { return static_cast<float>(std::clamp(v, 0.0, 100.0)); }

Situation observed_series(const std::string& id, const std::vector<double>& values) {
  Situation s(id, values.size(), 1);
  for (std::size_t t = 0; t < values.size(); ++t) {
    s.values[t] = clip(values[t]);
    s.mask[t] = 1;
  }
  return s;
}

void punch_gap(Situation& s, std::size_t start, std::size_t len) {
  for (std::size_t t = start; t < start + len && t < s.steps; ++t) {
    s.values[t] = 0.0f;
    s.mask[t] = 0;
  }
}

/// Places `lengths.size()` gaps at random positions with at least one
/// observed step between neighbours.
void punch_gaps(Situation& s, const std::vector<std::size_t>& lengths, Rng& rng) {
  std::size_t total = 0;
  for (auto l : lengths) total += l;
  const std::size_t separators = lengths.size() - 1;
  require(total + separators <= s.steps, ErrorKind::Config, "gaps do not fit into the situation");
  // Distribute the spare observed steps over the lengths.size() + 1 slots.
  std::size_t spare = s.steps - total - separators;
  std::vector<std::size_t> slack(lengths.size() + 1, 0);
  for (; spare > 0; --spare) ++slack[uniform_index(rng, slack.size())];
  std::size_t pos = slack[0];
  for (std::size_t g = 0; g < lengths.size(); ++g) {
    punch_gap(s, pos, lengths[g]);
    pos += lengths[g] + 1 + slack[g + 1];
  }
}

std::vector<double> level_with_noise(std::size_t n, double level, double noise, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = level + truncated_noise(rng, noise);
  return v;
}

Situation make_distractor(const ClassSpec& spec, Rng& rng, const std::string& id) {
  const std::size_t n = spec.steps;
  std::vector<double> v(n);
  switch (uniform_index(rng, 8)) {
    case 0: {  // random walk
      double x = uniform(rng, 5.0, 95.0);
      const double step = uniform(rng, 2.0, 6.0);
      for (auto& y : v) {
        x = std::clamp(x + normal(rng, 0.0, step), 0.0, 100.0);
        y = x;
      }
      break;
    }
    case 1: {  // ramp
      const double a = uniform(rng, 0.0, 100.0);
      double b = uniform(rng, 0.0, 100.0);
      if (std::abs(a - b) < 25.0) b = a < 50.0 ? a + 40.0 : a - 40.0;
      for (std::size_t t = 0; t < n; ++t)
        v[t] = a + (b - a) * static_cast<double>(t) / static_cast<double>(n - 1) + truncated_noise(rng, 2.0);
      break;
    }
    case 2: {  // oscillation
      const double mean = uniform(rng, 20.0, 70.0), amp = uniform(rng, 10.0, 25.0);
      const double period = uniform(rng, 6.0, 20.0), phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      for (std::size_t t = 0; t < n; ++t)
        v[t] = mean + amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase) +
               truncated_noise(rng, 1.5);
      break;
    }
    case 3: {  // level shift without recovery
      const double a = uniform(rng, 5.0, 95.0);
      double b = uniform(rng, 5.0, 95.0);
      if (std::abs(a - b) < 20.0) b = a < 50.0 ? a + 30.0 : a - 30.0;
      const std::size_t at = uniform_between(rng, 5, n - 5);
      for (std::size_t t = 0; t < n; ++t) v[t] = (t < at ? a : b) + truncated_noise(rng, 2.0);
      break;
    }
    case 4: {  // spikes on a low base
      v = level_with_noise(n, uniform(rng, 5.0, 50.0), 2.0, rng);
      const std::size_t spikes = uniform_between(rng, 2, 5);
      for (std::size_t i = 0; i < spikes; ++i) v[uniform_index(rng, n)] += uniform(rng, 20.0, 50.0);
      break;
    }
    case 5: {  // temporary rise
      const double base = uniform(rng, 5.0, 30.0);
      v = level_with_noise(n, base, 2.0, rng);
      const std::size_t width = uniform_between(rng, 3, 8);
      const std::size_t start = uniform_between(rng, 2, n - 2 - width);
      const double rise = uniform(rng, 25.0, 50.0);
      for (std::size_t t = start; t < start + width; ++t) v[t] += rise;
      break;
    }
    case 6: {  // noisy level
      v = level_with_noise(n, uniform(rng, 0.0, 100.0), uniform(rng, 5.0, 12.0), rng);
      break;
    }
    default: {  // short blip of missing data on a quiet level
      const double level = uniform(rng, 0.0, 1.0) < 0.5 ? uniform(rng, 0.0, 12.0) : uniform(rng, 50.0, 95.0);
      Situation s = observed_series(id, level_with_noise(n, level, 2.0, rng));
      const std::size_t len = uniform_between(rng, 1, 2);
      punch_gap(s, uniform_index(rng, n - len + 1), len);
      return s;
    }
  }
  return observed_series(id, v);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

const char* to_string(PatternClass c) {
  switch (c) {
    case PatternClass::Drop:
      return "drop";
    case PatternClass::MultiDisassoc:
      return "multi_disassoc";
    case PatternClass::SingleDisassoc:
      return "single_disassoc";
    case PatternClass::Stable20:
      return "stable20";
    case PatternClass::Stable40:
      return "stable40";
    case PatternClass::Other:
      return "other";
  }
  return "other";
}

PatternClass class_from_string(const std::string& name) {
  for (auto c : {PatternClass::Drop, PatternClass::MultiDisassoc, PatternClass::SingleDisassoc,
                 PatternClass::Stable20, PatternClass::Stable40, PatternClass::Other})
    if (name == to_string(c)) return c;
  fail(ErrorKind::Config, "unknown pattern class '" + name + "'");
}

Situation generate_instance(PatternClass cls, const ClassSpec& spec, Rng& rng, const std::string& id) {
  const std::size_t n = spec.steps;
  require(n >= 20, ErrorKind::Config, "synthetic classes need at least 20 steps");
  switch (cls) {
    case PatternClass::Drop: {
      const double high = uniform(rng, spec.drop_high_lo, spec.drop_high_hi);
      const double floor = high * uniform(rng, spec.drop_floor_lo, spec.drop_floor_hi);
      const std::size_t width = uniform_between(rng, spec.drop_width_lo, spec.drop_width_hi);
      const std::size_t start = uniform_between(rng, 2, n - 2 - width);
      std::vector<double> v(n);
      for (std::size_t t = 0; t < n; ++t)
        v[t] = (t >= start && t < start + width ? floor : high) + truncated_noise(rng, spec.drop_noise);
      return observed_series(id, v);
    }
    case PatternClass::MultiDisassoc: {
      Situation s = observed_series(
          id, level_with_noise(n, uniform(rng, spec.gap_level_lo, spec.gap_level_hi), spec.gap_noise, rng));
      std::vector<std::size_t> lengths(uniform_between(rng, spec.multi_gaps_lo, spec.multi_gaps_hi));
      for (auto& l : lengths) l = uniform_between(rng, spec.multi_gap_len_lo, spec.multi_gap_len_hi);
      punch_gaps(s, lengths, rng);
      return s;
    }
    case PatternClass::SingleDisassoc: {
      Situation s = observed_series(
          id, level_with_noise(n, uniform(rng, spec.gap_level_lo, spec.gap_level_hi), spec.gap_noise, rng));
      punch_gaps(s, {uniform_between(rng, spec.single_gap_len_lo, spec.single_gap_len_hi)}, rng);
      return s;
    }
    case PatternClass::Stable20:
      return observed_series(id, level_with_noise(n, 20.0, spec.stable20_noise, rng));
    case PatternClass::Stable40:
      return observed_series(id, level_with_noise(n, 40.0, spec.stable40_noise, rng));
    case PatternClass::Other:
      for (;;) {
        Situation s = make_distractor(spec, rng, id);
        bool labeled = false;
        for (auto c : {PatternClass::Drop, PatternClass::MultiDisassoc, PatternClass::SingleDisassoc,
                       PatternClass::Stable20, PatternClass::Stable40})
          labeled = labeled || satisfies(c, s, spec);
        if (!labeled) return s;
      }
  }
  fail(ErrorKind::Config, "unhandled pattern class");
}

std::vector<std::size_t> missing_runs(const Situation& s) {
  std::vector<std::size_t> runs;
  std::size_t run = 0;
  for (std::size_t t = 0; t < s.steps; ++t) {
    bool missing = false;
    for (std::size_t c = 0; c < s.channels; ++c) missing = missing || !s.observed(t, c);
    if (missing) {
      ++run;
    } else if (run > 0) {
      runs.push_back(run);
      run = 0;
    }
  }
  if (run > 0) runs.push_back(run);
  return runs;
}

bool is_drop(const Situation& s) {
  if (s.observed_count() != s.size() || s.channels != 1 || s.steps < 8) return false;
  const std::vector<double> v(s.values.begin(), s.values.end());
  const double hi = median(v);
  const std::size_t n = v.size();
  std::size_t first = n, last = 0, below = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (v[t] < hi - 20.0) {
      first = std::min(first, t);
      last = t;
      ++below;
    } else if (v[t] < hi - 10.0) {
      return false;  // neither plateau nor trough
    }
  }
  if (below < 2 || below > n / 2) return false;
  if (last - first + 1 != below) return false;  // one contiguous trough
  return first >= 2 && last + 3 <= n;           // recovers on both sides
}

bool is_multi_disassoc(const Situation& s) { return missing_runs(s).size() >= 2; }

bool is_single_disassoc(const Situation& s) {
  const auto runs = missing_runs(s);
  return runs.size() == 1 && runs[0] >= 3;
}

bool is_stable(const Situation& s, double level, double tolerance) {
  if (s.observed_count() != s.size()) return false;
  return std::all_of(s.values.begin(), s.values.end(),
                     [&](float v) { return std::abs(static_cast<double>(v) - level) <= tolerance; });
}

bool is_stable20(const Situation& s, const ClassSpec& spec) { return is_stable(s, 20.0, 3.0 * spec.stable20_noise); }
bool is_stable40(const Situation& s, const ClassSpec& spec) { return is_stable(s, 40.0, 3.0 * spec.stable40_noise); }

bool satisfies(PatternClass cls, const Situation& s, const ClassSpec& spec) {
  switch (cls) {
    case PatternClass::Drop:
      return is_drop(s);
    case PatternClass::MultiDisassoc:
      return is_multi_disassoc(s);
    case PatternClass::SingleDisassoc:
      return is_single_disassoc(s);
    case PatternClass::Stable20:
      return is_stable20(s, spec);
    case PatternClass::Stable40:
      return is_stable40(s, spec);
    case PatternClass::Other:
      return !is_drop(s) && !is_multi_disassoc(s) && !is_single_disassoc(s) && !is_stable20(s, spec) &&
             !is_stable40(s, spec);
  }
  return false;
}

LabeledSet generate_labeled(const LabeledConfig& cfg) {
  LabeledSet out;
  const std::array classes{PatternClass::Drop, PatternClass::MultiDisassoc, PatternClass::SingleDisassoc,
                           PatternClass::Stable20, PatternClass::Stable40};
  auto id_for = [](const char* label, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s-%02zu", label, i + 1);
    return std::string(buf);
  };
  for (std::size_t c = 0; c < classes.size(); ++c) {
    Rng rng = substream(cfg.rng_seed, {100, c});
    std::vector<std::string> members;
    for (std::size_t i = 0; i < cfg.members_per_class; ++i) {
      const std::string id = id_for(to_string(classes[c]), i);
      out.situations.push_back(impute(generate_instance(classes[c], cfg.spec, rng, id), cfg.sentinel));
      members.push_back(id);
    }
    out.tasks.classes.emplace_back(to_string(classes[c]), std::move(members));
  }
  Rng rng = substream(cfg.rng_seed, {200});
  for (std::size_t i = 0; i < cfg.distractors; ++i) {
    const std::string id = id_for("other", i);
    out.situations.push_back(impute(generate_instance(PatternClass::Other, cfg.spec, rng, id), cfg.sentinel));
    out.tasks.distractors.push_back(id);
  }
  return out;
}

namespace {

enum class Regime { Stable, Drop, RandomWalk, Ramp, Oscillation, Spiky, LevelShift, Rise };

void fill_hour(std::vector<double>& v, Regime regime, Rng& rng) {
  const std::size_t n = v.size();
  const double noise = uniform(rng, 0.5, 5.0);
  switch (regime) {
    case Regime::Stable: {
      const double level = uniform(rng, 0.0, 95.0);
      for (auto& x : v) x = level + normal(rng, 0.0, noise);
      break;
    }
    case Regime::Drop: {
      const double high = uniform(rng, 40.0, 95.0), floor = high * uniform(rng, 0.05, 0.5);
      const std::size_t width = uniform_between(rng, n / 20, n / 4);
      const std::size_t start = uniform_between(rng, n / 15, n - n / 15 - width);
      for (std::size_t t = 0; t < n; ++t)
        v[t] = (t >= start && t < start + width ? floor : high) + normal(rng, 0.0, noise);
      break;
    }
    case Regime::RandomWalk: {
      double x = uniform(rng, 5.0, 95.0);
      const double step = uniform(rng, 0.3, 1.5);
      for (auto& y : v) {
        x = std::clamp(x + normal(rng, 0.0, step), 0.0, 100.0);
        y = x;
      }
      break;
    }
    case Regime::Ramp: {
      const double a = uniform(rng, 0.0, 100.0), b = uniform(rng, 0.0, 100.0);
      for (std::size_t t = 0; t < n; ++t)
        v[t] = a + (b - a) * static_cast<double>(t) / static_cast<double>(n - 1) + normal(rng, 0.0, noise);
      break;
    }
    case Regime::Oscillation: {
      const double mean = uniform(rng, 15.0, 75.0), amp = uniform(rng, 5.0, 25.0);
      const double period = uniform(rng, n / 10.0, n / 1.5), phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      for (std::size_t t = 0; t < n; ++t)
        v[t] = mean + amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase) +
               normal(rng, 0.0, noise);
      break;
    }
    case Regime::Spiky: {
      const double base = uniform(rng, 0.0, 50.0);
      for (auto& x : v) x = base + normal(rng, 0.0, noise);
      const std::size_t bursts = uniform_between(rng, 2, 8);
      for (std::size_t i = 0; i < bursts; ++i) {
        const std::size_t at = uniform_index(rng, n - 6), len = uniform_between(rng, 1, 6);
        const double height = uniform(rng, 15.0, 60.0);
        for (std::size_t t = at; t < at + len; ++t) v[t] += height;
      }
      break;
    }
    case Regime::LevelShift: {
      const double a = uniform(rng, 0.0, 95.0), b = uniform(rng, 0.0, 95.0);
      const std::size_t at = uniform_between(rng, n / 10, n - n / 10);
      for (std::size_t t = 0; t < n; ++t) v[t] = (t < at ? a : b) + normal(rng, 0.0, noise);
      break;
    }
    case Regime::Rise: {
      const double base = uniform(rng, 0.0, 40.0), rise = uniform(rng, 20.0, 55.0);
      const std::size_t width = uniform_between(rng, n / 20, n / 4);
      const std::size_t start = uniform_between(rng, n / 15, n - n / 15 - width);
      for (std::size_t t = 0; t < n; ++t)
        v[t] = base + (t >= start && t < start + width ? rise : 0.0) + normal(rng, 0.0, noise);
      break;
    }
  }
}

}  // namespace

std::vector<RawSeries> generate_unlabeled(const UnlabeledConfig& cfg) {
  require(cfg.sample_interval > 0 && 3600 % cfg.sample_interval == 0, ErrorKind::Config,
          "sample_interval must divide one hour");
  require(cfg.missing_rate >= 0.0 && cfg.missing_rate < 1.0 && cfg.mean_episode >= 1.0, ErrorKind::Config,
          "missing_rate must lie in [0, 1) and mean_episode >= 1");
  const std::size_t per_hour = static_cast<std::size_t>(3600 / cfg.sample_interval);
  // Two-state chain with stationary missing fraction missing_rate.
  const double p_end = 1.0 / cfg.mean_episode;
  const double p_start = cfg.missing_rate * p_end / (1.0 - cfg.missing_rate);
  static constexpr std::array<double, 8> kWeights{0.22, 0.14, 0.12, 0.1, 0.1, 0.12, 0.1, 0.1};

  std::vector<RawSeries> out;
  out.reserve(cfg.series);
  for (std::size_t s = 0; s < cfg.series; ++s) {
    Rng rng = substream(cfg.rng_seed, {300, s});
    char dev[32];
    std::snprintf(dev, sizeof(dev), "dev-%05zu", s);
    RawSeries raw{dev, cfg.start_time, cfg.sample_interval, {}};
    raw.values.reserve(cfg.hours_per_series * per_hour);

    bool missing = uniform(rng, 0.0, 1.0) < cfg.missing_rate;
    std::vector<double> hour(per_hour);
    std::discrete_distribution<std::size_t> pick(kWeights.begin(), kWeights.end());
    for (std::size_t h = 0; h < cfg.hours_per_series; ++h) {
      fill_hour(hour, static_cast<Regime>(pick(rng)), rng);
      for (double v : hour) {
        if (missing)
          raw.values.emplace_back();
        else
          raw.values.emplace_back(clip(v));
        missing = missing ? uniform(rng, 0.0, 1.0) >= p_end : uniform(rng, 0.0, 1.0) < p_start;
      }
    }
    out.push_back(std::move(raw));
  }
  return out;
}

}  // namespace clsr::synth
