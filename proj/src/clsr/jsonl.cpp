#include "clsr/jsonl.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "clsr/error.hpp"

namespace clsr::jsonl {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  return out;
}

template <typename T, typename Parse>
std::vector<T> read_lines(const std::filesystem::path& path, Parse parse) {
  auto in = open_in(path);
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(Json::parse(line)));
    } catch (const Json::exception& e) {
      fail(ErrorKind::Input, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.kind(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
void write_lines(const std::filesystem::path& path, const std::vector<T>& items) {
  auto out = open_out(path);
  for (const auto& item : items) out << to_json(item).dump() << '\n';
  require(static_cast<bool>(out), ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace

double tidy(float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  *res.ptr = '\0';
  return std::strtod(buf, nullptr);
}

Json to_json(const Situation& s) {
  Json j;
  j["id"] = s.id;
  Json rows = Json::array();
  for (std::size_t t = 0; t < s.steps; ++t) {
    Json row = Json::array();
    for (std::size_t c = 0; c < s.channels; ++c) {
      if (s.observed(t, c))
        row.push_back(tidy(s.at(t, c)));
      else
        row.push_back(nullptr);
    }
    rows.push_back(std::move(row));
  }
  j["values"] = std::move(rows);
  if (s.meta) j["meta"] = {{"device_id", s.meta->device_id}, {"start_time", s.meta->start_time}};
  if (s.imputed) {
    // All masked-out cells share one sentinel; recover it from any of them.
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (!s.mask[i]) {
        j["imputed_with"] = tidy(s.values[i]);
        break;
      }
    }
    if (!j.contains("imputed_with")) j["imputed_with"] = nullptr;
  }
  return j;
}

Situation situation_from_json(const Json& j) {
  require(j.is_object() && j.contains("values") && j["values"].is_array(), ErrorKind::Input,
          "situation object needs a values array");
  const auto& rows = j["values"];
  require(!rows.empty() && rows[0].is_array() && !rows[0].empty(), ErrorKind::Input,
          "situation values must be a non-empty array of non-empty rows");
  const std::size_t channels = rows[0].size();
  Situation s(j.value("id", std::string{}), rows.size(), channels);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    require(rows[t].is_array() && rows[t].size() == channels, ErrorKind::Shape,
            "situation '" + s.id + "' has ragged rows");
    for (std::size_t c = 0; c < channels; ++c) {
      const auto& v = rows[t][c];
      if (v.is_null()) continue;
      require(v.is_number(), ErrorKind::Input, "situation '" + s.id + "' has a non-numeric cell");
      s.at(t, c) = v.get<float>();
      s.mask[t * channels + c] = 1;
    }
  }
  if (j.contains("meta") && j["meta"].is_object()) {
    s.meta = SituationMeta{j["meta"].value("device_id", std::string{}),
                           j["meta"].value("start_time", std::int64_t{0})};
  }
  if (j.contains("imputed_with")) {
    if (j["imputed_with"].is_number()) {
      s = impute(std::move(s), j["imputed_with"].get<float>());
    } else {
      s.imputed = true;  // nothing was missing
    }
  }
  return s;
}

Json to_json(const SituationPair& p) {
  Json j;
  j["first"] = to_json(p.first);
  j["second"] = to_json(p.second);
  return j;
}

SituationPair pair_from_json(const Json& j) {
  require(j.is_object() && j.contains("first") && j.contains("second"), ErrorKind::Input,
          "pair object needs first and second");
  SituationPair p{situation_from_json(j["first"]), situation_from_json(j["second"])};
  require(p.first.steps == p.second.steps && p.first.channels == p.second.channels, ErrorKind::Shape,
          "pair members differ in shape");
  return p;
}

Json to_json(const RawSeries& r) {
  Json j;
  j["device_id"] = r.device_id;
  j["start_time"] = r.start_time;
  j["sample_interval"] = r.sample_interval;
  Json values = Json::array();
  for (const auto& v : r.values) {
    if (v)
      values.push_back(tidy(*v));
    else
      values.push_back(nullptr);
  }
  j["values"] = std::move(values);
  return j;
}

RawSeries raw_from_json(const Json& j) {
  require(j.is_object() && j.contains("values") && j["values"].is_array(), ErrorKind::Input,
          "raw series needs a values array");
  RawSeries r;
  r.device_id = j.value("device_id", std::string{});
  r.start_time = j.value("start_time", std::int64_t{0});
  r.sample_interval = j.value("sample_interval", 10);
  r.values.reserve(j["values"].size());
  for (const auto& v : j["values"]) {
    if (v.is_null())
      r.values.emplace_back();
    else
      r.values.emplace_back(v.get<float>());
  }
  return r;
}

Json to_json(const PrepConfig& cfg) {
  Json aug;
  aug["cyclic_shift"] = cfg.augmentations.cyclic_shift;
  aug["vertical_shift"] = cfg.augmentations.vertical_shift;
  aug["scale"] = cfg.augmentations.scale;
  aug["shift_lo"] = cfg.augmentations.shift_lo;
  aug["shift_hi"] = cfg.augmentations.shift_hi;
  aug["scale_lo"] = cfg.augmentations.scale_lo;
  aug["scale_hi"] = cfg.augmentations.scale_hi;
  Json j;
  j["segment_minutes"] = cfg.segment_minutes;
  j["window_seconds"] = cfg.window_seconds;
  j["min_points"] = cfg.min_points;
  j["sentinel"] = tidy(cfg.sentinel);
  j["valid_lo"] = tidy(cfg.valid_lo);
  j["valid_hi"] = tidy(cfg.valid_hi);
  j["augmentations"] = std::move(aug);
  j["rng_seed"] = cfg.rng_seed;
  return j;
}

PrepConfig prep_config_from_json(const Json& j, PrepConfig cfg) {
  require(j.is_object(), ErrorKind::Config, "prep config must be an object");
  try {
    cfg.segment_minutes = j.value("segment_minutes", cfg.segment_minutes);
    cfg.window_seconds = j.value("window_seconds", cfg.window_seconds);
    cfg.min_points = j.value("min_points", cfg.min_points);
    cfg.sentinel = j.value("sentinel", cfg.sentinel);
    cfg.valid_lo = j.value("valid_lo", cfg.valid_lo);
    cfg.valid_hi = j.value("valid_hi", cfg.valid_hi);
    cfg.rng_seed = j.value("rng_seed", cfg.rng_seed);
    if (j.contains("augmentations")) {
      const auto& a = j["augmentations"];
      auto& aug = cfg.augmentations;
      aug.cyclic_shift = a.value("cyclic_shift", aug.cyclic_shift);
      aug.vertical_shift = a.value("vertical_shift", aug.vertical_shift);
      aug.scale = a.value("scale", aug.scale);
      aug.shift_lo = a.value("shift_lo", aug.shift_lo);
      aug.shift_hi = a.value("shift_hi", aug.shift_hi);
      aug.scale_lo = a.value("scale_lo", aug.scale_lo);
      aug.scale_hi = a.value("scale_hi", aug.scale_hi);
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::Config, std::string("prep config: ") + e.what());
  }
  return cfg;
}

Json to_json(const PrepManifest& m) {
  Json j;
  j["raw_series"] = m.raw_series;
  j["segments"] = m.segments;
  j["pairs_discarded"] = m.pairs_discarded;
  j["pairs_emitted"] = m.pairs_emitted;
  j["seed"] = m.config.rng_seed;
  j["config"] = to_json(m.config);
  return j;
}

std::vector<Situation> read_situations(const std::filesystem::path& path) {
  return read_lines<Situation>(path, situation_from_json);
}

std::vector<SituationPair> read_pairs(const std::filesystem::path& path) {
  return read_lines<SituationPair>(path, pair_from_json);
}

std::vector<RawSeries> read_raw(const std::filesystem::path& path) {
  return read_lines<RawSeries>(path, raw_from_json);
}

void write_situations(const std::filesystem::path& path, const std::vector<Situation>& items) {
  write_lines(path, items);
}

void write_pairs(const std::filesystem::path& path, const std::vector<SituationPair>& items) {
  write_lines(path, items);
}

void write_raw(const std::filesystem::path& path, const std::vector<RawSeries>& items) {
  write_lines(path, items);
}

Json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorKind::Input, path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  require(static_cast<bool>(out), ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace clsr::jsonl
