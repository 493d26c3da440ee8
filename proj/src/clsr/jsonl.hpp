#pragma once

// JSONL interchange for raw series, situations and pairs.
//
//   situation: {"id": "...", "values": [[v], [null], ...], "meta": {...},
//               "imputed_with": -100}
//   pair:      {"first": <situation>, "second": <situation>}
//   raw:       {"device_id": "...", "start_time": 0, "sample_interval": 10,
//               "values": [v, null, ...]}
//
// Missing cells are written as null. A situation that has been imputed carries
// "imputed_with"; reading it back re-applies the sentinel so that mask and
// values round-trip.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "clsr/telemetry.hpp"

namespace clsr::jsonl {

using Json = nlohmann::ordered_json;

Json to_json(const Situation& s);
Situation situation_from_json(const Json& j);

Json to_json(const SituationPair& p);
SituationPair pair_from_json(const Json& j);

Json to_json(const RawSeries& r);
RawSeries raw_from_json(const Json& j);

Json to_json(const PrepConfig& cfg);
PrepConfig prep_config_from_json(const Json& j, PrepConfig base = {});

Json to_json(const PrepManifest& m);

std::vector<Situation> read_situations(const std::filesystem::path& path);
std::vector<SituationPair> read_pairs(const std::filesystem::path& path);
std::vector<RawSeries> read_raw(const std::filesystem::path& path);

void write_situations(const std::filesystem::path& path, const std::vector<Situation>& items);
void write_pairs(const std::filesystem::path& path, const std::vector<SituationPair>& items);
void write_raw(const std::filesystem::path& path, const std::vector<RawSeries>& items);

/// Reads a whole JSON document (config files, manifests, tasks).
Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Shortest decimal that round-trips the float, as a double, so that files
/// show 0.1 rather than 0.10000000149011612.
double tidy(float v);

}  // namespace clsr::jsonl
