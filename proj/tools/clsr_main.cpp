// clsr command-line front end over the C API.
//
// Exit codes: 0 success, 2 usage, otherwise 2 + clsr_status (config 3,
// shape 4, state 5, numeric 6, input 7, io 8, format 9, empty dataset 10,
// argument 11, internal 12). Failures print exactly one line to stderr:
//   error code=<name> exit=<n> message="<text>"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "clsr/clsr.h"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageExit = 2;

int exit_code(clsr_status s) { return s == CLSR_OK ? 0 : 2 + static_cast<int>(s); }

std::string quoted(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n' || c == '\r') {
      out += ' ';
      continue;
    }
    out += c;
  }
  return '"' + out + '"';
}

int report(const std::string& code, int exit, const std::string& message) {
  std::cerr << "error code=" << code << " exit=" << exit << " message=" << quoted(message) << std::endl;
  return exit;
}

struct CliFailure {
  clsr_status status;
  std::string message;
};

[[noreturn]] void die(clsr_status status, const std::string& message) { throw CliFailure{status, message}; }

void check(clsr_status s) {
  if (s != CLSR_OK) die(s, clsr_last_error());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(CLSR_ERR_IO, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Globals {
  std::string config_path;
  std::string out;
  std::string preset;
  long long seed = -1;
  bool quiet = false;
};

// Config file contents with --seed / --preset layered on top.
std::string config_json(const Globals& g) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  if (!g.config_path.empty()) {
    const std::string text = slurp(g.config_path);
    try {
      doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::ordered_json::exception& e) {
      die(CLSR_ERR_CONFIG, g.config_path + ": " + e.what());
    }
    if (!doc.is_object()) die(CLSR_ERR_CONFIG, g.config_path + ": config must be a JSON object");
  }
  if (g.seed >= 0) doc["seed"] = static_cast<std::uint64_t>(g.seed);
  if (!g.preset.empty()) doc["preset"] = g.preset;
  return doc.dump();
}

float configured_sentinel(const Globals& g) {
  char* resolved = nullptr;
  check(clsr_config_resolve(config_json(g).c_str(), &resolved));
  const auto doc = nlohmann::json::parse(resolved);
  clsr_string_free(resolved);
  return doc["prep"]["sentinel"].get<float>();
}

std::string out_dir(const Globals& g, const char* fallback) { return g.out.empty() ? fallback : g.out; }

// Situation JSON (one object, or the first line of a JSONL file) as values
// with NaN for missing samples.
std::vector<float> read_query_values(const std::string& path, std::size_t steps, std::size_t channels) {
  std::string text = slurp(path);
  const auto nl = text.find('\n');
  if (nl != std::string::npos && text.find_first_not_of(" \t\r\n", nl) != std::string::npos) text.resize(nl);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    die(CLSR_ERR_INPUT, path + ": " + e.what());
  }
  const auto& v = j.contains("values") ? j["values"] : j;
  if (!v.is_array() || v.size() != steps) die(CLSR_ERR_SHAPE, path + ": expected " + std::to_string(steps) + " steps");
  std::vector<float> out;
  for (const auto& row : v) {
    const auto cells = row.is_array() ? row : nlohmann::json::array({row});
    if (cells.size() != channels) die(CLSR_ERR_SHAPE, path + ": expected " + std::to_string(channels) + " channels");
    for (const auto& c : cells) out.push_back(c.is_null() ? std::nanf("") : c.get<float>());
  }
  return out;
}

void print_result(const clsr_result* r, const Globals& g) {
  std::ostringstream os;
  os << "rank,id,score\n";
  for (std::size_t i = 0; i < clsr_result_size(r); ++i) {
    char score[32];
    std::snprintf(score, sizeof(score), "%.9f", clsr_result_score(r, i));
    os << i + 1 << ',' << clsr_result_id(r, i) << ',' << score << '\n';
  }
  if (g.out.empty()) {
    std::cout << os.str();
  } else {
    fs::create_directories(g.out);
    std::ofstream(fs::path(g.out) / "query.csv", std::ios::binary) << os.str();
  }
  if (clsr_result_truncated(r) && !g.quiet)
    std::cerr << "note: only " << clsr_result_size(r) << " candidates available" << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clsr: self-supervised similarity search over WLAN telemetry situations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(clsr_version()));
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file (defaults < preset < file < flags)");
  app.add_option("--seed", g.seed, "global seed override")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "output directory");
  app.add_option("--preset", g.preset, "model preset, e.g. clsr-10 or clsr-20-scale");
  app.add_flag("-q,--quiet", g.quiet, "suppress progress output");
  app.fallthrough();

  auto* gen = app.add_subcommand("gen", "generate the synthetic unlabeled and labeled corpora");

  std::string raw_path;
  auto* prepare = app.add_subcommand("prepare", "build odd/even training pairs from raw series");
  prepare->add_option("--raw", raw_path, "raw series JSONL")->required();

  std::string train_path, val_path;
  auto* train = app.add_subcommand("train", "train an encoder with the contrastive objective");
  train->add_option("--train", train_path, "training pairs JSONL")->required();
  train->add_option("--val", val_path, "validation pairs JSONL")->required();

  std::string model_path, situations_path;
  auto* embed = app.add_subcommand("embed", "embed a situation database into an index (index.bin)");
  embed->add_option("--model", model_path, "checkpoint")->required();
  embed->add_option("--situations", situations_path, "situations JSONL")->required();

  std::string index_path, query_id, query_file;
  std::size_t k = 5;
  bool baseline = false;
  auto* query = app.add_subcommand("query", "top-k similar situations (CSV: rank,id,score)");
  query->add_option("--index", index_path, "embedding index");
  query->add_option("--model", model_path, "checkpoint (needed with --situation)");
  auto* by_id = query->add_option("--id", query_id, "id of a situation in the database");
  auto* by_file = query->add_option("--situation", query_file, "JSON situation to query with");
  by_id->excludes(by_file);
  query->add_option("--k", k, "number of results")->check(CLI::PositiveNumber);
  query->add_flag("--baseline", baseline, "rank by Euclidean distance instead (needs --db and --id)");
  query->add_option("--db", situations_path, "situations JSONL for --baseline");

  std::vector<std::string> models;
  std::string tasks_path;
  auto* eval = app.add_subcommand("eval", "MAP / precision@k of models and the L2 baseline");
  eval->add_option("--model", models, "NAME=CHECKPOINT (repeatable)");
  eval->add_option("--situations", situations_path, "labeled situations JSONL")->required();
  eval->add_option("--tasks", tasks_path, "tasks JSON")->required();

  auto* reproduce = app.add_subcommand("reproduce", "gen, prepare, train all presets, evaluate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", kUsageExit, e.what());
  }

  clsr_set_logging(g.quiet ? 0 : 1);
  try {
    if (*gen) {
      check(clsr_generate(config_json(g).c_str(), out_dir(g, "data").c_str()));
    } else if (*prepare) {
      check(clsr_prepare(config_json(g).c_str(), raw_path.c_str(), out_dir(g, "prep").c_str()));
    } else if (*train) {
      check(clsr_train(config_json(g).c_str(), train_path.c_str(), val_path.c_str(), out_dir(g, "run").c_str()));
    } else if (*embed) {
      const fs::path dir = out_dir(g, ".");
      fs::create_directories(dir);
      check(clsr_embed(model_path.c_str(), situations_path.c_str(), (dir / "index.bin").string().c_str()));
    } else if (*query) {
      clsr_result* result = nullptr;
      if (baseline) {
        if (situations_path.empty() || query_id.empty())
          return report("usage", kUsageExit, "--baseline needs --db and --id");
        clsr_db* db = nullptr;
        check(clsr_db_load(situations_path.c_str(), &db));
        const clsr_status s = clsr_l2_query_id(db, query_id.c_str(), k, &result);
        clsr_db_free(db);
        check(s);
      } else if (!query_id.empty()) {
        if (index_path.empty()) return report("usage", kUsageExit, "--id needs --index");
        clsr_index* index = nullptr;
        check(clsr_index_load(index_path.c_str(), &index));
        const clsr_status s = clsr_index_query_id(index, query_id.c_str(), k, &result);
        clsr_index_free(index);
        check(s);
      } else if (!query_file.empty()) {
        if (index_path.empty() || model_path.empty())
          return report("usage", kUsageExit, "--situation needs --index and --model");
        clsr_model* model = nullptr;
        check(clsr_model_load(model_path.c_str(), &model));
        std::size_t steps = 0, channels = 0;
        clsr_model_info(model, &steps, &channels, nullptr);
        clsr_index* index = nullptr;
        clsr_status s = clsr_index_load(index_path.c_str(), &index);
        std::vector<float> values;
        if (s == CLSR_OK) {
          try {
            values = read_query_values(query_file, steps, channels);
          } catch (...) {
            clsr_index_free(index);
            clsr_model_free(model);
            throw;
          }
          s = clsr_index_query_values(index, model, values.data(), configured_sentinel(g), k, &result);
        }
        clsr_index_free(index);
        clsr_model_free(model);
        check(s);
      } else {
        return report("usage", kUsageExit, "query needs --id or --situation");
      }
      print_result(result, g);
      clsr_result_free(result);
    } else if (*eval) {
      std::vector<std::string> names, paths;
      for (const auto& m : models) {
        const auto eq = m.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == m.size())
          return report("usage", kUsageExit, "--model expects NAME=CHECKPOINT, got '" + m + "'");
        names.push_back(m.substr(0, eq));
        paths.push_back(m.substr(eq + 1));
      }
      std::vector<const char*> cnames, cpaths;
      for (std::size_t i = 0; i < names.size(); ++i) {
        cnames.push_back(names[i].c_str());
        cpaths.push_back(paths[i].c_str());
      }
      check(clsr_evaluate(config_json(g).c_str(), cnames.data(), cpaths.data(), names.size(),
                          situations_path.c_str(), tasks_path.c_str(), out_dir(g, "report").c_str()));
      std::cout << slurp((fs::path(out_dir(g, "report")) / "summary.txt").string());
    } else if (*reproduce) {
      check(clsr_reproduce(config_json(g).c_str(), out_dir(g, "reproduce").c_str()));
    }
  } catch (const CliFailure& f) {
    return report(clsr_status_name(f.status), exit_code(f.status), f.message);
  } catch (const std::exception& e) {
    return report("internal", exit_code(CLSR_ERR_INTERNAL), e.what());
  }
  return 0;
}
