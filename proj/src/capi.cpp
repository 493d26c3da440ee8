#include "clsr/clsr.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "clsr/checkpoint.hpp"
#include "clsr/pipeline.hpp"

struct clsr_model {
  clsr::Encoder encoder;
};

struct clsr_index {
  clsr::EmbeddingIndex index;
};

struct clsr_db {
  std::vector<clsr::Situation> situations;
};

struct clsr_result {
  clsr::QueryResult result;
};

namespace {

thread_local std::string g_last_error;

clsr_status status_of(clsr::ErrorKind kind) {
  using clsr::ErrorKind;
  switch (kind) {
    case ErrorKind::Config: return CLSR_ERR_CONFIG;
    case ErrorKind::Shape: return CLSR_ERR_SHAPE;
    case ErrorKind::State: return CLSR_ERR_STATE;
    case ErrorKind::Numeric: return CLSR_ERR_NUMERIC;
    case ErrorKind::Input: return CLSR_ERR_INPUT;
    case ErrorKind::Io: return CLSR_ERR_IO;
    case ErrorKind::Format: return CLSR_ERR_FORMAT;
    case ErrorKind::EmptyDataset: return CLSR_ERR_EMPTY_DATASET;
  }
  return CLSR_ERR_INTERNAL;
}

struct ArgumentError {
  std::string what;
};

void need(bool cond, const char* what) {
  if (!cond) throw ArgumentError{what};
}

// Runs fn, translating every exception into a status + last error message.
template <typename Fn>
clsr_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return CLSR_OK;
  } catch (const clsr::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const ArgumentError& e) {
    g_last_error = e.what;
    return CLSR_ERR_ARGUMENT;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return CLSR_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CLSR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CLSR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return CLSR_ERR_INTERNAL;
  }
}

clsr::RunConfig resolve(const char* config_json) {
  if (config_json == nullptr || *config_json == '\0') return clsr::run_config_from_json(clsr::jsonl::Json::object());
  clsr::jsonl::Json doc;
  try {
    doc = clsr::jsonl::Json::parse(config_json);
  } catch (const clsr::jsonl::Json::exception& e) {
    clsr::fail(clsr::ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  return clsr::run_config_from_json(doc);
}

clsr::Situation situation_from_values(const clsr::ModelConfig& cfg, const float* values, float sentinel) {
  clsr::Situation s("", cfg.steps, cfg.channels);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const bool present = !std::isnan(values[i]);
    s.values[i] = present ? values[i] : 0.0f;
    s.mask[i] = present ? 1 : 0;
  }
  return clsr::impute(std::move(s), sentinel);
}

}  // namespace

extern "C" {

const char* clsr_version(void) { return "0.1.0"; }

const char* clsr_status_name(clsr_status status) {
  switch (status) {
    case CLSR_OK: return "ok";
    case CLSR_ERR_CONFIG: return "config";
    case CLSR_ERR_SHAPE: return "shape";
    case CLSR_ERR_STATE: return "state";
    case CLSR_ERR_NUMERIC: return "numeric";
    case CLSR_ERR_INPUT: return "input";
    case CLSR_ERR_IO: return "io";
    case CLSR_ERR_FORMAT: return "format";
    case CLSR_ERR_EMPTY_DATASET: return "empty_dataset";
    case CLSR_ERR_ARGUMENT: return "argument";
    case CLSR_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* clsr_last_error(void) { return g_last_error.c_str(); }

void clsr_set_logging(int enabled) {
  if (enabled)
    clsr::set_log_sink([](const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); });
  else
    clsr::set_log_sink({});
}

clsr_status clsr_config_resolve(const char* config_json, char** out_json) {
  return guarded([&] {
    need(out_json != nullptr, "out_json is NULL");
    const std::string text = clsr::to_json(resolve(config_json)).dump(2);
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (buf == nullptr) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_json = buf;
  });
}

void clsr_string_free(char* s) { std::free(s); }

clsr_status clsr_generate(const char* config_json, const char* out_dir) {
  return guarded([&] {
    need(out_dir != nullptr, "out_dir is NULL");
    clsr::run_generate(resolve(config_json), out_dir);
  });
}

clsr_status clsr_prepare(const char* config_json, const char* raw_path, const char* out_dir) {
  return guarded([&] {
    need(raw_path != nullptr && out_dir != nullptr, "raw_path and out_dir are required");
    clsr::run_prepare(resolve(config_json), raw_path, out_dir);
  });
}

clsr_status clsr_train(const char* config_json, const char* train_pairs_path, const char* val_pairs_path,
                       const char* out_dir) {
  return guarded([&] {
    need(train_pairs_path != nullptr && val_pairs_path != nullptr && out_dir != nullptr,
         "train, validation and output paths are required");
    clsr::run_train(resolve(config_json), train_pairs_path, val_pairs_path, out_dir);
  });
}

clsr_status clsr_embed(const char* model_path, const char* situations_path, const char* index_path) {
  return guarded([&] {
    need(model_path != nullptr && situations_path != nullptr && index_path != nullptr,
         "model, situations and index paths are required");
    clsr::run_embed(model_path, situations_path, index_path);
  });
}

clsr_status clsr_evaluate(const char* config_json, const char* const* names, const char* const* model_paths,
                          size_t n, const char* situations_path, const char* tasks_path, const char* out_dir) {
  return guarded([&] {
    need(situations_path != nullptr && tasks_path != nullptr && out_dir != nullptr,
         "situations, tasks and output paths are required");
    need(n == 0 || (names != nullptr && model_paths != nullptr), "names and model_paths are required");
    std::vector<std::pair<std::string, std::filesystem::path>> models;
    for (size_t i = 0; i < n; ++i) {
      need(names[i] != nullptr && model_paths[i] != nullptr, "NULL model name or path");
      models.emplace_back(names[i], model_paths[i]);
    }
    clsr::run_eval(resolve(config_json), models, situations_path, tasks_path, out_dir);
  });
}

clsr_status clsr_reproduce(const char* config_json, const char* out_dir) {
  return guarded([&] {
    need(out_dir != nullptr, "out_dir is NULL");
    clsr::run_reproduce(resolve(config_json), out_dir);
  });
}

clsr_status clsr_model_load(const char* path, clsr_model** out) {
  return guarded([&] {
    need(path != nullptr && out != nullptr, "path and out are required");
    *out = new clsr_model{clsr::load_checkpoint(path)};
  });
}

void clsr_model_free(clsr_model* model) { delete model; }

clsr_status clsr_model_info(const clsr_model* model, size_t* steps, size_t* channels, size_t* embedding) {
  return guarded([&] {
    need(model != nullptr, "model is NULL");
    const auto& cfg = model->encoder.config();
    if (steps) *steps = cfg.steps;
    if (channels) *channels = cfg.channels;
    if (embedding) *embedding = cfg.embedding;
  });
}

clsr_status clsr_model_embed(const clsr_model* model, const float* values, size_t n, float sentinel, int normalize,
                             float* out) {
  return guarded([&] {
    need(model != nullptr && values != nullptr && out != nullptr, "model, values and out are required");
    const auto& cfg = model->encoder.config();
    std::vector<clsr::Situation> batch;
    batch.reserve(n);
    for (size_t i = 0; i < n; ++i)
      batch.push_back(situation_from_values(cfg, values + i * cfg.steps * cfg.channels, sentinel));
    const auto emb = clsr::embed(model->encoder, batch, normalize != 0);
    std::copy(emb.begin(), emb.end(), out);
  });
}

clsr_status clsr_db_load(const char* situations_path, clsr_db** out) {
  return guarded([&] {
    need(situations_path != nullptr && out != nullptr, "path and out are required");
    *out = new clsr_db{clsr::jsonl::read_situations(situations_path)};
  });
}

void clsr_db_free(clsr_db* db) { delete db; }

size_t clsr_db_size(const clsr_db* db) { return db ? db->situations.size() : 0; }

const char* clsr_db_id(const clsr_db* db, size_t i) {
  return db && i < db->situations.size() ? db->situations[i].id.c_str() : nullptr;
}

clsr_status clsr_index_build(const clsr_model* model, const clsr_db* db, clsr_index** out) {
  return guarded([&] {
    need(model != nullptr && db != nullptr && out != nullptr, "model, db and out are required");
    *out = new clsr_index{clsr::build_index(model->encoder, db->situations)};
  });
}

clsr_status clsr_index_load(const char* path, clsr_index** out) {
  return guarded([&] {
    need(path != nullptr && out != nullptr, "path and out are required");
    *out = new clsr_index{clsr::load_index(path)};
  });
}

clsr_status clsr_index_save(const clsr_index* index, const char* path) {
  return guarded([&] {
    need(index != nullptr && path != nullptr, "index and path are required");
    clsr::save_index(index->index, path);
  });
}

void clsr_index_free(clsr_index* index) { delete index; }

size_t clsr_index_size(const clsr_index* index) { return index ? index->index.size() : 0; }

size_t clsr_index_dim(const clsr_index* index) { return index ? index->index.dim : 0; }

clsr_status clsr_index_query_id(const clsr_index* index, const char* id, size_t k, clsr_result** out) {
  return guarded([&] {
    need(index != nullptr && id != nullptr && out != nullptr, "index, id and out are required");
    need(k > 0, "k must be positive");
    const auto row = index->index.find(id);
    clsr::require(row.has_value(), clsr::ErrorKind::Input, std::string("id '") + id + "' is not in the index");
    *out = new clsr_result{clsr::query_top_k(index->index.row(*row), index->index, k, id)};
  });
}

clsr_status clsr_index_query_values(const clsr_index* index, const clsr_model* model, const float* values,
                                    float sentinel, size_t k, clsr_result** out) {
  return guarded([&] {
    need(index != nullptr && model != nullptr && values != nullptr && out != nullptr,
         "index, model, values and out are required");
    need(k > 0, "k must be positive");
    clsr::require(index->index.fingerprint == clsr::model_fingerprint(model->encoder), clsr::ErrorKind::Format,
                  "index was built with a different model checkpoint");
    const auto query = situation_from_values(model->encoder.config(), values, sentinel);
    *out = new clsr_result{clsr::query_top_k(query, index->index, model->encoder, k)};
  });
}

clsr_status clsr_l2_query_id(const clsr_db* db, const char* id, size_t k, clsr_result** out) {
  return guarded([&] {
    need(db != nullptr && id != nullptr && out != nullptr, "db, id and out are required");
    need(k > 0, "k must be positive");
    const clsr::Situation* query = nullptr;
    for (const auto& s : db->situations)
      if (s.id == id) query = &s;
    clsr::require(query != nullptr, clsr::ErrorKind::Input, std::string("id '") + id + "' is not in the database");
    *out = new clsr_result{clsr::l2_baseline_top_k(*query, db->situations, k)};
  });
}

size_t clsr_result_size(const clsr_result* result) { return result ? result->result.hits.size() : 0; }

int clsr_result_truncated(const clsr_result* result) { return result && result->result.truncated ? 1 : 0; }

const char* clsr_result_id(const clsr_result* result, size_t i) {
  return result && i < result->result.hits.size() ? result->result.hits[i].id.c_str() : nullptr;
}

double clsr_result_score(const clsr_result* result, size_t i) {
  return result && i < result->result.hits.size() ? result->result.hits[i].score : std::nan("");
}

void clsr_result_free(clsr_result* result) { delete result; }

}  // extern "C"
