#pragma once

// File-to-file stages of the end-to-end flow. Each stage is deterministic in
// its inputs and the configured seed; rerunning overwrites outputs with
// identical bytes.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "clsr/config.hpp"
#include "clsr/evaluation.hpp"
#include "clsr/retrieval.hpp"

namespace clsr {

using LogSink = std::function<void(const std::string&)>;
/// Progress messages; defaults to stderr. Pass an empty function to silence.
void set_log_sink(LogSink sink);
void log_line(const std::string& message);

namespace fs = std::filesystem;

/// unlabeled.jsonl (raw series), labeled.jsonl (imputed situations), tasks.json
void run_generate(const RunConfig& cfg, const fs::path& out_dir);

struct PrepareOutputs {
  fs::path train;
  fs::path val;
  fs::path manifest;
};

/// train_pairs.jsonl, val_pairs.jsonl, manifest.json. The first
/// cfg.train_pairs pairs train, the next cfg.val_pairs validate; a smaller
/// dataset is split in the same proportion.
PrepareOutputs run_prepare(const RunConfig& cfg, const fs::path& raw_path, const fs::path& out_dir);

/// model.ckpt (best validation epoch), train_report.json, loss_curve.csv
TrainReport run_train(const RunConfig& cfg, const fs::path& train_path, const fs::path& val_path,
                      const fs::path& out_dir);

void run_embed(const fs::path& model_path, const fs::path& situations_path, const fs::path& index_path);

/// Query by id (must exist in the index) or by situation.
QueryResult run_query_id(const fs::path& index_path, const std::string& id, std::size_t k);
QueryResult run_query_situation(const fs::path& model_path, const fs::path& index_path, const Situation& query,
                                std::size_t k);
std::string query_csv(const QueryResult& result);

TaskSet read_tasks(const fs::path& path);
void write_tasks(const fs::path& path, const TaskSet& tasks);

/// Retriever over the evaluation database ranking every other situation.
Retriever cosine_retriever(const EmbeddingIndex& index);
Retriever l2_retriever(std::span<const Situation> db);

/// Checks every task id against the database; throws ErrorKind::Input naming
/// the first unresolvable id.
void check_resolvable(std::span<const RetrievalTask> tasks, std::span<const std::string> database_ids);

/// Evaluates the named models plus the L2 baseline and writes metrics.csv,
/// per_class.csv, tasks.csv and summary.txt.
std::vector<EvalReport> run_eval(const RunConfig& cfg, const std::vector<std::pair<std::string, fs::path>>& models,
                                 const fs::path& situations_path, const fs::path& tasks_path, const fs::path& out_dir,
                                 bool include_baseline = true);

/// gen -> (prepare -> train -> embed) per preset -> eval, under out_dir:
///   data/            generated corpora and tasks
///   prep/<aug>/      prepared pairs per augmentation variant
///   runs/<preset>/   model.ckpt, train_report.json, loss_curve.csv, index.bin
///   report/          metrics.csv, per_class.csv, table.csv, summary.txt
std::vector<EvalReport> run_reproduce(const RunConfig& cfg, const fs::path& out_dir);

/// retriever,map,p@1,... one row per retriever, baseline first.
std::string table_csv(std::span<const EvalReport> reports);

}  // namespace clsr
