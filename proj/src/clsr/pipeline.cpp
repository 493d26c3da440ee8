#include "clsr/pipeline.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "clsr/checkpoint.hpp"

namespace clsr {

namespace {

std::mutex g_log_mutex;
LogSink g_log_sink = [](const std::string& m) { std::cerr << m << '\n'; };

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string augmentation_key(const AugmentationSet& a) {
  std::string key;
  if (a.cyclic_shift) key += "cyclic-";
  if (a.vertical_shift) key += "vertical-";
  if (a.scale) key += "scale-";
  return key.empty() ? "none" : key.substr(0, key.size() - 1);
}

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(g_log_mutex);
  g_log_sink = std::move(sink);
}

void log_line(const std::string& message) {
  std::lock_guard lock(g_log_mutex);
  if (g_log_sink) g_log_sink(message);
}

void run_generate(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  const auto raws = synth::generate_unlabeled(cfg.unlabeled);
  jsonl::write_raw(out_dir / "unlabeled.jsonl", raws);
  const auto labeled = synth::generate_labeled(cfg.labeled);
  jsonl::write_situations(out_dir / "labeled.jsonl", labeled.situations);
  write_tasks(out_dir / "tasks.json", labeled.tasks);
  log_line("gen: " + std::to_string(raws.size()) + " raw series, " + std::to_string(labeled.situations.size()) +
           " labeled situations -> " + out_dir.string());
}

PrepareOutputs run_prepare(const RunConfig& cfg, const fs::path& raw_path, const fs::path& out_dir) {
  cfg.validate();
  const auto raws = jsonl::read_raw(raw_path);
  auto dataset = build_pair_dataset(raws, cfg.prep);
  auto& pairs = dataset.pairs;

  std::size_t n_train = cfg.train_pairs, n_val = cfg.val_pairs;
  if (pairs.size() < n_train + n_val) {
    n_val = std::max<std::size_t>(1, pairs.size() * cfg.val_pairs / (cfg.train_pairs + cfg.val_pairs));
    require(pairs.size() > n_val, ErrorKind::EmptyDataset,
            "only " + std::to_string(pairs.size()) + " pair(s) prepared; need at least 2 for a train/val split");
    n_train = pairs.size() - n_val;
  }
  std::vector<SituationPair> train(std::make_move_iterator(pairs.begin()),
                                   std::make_move_iterator(pairs.begin() + static_cast<std::ptrdiff_t>(n_train)));
  std::vector<SituationPair> val(
      std::make_move_iterator(pairs.begin() + static_cast<std::ptrdiff_t>(n_train)),
      std::make_move_iterator(pairs.begin() + static_cast<std::ptrdiff_t>(n_train + n_val)));

  PrepareOutputs out{out_dir / "train_pairs.jsonl", out_dir / "val_pairs.jsonl", out_dir / "manifest.json"};
  jsonl::write_pairs(out.train, train);
  jsonl::write_pairs(out.val, val);
  auto manifest = jsonl::to_json(dataset.manifest);
  manifest["train_pairs"] = train.size();
  manifest["val_pairs"] = val.size();
  manifest["unused_pairs"] = dataset.manifest.pairs_emitted - train.size() - val.size();
  jsonl::write_text(out.manifest, manifest.dump(2) + "\n");
  log_line("prepare: " + std::to_string(train.size()) + " train / " + std::to_string(val.size()) +
           " validation pairs (" + std::to_string(dataset.manifest.pairs_discarded) + " discarded) -> " +
           out_dir.string());
  return out;
}

TrainReport run_train(const RunConfig& cfg, const fs::path& train_path, const fs::path& val_path,
                      const fs::path& out_dir) {
  cfg.validate();
  const auto train_pairs = jsonl::read_pairs(train_path);
  const auto val_pairs = jsonl::read_pairs(val_path);
  fs::create_directories(out_dir);

  Encoder model(cfg.model);
  Rng init_rng = substream(cfg.train.rng_seed, {3});
  model.init_weights(init_rng);
  model.fit_normalization(std::span<const SituationPair>(train_pairs));

  const std::string ckpt = (out_dir / "model.ckpt").string();
  log_line("train " + cfg.train.name + ": " + std::to_string(train_pairs.size()) + " pairs, tau " +
           fmt("%.2f", cfg.train.tau) + ", lr " + fmt("%g", cfg.train.lr));
  const auto report = train(train_pairs, val_pairs, cfg.train, model, ckpt, [&](const EpochRecord& r) {
    log_line("  epoch " + std::to_string(r.epoch) + "  train " + fmt("%.5f", r.train_loss) + "  val " +
             fmt("%.5f", r.val_loss));
  });

  std::ostringstream curve;
  curve << "epoch,train_loss,val_loss\n";
  for (const auto& r : report.epochs)
    curve << r.epoch << ',' << fmt("%.8f", r.train_loss) << ',' << fmt("%.8f", r.val_loss) << '\n';
  jsonl::write_text(out_dir / "loss_curve.csv", curve.str());

  jsonl::Json j;
  j["config"] = to_json(cfg.train);
  j["best_epoch"] = report.best_epoch;
  j["best_val_loss"] = report.best_val_loss;
  j["stop_reason"] = to_string(report.stop_reason);
  j["epochs_run"] = report.epochs.size();
  j["checkpoint"] = "model.ckpt";
  jsonl::Json epochs = jsonl::Json::array();
  for (const auto& r : report.epochs)
    epochs.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}});
  j["epochs"] = std::move(epochs);
  jsonl::write_text(out_dir / "train_report.json", j.dump(2) + "\n");
  log_line("train " + cfg.train.name + ": best epoch " + std::to_string(report.best_epoch) + " (" +
           to_string(report.stop_reason) + ")");
  return report;
}

void run_embed(const fs::path& model_path, const fs::path& situations_path, const fs::path& index_path) {
  const Encoder model = load_checkpoint(model_path.string());
  const auto situations = jsonl::read_situations(situations_path);
  const auto index = build_index(model, situations);
  save_index(index, index_path.string());
  log_line("embed: " + std::to_string(index.size()) + " situations -> " + index_path.string());
}

QueryResult run_query_id(const fs::path& index_path, const std::string& id, std::size_t k) {
  const auto index = load_index(index_path.string());
  const auto row = index.find(id);
  require(row.has_value(), ErrorKind::Input, "id '" + id + "' is not in the index");
  return query_top_k(index.row(*row), index, k, id);
}

QueryResult run_query_situation(const fs::path& model_path, const fs::path& index_path, const Situation& query,
                                std::size_t k) {
  const Encoder model = load_checkpoint(model_path.string());
  const auto index = load_index(index_path.string());
  require(index.fingerprint == model_fingerprint(model), ErrorKind::Format,
          "index was built with a different model checkpoint");
  return query_top_k(query, index, model, k);
}

std::string query_csv(const QueryResult& result) {
  std::ostringstream os;
  os << "rank,id,score\n";
  for (std::size_t i = 0; i < result.hits.size(); ++i)
    os << i + 1 << ',' << result.hits[i].id << ',' << fmt("%.9f", result.hits[i].score) << '\n';
  return os.str();
}

TaskSet read_tasks(const fs::path& path) {
  const auto j = jsonl::read_json(path);
  TaskSet tasks;
  try {
    for (const auto& c : j.at("classes"))
      tasks.classes.emplace_back(c.at("name").get<std::string>(), c.at("members").get<std::vector<std::string>>());
    if (j.contains("distractors")) tasks.distractors = j["distractors"].get<std::vector<std::string>>();
  } catch (const jsonl::Json::exception& e) {
    fail(ErrorKind::Input, path.string() + ": " + e.what());
  }
  return tasks;
}

void write_tasks(const fs::path& path, const TaskSet& tasks) {
  jsonl::Json j;
  jsonl::Json classes = jsonl::Json::array();
  for (const auto& [name, members] : tasks.classes) classes.push_back({{"name", name}, {"members", members}});
  j["classes"] = std::move(classes);
  j["distractors"] = tasks.distractors;
  jsonl::write_text(path, j.dump(2) + "\n");
}

Retriever cosine_retriever(const EmbeddingIndex& index) {
  return [&index](const std::string& id) {
    const auto row = index.find(id);
    require(row.has_value(), ErrorKind::Input, "query id '" + id + "' is not in the evaluation database");
    const auto result = query_top_k(index.row(*row), index, index.size(), id);
    std::vector<std::string> ranked;
    for (const auto& h : result.hits) ranked.push_back(h.id);
    return ranked;
  };
}

Retriever l2_retriever(std::span<const Situation> db) {
  return [db](const std::string& id) {
    const Situation* query = nullptr;
    for (const auto& s : db)
      if (s.id == id) query = &s;
    require(query != nullptr, ErrorKind::Input, "query id '" + id + "' is not in the evaluation database");
    const auto result = l2_baseline_top_k(*query, db, db.size());
    std::vector<std::string> ranked;
    for (const auto& h : result.hits) ranked.push_back(h.id);
    return ranked;
  };
}

void check_resolvable(std::span<const RetrievalTask> tasks, std::span<const std::string> database_ids) {
  std::unordered_set<std::string> known(database_ids.begin(), database_ids.end());
  for (const auto& t : tasks) {
    require(known.count(t.query_id) > 0, ErrorKind::Input, "task id '" + t.query_id + "' is not in the database");
    for (const auto& id : t.relevant_ids)
      require(known.count(id) > 0, ErrorKind::Input, "task id '" + id + "' is not in the database");
  }
}

std::vector<EvalReport> run_eval(const RunConfig& cfg, const std::vector<std::pair<std::string, fs::path>>& models,
                                 const fs::path& situations_path, const fs::path& tasks_path, const fs::path& out_dir,
                                 bool include_baseline) {
  const auto db = jsonl::read_situations(situations_path);
  const TaskSet task_set = read_tasks(tasks_path);
  const auto tasks = derive_tasks(task_set);
  std::vector<std::string> ids;
  for (const auto& s : db) ids.push_back(s.id);
  check_resolvable(tasks, ids);
  for (const auto& d : task_set.distractors)
    require(std::find(ids.begin(), ids.end(), d) != ids.end(), ErrorKind::Input,
            "distractor id '" + d + "' is not in the database");

  std::vector<EvalReport> reports;
  if (include_baseline) reports.push_back(evaluate("L2Retriever", tasks, l2_retriever(db), db.size(), cfg.eval_ks));
  for (const auto& [name, path] : models) {
    const Encoder model = load_checkpoint(path.string());
    const auto index = build_index(model, db);
    reports.push_back(evaluate(name, tasks, cosine_retriever(index), db.size(), cfg.eval_ks));
  }

  fs::create_directories(out_dir);
  jsonl::write_text(out_dir / "metrics.csv", metrics_csv(reports));
  jsonl::write_text(out_dir / "per_class.csv", per_class_csv(reports));
  jsonl::write_text(out_dir / "table.csv", table_csv(reports));
  jsonl::write_text(out_dir / "summary.txt", summary_table(reports));
  std::ostringstream detail;
  detail << "retriever,query,class,average_precision";
  for (auto k : cfg.eval_ks) detail << ",precision_at_" << k;
  detail << '\n';
  for (const auto& r : reports)
    for (const auto& t : r.tasks) {
      detail << r.retriever << ',' << t.query_id << ',' << t.class_label << ',' << fmt("%.6f", t.average_precision);
      for (const auto& [k, v] : t.precision_at) detail << ',' << fmt("%.6f", v);
      detail << '\n';
    }
  jsonl::write_text(out_dir / "tasks.csv", detail.str());
  return reports;
}

std::string table_csv(std::span<const EvalReport> reports) {
  std::ostringstream os;
  os << "retriever,map";
  if (!reports.empty())
    for (const auto& [k, v] : reports.front().precision_at) os << ",p@" << k;
  os << '\n';
  for (const auto& r : reports) {
    os << r.retriever << ',' << fmt("%.6f", r.map);
    for (const auto& [k, v] : r.precision_at) os << ',' << fmt("%.6f", v);
    os << '\n';
  }
  return os.str();
}

std::vector<EvalReport> run_reproduce(const RunConfig& base, const fs::path& out_dir) {
  base.validate();
  const fs::path data = out_dir / "data";
  run_generate(base, data);

  std::map<std::string, PrepareOutputs> prepared;
  std::vector<std::pair<std::string, fs::path>> models;
  for (const auto& name : base.reproduce_presets) {
    RunConfig cfg = base;
    cfg.apply_preset(name);
    const std::string key = augmentation_key(cfg.prep.augmentations);
    if (!prepared.count(key)) prepared[key] = run_prepare(cfg, data / "unlabeled.jsonl", out_dir / "prep" / key);
    const fs::path run_dir = out_dir / "runs" / name;
    run_train(cfg, prepared[key].train, prepared[key].val, run_dir);
    run_embed(run_dir / "model.ckpt", data / "labeled.jsonl", run_dir / "index.bin");
    models.emplace_back(name, run_dir / "model.ckpt");
  }
  auto reports = run_eval(base, models, data / "labeled.jsonl", data / "tasks.json", out_dir / "report");
  log_line("\n" + summary_table(reports));
  return reports;
}

}  // namespace clsr
