#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "clsr/binary_io.hpp"
#include "clsr/error.hpp"
#include "clsr/pipeline.hpp"

using namespace clsr;

namespace {

RunConfig tiny() {
  auto cfg = run_config_from_json(jsonl::Json::parse(R"({
    "seed": 9,
    "data": {"series": 50, "hours_per_series": 8, "members_per_class": 4, "distractors": 6,
             "train_pairs": 256, "val_pairs": 64},
    "train": {"batch_size": 32, "max_epochs": 2, "lr": 0.001},
    "model": {"conv_widths": [16, 16, 16], "dense_units": 16, "embedding": 16},
    "reproduce": {"presets": ["clsr-10", "clsr-20-cyclic-shift"]}
  })"));
  return cfg;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("clsr_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

struct Quiet {
  Quiet() { set_log_sink({}); }
  ~Quiet() { set_log_sink([](const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); }); }
};

}  // namespace

TEST_CASE("prepare is deterministic and writes the requested split") {
  Quiet q;
  const auto dir = scratch("prepare");
  const auto cfg = tiny();
  run_generate(cfg, dir / "data");
  const auto a = run_prepare(cfg, dir / "data" / "unlabeled.jsonl", dir / "a");
  const auto b = run_prepare(cfg, dir / "data" / "unlabeled.jsonl", dir / "b");
  CHECK(bin::read_file(a.train.string()) == bin::read_file(b.train.string()));
  CHECK(bin::read_file(a.val.string()) == bin::read_file(b.val.string()));
  CHECK(bin::read_file(a.manifest.string()) == bin::read_file(b.manifest.string()));
  CHECK(lines(bin::read_file(a.train.string())) == 256);
  CHECK(lines(bin::read_file(a.val.string())) == 64);
  const auto manifest = jsonl::read_json(a.manifest);
  CHECK(manifest["train_pairs"] == 256);
  CHECK(manifest["raw_series"] == 50);
  fs::remove_all(dir);
}

TEST_CASE("train, embed, query and eval over files") {
  Quiet q;
  const auto dir = scratch("flow");
  const auto cfg = tiny();
  run_generate(cfg, dir / "data");
  const auto prep = run_prepare(cfg, dir / "data" / "unlabeled.jsonl", dir / "prep");
  const auto report = run_train(cfg, prep.train, prep.val, dir / "run");
  CHECK(report.epochs.size() == 2);
  CHECK(fs::exists(dir / "run" / "model.ckpt"));
  CHECK(lines(bin::read_file((dir / "run" / "loss_curve.csv").string())) == 3);

  run_embed(dir / "run" / "model.ckpt", dir / "data" / "labeled.jsonl", dir / "run" / "index.bin");
  const auto r = run_query_id(dir / "run" / "index.bin", "drop-01", 5);
  REQUIRE(r.hits.size() == 5);
  for (const auto& h : r.hits) CHECK(h.id != "drop-01");
  for (std::size_t i = 1; i < r.hits.size(); ++i) CHECK(r.hits[i - 1].score >= r.hits[i].score);
  CHECK(lines(query_csv(r)) == 6);  // header + 5

  try {
    run_query_id(dir / "run" / "index.bin", "nope", 5);
    FAIL("expected an input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
  }

  const auto reps = run_eval(cfg, {{"tiny", dir / "run" / "model.ckpt"}}, dir / "data" / "labeled.jsonl",
                             dir / "data" / "tasks.json", dir / "report");
  REQUIRE(reps.size() == 2);
  CHECK(reps[0].retriever == "L2Retriever");
  CHECK(reps[1].retriever == "tiny");
  for (const char* f : {"metrics.csv", "per_class.csv", "table.csv", "summary.txt", "tasks.csv"})
    CHECK(fs::exists(dir / "report" / f));
  fs::remove_all(dir);
}

TEST_CASE("unresolvable task ids are input errors") {
  const std::vector<RetrievalTask> tasks{{"a", {"b", "zz"}, "c"}};
  const std::vector<std::string> ids{"a", "b"};
  try {
    check_resolvable(tasks, ids);
    FAIL("expected an input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
    CHECK(std::string(e.what()).find("zz") != std::string::npos);
  }
}

TEST_CASE("tasks file round trip") {
  const auto path = fs::temp_directory_path() / "clsr_tasks.json";
  TaskSet ts;
  ts.classes.push_back({"x", {"x1", "x2"}});
  ts.distractors = {"d"};
  write_tasks(path, ts);
  const auto back = read_tasks(path);
  REQUIRE(back.classes.size() == 1);
  CHECK(back.classes[0].second == ts.classes[0].second);
  CHECK(back.distractors == ts.distractors);
  fs::remove(path);
}

TEST_CASE("reproduce writes one table row per preset plus the baseline") {
  Quiet q;
  const auto dir = scratch("reproduce");
  const auto reps = run_reproduce(tiny(), dir);
  CHECK(reps.size() == 3);
  const auto table = bin::read_file((dir / "report" / "table.csv").string());
  CHECK(lines(table) == 4);
  CHECK(table.find("clsr-20-cyclic-shift") != std::string::npos);
  CHECK(fs::exists(dir / "runs" / "clsr-10" / "index.bin"));
  fs::remove_all(dir);
}
