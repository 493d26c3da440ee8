// Runs the installed command line tool as a child process.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout
  std::string err;  // stderr
};

Run run(const std::string& args) {
  const auto err_path = fs::temp_directory_path() / "clsr_cli_stderr.txt";
  const std::string cmd = std::string(CLSR_CLI_PATH) + " " + args + " 2>" + err_path.string();
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_path);
  r.err.assign(std::istreambuf_iterator<char>(in), {});
  return r;
}

// The last stderr line must be a single machine-readable error record.
void expect_error(const Run& r, const std::string& code, int exit) {
  CHECK(r.code == exit);
  std::string last = r.err;
  while (!last.empty() && last.back() == '\n') last.pop_back();
  last = last.substr(last.rfind('\n') == std::string::npos ? 0 : last.rfind('\n') + 1);
  static const std::regex record(R"re(^error code=([a-z_]+) exit=(\d+) message=".*"$)re");
  std::smatch m;
  REQUIRE_MESSAGE(std::regex_match(last, m, record), last);
  CHECK(m[1] == code);
  CHECK(std::stoi(m[2]) == exit);
}

const char* kTiny = R"({"seed": 5,
  "data": {"series": 30, "hours_per_series": 6, "members_per_class": 3, "distractors": 4,
           "train_pairs": 128, "val_pairs": 32},
  "train": {"batch_size": 32, "max_epochs": 1, "lr": 0.001},
  "model": {"conv_widths": [8, 8, 8], "dense_units": 8, "embedding": 8}})";

}  // namespace

TEST_CASE("usage errors exit 2") {
  expect_error(run(""), "usage", 2);
  expect_error(run("frobnicate"), "usage", 2);
  expect_error(run("query --k 3"), "usage", 2);
  expect_error(run("embed --model x.ckpt"), "usage", 2);
}

TEST_CASE("help exits 0") { CHECK(run("--help").code == 0); }

TEST_CASE("each failure class has its own exit code") {
  const auto dir = fs::temp_directory_path() / "clsr_cli_errors";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream(dir / "bad.json") << R"({"preset": "clsr-99"})";
    std::ofstream(dir / "garbage.ckpt") << "not a checkpoint";
    std::ofstream(dir / "empty.jsonl") << "";
  }
  expect_error(run("--config " + (dir / "bad.json").string() + " gen -q"), "config", 3);
  expect_error(run("--config " + (dir / "missing.json").string() + " gen"), "io", 8);
  expect_error(run("embed --model " + (dir / "nope.ckpt").string() + " --situations x.jsonl"), "io", 8);
  expect_error(run("-q embed --model " + (dir / "garbage.ckpt").string() + " --situations " +
                   (dir / "empty.jsonl").string() + " --out " + dir.string()),
               "format", 9);
  expect_error(run("-q prepare --raw " + (dir / "empty.jsonl").string() + " --out " + (dir / "p").string()),
               "empty_dataset", 10);
  fs::remove_all(dir);
}

TEST_CASE("gen, prepare, train, embed, query, eval") {
  const auto dir = fs::temp_directory_path() / "clsr_cli_flow";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "tiny.json") << kTiny;
  const std::string cfg = "-q --config " + (dir / "tiny.json").string() + " ";
  const std::string d = dir.string() + "/";

  REQUIRE(run(cfg + "gen --out " + d + "data").code == 0);
  REQUIRE(run(cfg + "prepare --raw " + d + "data/unlabeled.jsonl --out " + d + "prep").code == 0);
  REQUIRE(run(cfg + "train --train " + d + "prep/train_pairs.jsonl --val " + d + "prep/val_pairs.jsonl --out " + d +
              "run")
              .code == 0);
  REQUIRE(run(cfg + "embed --model " + d + "run/model.ckpt --situations " + d + "data/labeled.jsonl --out " + d +
              "run")
              .code == 0);
  CHECK(fs::exists(dir / "run" / "index.bin"));

  const auto q = run(cfg + "query --index " + d + "run/index.bin --id drop-01 --k 4");
  REQUIRE(q.code == 0);
  CHECK(q.out.rfind("rank,id,score\n", 0) == 0);
  CHECK(std::count(q.out.begin(), q.out.end(), '\n') == 5);
  CHECK(q.out.find(",drop-01,") == std::string::npos);

  const auto b = run(cfg + "query --baseline --db " + d + "data/labeled.jsonl --id drop-01 --k 2");
  REQUIRE(b.code == 0);
  CHECK(std::count(b.out.begin(), b.out.end(), '\n') == 3);

  expect_error(run(cfg + "query --index " + d + "run/index.bin --id nope --k 4"), "input", 7);

  const auto e = run(cfg + "eval --model tiny=" + d + "run/model.ckpt --situations " + d +
                     "data/labeled.jsonl --tasks " + d + "data/tasks.json --out " + d + "report");
  REQUIRE(e.code == 0);
  CHECK(e.out.find("L2Retriever") != std::string::npos);
  CHECK(fs::exists(dir / "report" / "table.csv"));
  fs::remove_all(dir);
}
