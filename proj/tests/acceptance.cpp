// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Usage: clsr_acceptance [work_dir]
//
// Criteria 5, 6 and 8 share the model trained on the default corpus; the
// whole run takes roughly as long as one default training run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "clsr/binary_io.hpp"
#include "clsr/checkpoint.hpp"
#include "clsr/error.hpp"
#include "clsr/evaluation.hpp"
#include "clsr/ntxent.hpp"
#include "clsr/pipeline.hpp"
#include "clsr/retrieval.hpp"
#include "clsr/synth.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace clsr;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int n, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

// ---- 1: finite-difference gradients ------------------------------------------------------------

void criterion1() {
  constexpr double kBudget = 60.0;
  const auto t0 = Clock::now();
  const auto entries = gradcheck::all_checks(2024, 5);
  const double secs = seconds_since(t0);
  std::map<std::string, std::set<int>> instances;
  double worst = 0;
  std::string worst_at;
  for (const auto& e : entries) {
    instances[e.check].insert(e.instance);
    if (!(e.rel_error <= worst)) {
      worst = e.rel_error;
      worst_at = e.check + "/" + e.tensor;
    }
  }
  std::size_t fewest = SIZE_MAX;
  for (const auto& [_, ids] : instances) fewest = std::min(fewest, ids.size());
  const bool pass = std::isfinite(worst) && worst <= gradcheck::kTolerance && fewest >= 5 && secs < kBudget;
  verdict(1, pass,
          fmt("gradcheck h=1e-3: %g checks, min %g instances, max rel err %.3g (tol 1e-4), %.1fs (< 60s)",
              static_cast<double>(instances.size()), static_cast<double>(fewest), worst, secs) +
              " worst at " + worst_at);
}

// ---- 2: NT-Xent fixed values ---------------------------------------------------------------------

void criterion2() {
  const std::vector<double> orth{1, 0, 1, 0, 0, 1, 0, 1};
  const double a = nt_xent_loss(orth, 4, 2, 1.0, false).loss;
  double worst_uniform = 0;
  for (std::size_t B : {4u, 8u, 16u, 64u}) {
    std::vector<double> z;
    for (std::size_t i = 0; i < B; ++i) z.insert(z.end(), {0.5, 1.5, -2.0, 0.25});
    const double l = nt_xent_loss(z, B, 4, 0.1, false).loss;
    worst_uniform = std::max(worst_uniform, std::abs(l - std::log(static_cast<double>(B - 1))));
  }
  const bool pass = std::abs(a - 0.55144) < 1e-4 && worst_uniform < 1e-4;
  verdict(2, pass, fmt("orthogonal B=4 tau=1: %.6f (0.55144 +- 1e-4); identical rows |L-log(B-1)| max %.2g (< 1e-4)", a,
                       worst_uniform));
}

// ---- 3: exact retrieval vs brute force -----------------------------------------------------------

void criterion3() {
  Rng rng = substream(303, {1});
  Encoder model;
  model.init_weights(rng);
  model.set_normalization(std::vector<float>{30.0f}, std::vector<float>{40.0f});
  int cos_ok = 0, l2_ok = 0;
  for (int f = 0; f < 100; ++f) {
    std::vector<Situation> db;
    for (int i = 0; i < 50; ++i)
      db.push_back(oracle::random_situation(rng, "f" + std::to_string(f) + "-" + std::to_string(i), 30, 1,
                                            uniform(rng, 0.0, 0.4)));
    const std::size_t q = uniform_index(rng, 50);
    const std::size_t k = 1 + uniform_index(rng, 49);

    const auto index = build_index(model, db);
    const auto raw = embed(model, db, false);
    const std::size_t E = index.dim;
    std::vector<std::vector<float>> rows;
    for (std::size_t i = 0; i < 50; ++i) rows.emplace_back(raw.begin() + i * E, raw.begin() + (i + 1) * E);
    const auto want_cos = oracle::cosine_ranking(rows, rows[q], q);
    const auto got_cos = query_top_k(index.row(q), index, k, db[q].id);
    bool same = got_cos.hits.size() == k;
    for (std::size_t i = 0; same && i < k; ++i) same = got_cos.hits[i].index == want_cos[i];
    cos_ok += same;

    const auto want_l2 = oracle::l2_ranking(db, db[q], q);
    const auto got_l2 = l2_baseline_top_k(db[q], db, k);
    same = got_l2.hits.size() == k;
    for (std::size_t i = 0; same && i < k; ++i) same = got_l2.hits[i].index == want_l2[i];
    l2_ok += same;
  }
  verdict(3, cos_ok == 100 && l2_ok == 100,
          fmt("50-situation fixtures matching brute force: cosine %g/100, L2 %g/100", cos_ok, l2_ok));
}

// ---- 4: AP / MAP vs brute force ------------------------------------------------------------------

void criterion4() {
  const RetrievalTask worked{"q", {"a", "b"}, "c"};
  const double ap = average_precision(worked, std::vector<std::string>{"a", "x", "b", "y"}, 3);
  Rng rng = substream(404, {1});
  double worst = 0;
  for (int f = 0; f < 100; ++f) {
    const std::size_t n = 10 + uniform_index(rng, 60);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("i" + std::to_string(i));
    std::vector<RetrievalTask> tasks;
    std::map<std::string, std::vector<std::string>> rankings;
    const std::size_t nq = 1 + uniform_index(rng, 8);
    for (std::size_t t = 0; t < nq; ++t) {
      std::vector<std::string> pool = ids;
      pool.erase(pool.begin() + static_cast<long>(t));
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t rel = 1 + uniform_index(rng, std::min<std::size_t>(pool.size(), 10));
      tasks.push_back({ids[t], std::set<std::string>(pool.begin(), pool.begin() + static_cast<long>(rel)), "c"});
      std::shuffle(pool.begin(), pool.end(), rng);
      rankings[ids[t]] = pool;
    }
    const std::size_t k = 1 + uniform_index(rng, n);
    double sum = 0;
    for (const auto& t : tasks) {
      const double want = oracle::average_precision(t.relevant_ids, rankings[t.query_id], k);
      worst = std::max(worst, std::abs(average_precision(t, rankings[t.query_id], k) - want));
      sum += want;
    }
    const Retriever r = [&](const std::string& q) { return rankings.at(q); };
    worst = std::max(worst, std::abs(map_at_k(tasks, r, k) - sum / static_cast<double>(tasks.size())));
  }
  verdict(4, worst <= 1e-12 && std::abs(ap - 0.8333) < 1e-4,
          fmt("worked example AP=%.4f (0.8333); 100 fixtures max |diff| %.2g (<= 1e-12)", ap, worst));
}

// ---- 5, 6, 8: default corpus -----------------------------------------------------------------------

struct DefaultRun {
  bool ok = false;
  std::string error;
  double train_seconds = 0;
  std::size_t epochs = 0;
  EvalReport clsr, baseline;
  fs::path model_path, labeled_path;
};

DefaultRun default_run(const fs::path& work) {
  DefaultRun out;
  try {
    const RunConfig cfg = run_config_from_json(jsonl::Json::object());  // seed 42, clsr-10, all defaults
    const fs::path dir = work / "default";
    fs::remove_all(dir);
    run_generate(cfg, dir / "data");
    const auto prep = run_prepare(cfg, dir / "data" / "unlabeled.jsonl", dir / "prep");
    const auto t0 = Clock::now();
    const auto report = run_train(cfg, prep.train, prep.val, dir / "run");
    out.train_seconds = seconds_since(t0);
    out.epochs = report.epochs.size();
    out.model_path = dir / "run" / "model.ckpt";
    out.labeled_path = dir / "data" / "labeled.jsonl";
    const auto reps =
        run_eval(cfg, {{"clsr-10", out.model_path}}, out.labeled_path, dir / "data" / "tasks.json", dir / "report");
    for (const auto& r : reps) (r.retriever == "L2Retriever" ? out.baseline : out.clsr) = r;
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

double class_map(const EvalReport& r, const std::string& name) {
  for (const auto& [n, v] : r.per_class_map)
    if (n == name) return v;
  return std::nan("");
}

void criterion5(const DefaultRun& run) {
  if (!run.ok) return verdict(5, false, "default pipeline failed: " + run.error);
  const double p1 = run.clsr.precision_at.at(1);
  const bool pass = run.clsr.map >= run.baseline.map + 0.10 && p1 >= 0.85 && run.train_seconds < 1800.0;
  verdict(5, pass,
          fmt("MAP clsr-10 %.4f vs L2 %.4f (need +0.10); P@1 %.4f (>= 0.85); training %.0fs (< 1800s)", run.clsr.map,
              run.baseline.map, p1, run.train_seconds) +
              " over " + std::to_string(run.epochs) + " epochs");
}

void criterion6(const DefaultRun& run) {
  if (!run.ok) return verdict(6, false, "default pipeline failed: " + run.error);
  const double c = class_map(run.clsr, "multi_disassoc"), b = class_map(run.baseline, "multi_disassoc");
  verdict(6, c >= b + 0.15, fmt("multi_disassoc MAP clsr-10 %.4f vs L2 %.4f (need +0.15)", c, b));
}

void criterion8(const DefaultRun& run, const fs::path& work) {
  try {
    Encoder model;
    if (run.ok) {
      model = load_checkpoint(run.model_path.string());
    } else {  // still check the mechanism on an untrained model
      Rng init = substream(808, {2});
      model.init_weights(init);
      model.set_normalization(std::vector<float>{30.0f}, std::vector<float>{40.0f});
    }
    Rng rng = substream(808, {1});
    std::vector<Situation> items;
    for (int i = 0; i < 1000; ++i)
      items.push_back(oracle::random_situation(rng, "r" + std::to_string(i), 30, 1, uniform(rng, 0.0, 0.5)));
    const auto path = (work / "roundtrip.ckpt").string();
    save_checkpoint(model, path);
    const Encoder back = load_checkpoint(path);
    const auto a = embed(model, items), b = embed(back, items);
    const bool same = a.size() == b.size() && a.size() == 1000 * model.config().embedding &&
                      std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
    const bool bytes = checkpoint_bytes(back) == bin::read_file(path);
    verdict(8, same && bytes,
            std::string("save->load->embed on 1000 situations: ") + (same ? "bit-identical" : "DIFFERS") +
                (bytes ? ", re-serialized checkpoint identical" : ", re-serialized checkpoint DIFFERS") +
                (run.ok ? " (trained model)" : " (untrained model)"));
  } catch (const std::exception& e) {
    verdict(8, false, std::string("error: ") + e.what());
  }
}

// ---- 7: reproducibility -------------------------------------------------------------------------------

std::map<std::string, std::string> artifacts(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension().string();
    if (ext == ".ckpt" || ext == ".bin" || ext == ".csv") out[fs::relative(e.path(), root).string()] = bin::read_file(e.path().string());
  }
  return out;
}

void criterion7(const fs::path& work) {
  try {
    // Full preset sweep and pipeline on a reduced corpus; the default-scale
    // sweep is eight default trainings long.
    const auto cfg = run_config_from_json(jsonl::Json::parse(R"({
      "data": {"series": 80, "hours_per_series": 6, "train_pairs": 384, "val_pairs": 64},
      "train": {"batch_size": 64, "max_epochs": 2}
    })"));
    const fs::path a = work / "reproduce_a", b = work / "reproduce_b";
    fs::remove_all(a);
    fs::remove_all(b);
    run_reproduce(cfg, a);
    run_reproduce(cfg, b);
    const auto fa = artifacts(a), fb = artifacts(b);
    std::size_t ckpt = 0, index = 0, csv = 0, differ = 0;
    for (const auto& [name, bytes] : fa) {
      const auto it = fb.find(name);
      if (it == fb.end() || it->second != bytes) ++differ;
      if (name.ends_with(".ckpt")) ++ckpt;
      if (name.ends_with("index.bin")) ++index;
      if (name.ends_with(".csv") && name.rfind("report", 0) == 0) ++csv;
    }
    if (fa.size() != fb.size()) ++differ;
    const bool pass = differ == 0 && ckpt == 8 && index == 8 && csv >= 3;
    verdict(7, pass,
            fmt("two reproduce runs (8 presets, reduced corpus): %g checkpoints, %g indexes, %g report CSVs; %g differ",
                ckpt, index, csv, differ));
  } catch (const std::exception& e) {
    verdict(7, false, std::string("error: ") + e.what());
  }
}

// ---- 9: data preparation invariants ------------------------------------------------------------------

struct PrepOracle {
  std::vector<std::optional<double>> windows;  // 60 window means
};

PrepOracle oracle_windows(const RawSeries& raw) {
  PrepOracle o;
  for (std::size_t w = 0; w < 60; ++w) {
    double sum = 0;
    int n = 0;
    for (std::size_t i = w * 6; i < w * 6 + 6; ++i)
      if (raw.values[i]) {
        sum += *raw.values[i];
        ++n;
      }
    o.windows.push_back(n ? std::optional<double>(sum / n) : std::nullopt);
  }
  return o;
}

std::string check_case(Rng& rng, int c) {
  RawSeries raw;
  raw.device_id = "d" + std::to_string(c);
  raw.start_time = 3600 * static_cast<std::int64_t>(uniform_index(rng, 1000));
  const double missing = uniform(rng, 0.0, 1.0) < 0.2 ? uniform(rng, 0.5, 1.0) : uniform(rng, 0.0, 0.5);
  const std::size_t extra = uniform_index(rng, 4) == 0 ? uniform_index(rng, 359) : 0;  // partial trailing segment
  for (std::size_t i = 0; i < 360 + extra; ++i) {
    if (uniform(rng, 0.0, 1.0) < missing)
      raw.values.emplace_back();
    else
      raw.values.emplace_back(static_cast<float>(uniform(rng, 0.0, 100.0)));
  }
  PrepConfig cfg;
  cfg.rng_seed = c;
  cfg.min_points = uniform_index(rng, 31);
  cfg.augmentations.cyclic_shift = uniform_index(rng, 2);
  cfg.augmentations.vertical_shift = uniform_index(rng, 2);
  cfg.augmentations.scale = uniform_index(rng, 2);

  const auto o = oracle_windows(raw);
  std::size_t odd_obs = 0, even_obs = 0;
  for (std::size_t w = 0; w < 60; ++w) (w % 2 == 0 ? odd_obs : even_obs) += o.windows[w].has_value();
  const bool keep = odd_obs >= cfg.min_points && even_obs >= cfg.min_points;

  PairDataset ds;
  try {
    ds = build_pair_dataset(std::vector<RawSeries>{raw}, cfg);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::EmptyDataset && !keep) return "";
    return std::string("unexpected error: ") + e.what();
  }
  if (!keep) return "pair kept below min_points";
  if (ds.pairs.size() != 1 || ds.manifest.segments != 1) return "expected exactly one segment and pair";
  const auto& p = ds.pairs[0];
  for (const Situation* s : {&p.first, &p.second}) {
    if (s->steps != 30 || s->channels != 1 || s->values.size() != 30 || !s->imputed) return "bad shape or state";
    for (std::size_t t = 0; t < 30; ++t)
      if (!s->mask[t] && s->values[t] != cfg.sentinel) return "missing cell without sentinel";
    if (!s->meta || s->meta->start_time != raw.start_time || s->meta->device_id != raw.device_id) return "bad meta";
  }
  // first member: odd windows (1-based), untouched
  for (std::size_t t = 0; t < 30; ++t) {
    const auto& w = o.windows[2 * t];
    if (static_cast<bool>(p.first.mask[t]) != w.has_value()) return "first mask differs from odd windows";
    if (w && std::abs(p.first.values[t] - *w) > 1e-4) return "first value differs from window mean";
  }
  // second member: even windows, possibly rotated / shifted / scaled
  std::size_t second_obs = 0;
  for (std::size_t t = 0; t < 30; ++t) second_obs += p.second.mask[t];
  if (second_obs != even_obs) return "augmentation changed the observed count";
  if (!cfg.augmentations.cyclic_shift)
    for (std::size_t t = 0; t < 30; ++t)
      if (static_cast<bool>(p.second.mask[t]) != o.windows[2 * t + 1].has_value()) return "second mask moved";
  if (!cfg.augmentations.any())
    for (std::size_t t = 0; t < 30; ++t)
      if (p.second.mask[t] && std::abs(p.second.values[t] - *o.windows[2 * t + 1]) > 1e-4)
        return "second value differs without augmentation";
  if (cfg.augmentations.cyclic_shift && !cfg.augmentations.vertical_shift && !cfg.augmentations.scale) {
    std::multiset<float> want, got;
    for (std::size_t t = 0; t < 30; ++t) {
      if (o.windows[2 * t + 1]) want.insert(static_cast<float>(*o.windows[2 * t + 1]));
      if (p.second.mask[t]) got.insert(p.second.values[t]);
    }
    if (want.size() != got.size()) return "cyclic shift changed the observed multiset";
    for (auto i = want.begin(), j = got.begin(); i != want.end(); ++i, ++j)
      if (std::abs(*i - *j) > 1e-4) return "cyclic shift changed the observed multiset";
  }
  // augmentation identities and composition
  const Situation& s = p.first;
  if (cyclic_shift(s, 0).values != s.values || scale(s, 1.0f).values != s.values ||
      vertical_shift(s, 0.0f).values != s.values)
    return "identity augmentation changed the situation";
  const std::size_t a = uniform_index(rng, 30), b = uniform_index(rng, 30);
  const auto twice = cyclic_shift(cyclic_shift(s, a), b), once = cyclic_shift(s, (a + b) % 30);
  if (twice.values != once.values || twice.mask != once.mask) return "cyclic shifts do not compose";
  const float da = static_cast<float>(uniform(rng, -10.0, 10.0)), db = static_cast<float>(uniform(rng, -10.0, 10.0));
  const auto v2 = vertical_shift(vertical_shift(s, da), db), v1 = vertical_shift(s, da + db);
  for (std::size_t t = 0; t < 30; ++t) {
    if (v2.mask[t] != s.mask[t]) return "vertical shift moved the mask";
    if (std::abs(v2.values[t] - v1.values[t]) > 1e-4f) return "vertical shifts do not compose";
  }
  // split then interleave restores the window sequence
  OptionalSeries seq;
  for (const auto& w : o.windows) seq.push_back(w ? std::optional<float>(static_cast<float>(*w)) : std::nullopt);
  if (interleave(odd_even_split(seq)) != seq) return "interleave(split(x)) != x";
  return "";
}

void criterion9() {
  Rng rng = substream(909, {1});
  int bad = 0;
  std::string first;
  for (int c = 0; c < 10000; ++c) {
    const auto err = check_case(rng, c);
    if (!err.empty()) {
      if (first.empty()) first = "case " + std::to_string(c) + ": " + err;
      ++bad;
    }
  }
  verdict(9, bad == 0, fmt("10000 randomized prep cases, %g violations", bad) + (first.empty() ? "" : " (" + first + ")"));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "clsr_acceptance";
  fs::create_directories(work);
  set_log_sink([](const std::string& m) { std::fprintf(stderr, "  %s\n", m.c_str()); });

  criterion1();
  criterion2();
  criterion3();
  criterion4();
  const DefaultRun run = default_run(work);
  criterion5(run);
  criterion6(run);
  set_log_sink({});
  criterion7(work);
  criterion8(run, work);
  criterion9();

  std::printf("acceptance: %d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
