#include "clsr/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <unordered_set>

#include "clsr/binary_io.hpp"
#include "clsr/checkpoint.hpp"

namespace clsr {

namespace {

constexpr std::size_t kEmbedBatch = 256;
constexpr std::uint32_t kIndexVersion = 1;

bool ranks_before(const Hit& a, const Hit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.index < b.index;
}

QueryResult select_top_k(std::vector<Hit> candidates, std::size_t k) {
  require(k >= 1, ErrorKind::Input, "k must be at least 1");
  QueryResult out;
  out.truncated = k > candidates.size();
  const std::size_t n = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), candidates.end(),
                    ranks_before);
  candidates.resize(n);
  out.hits = std::move(candidates);
  return out;
}

void check_imputed(const Situation& s) {
  require(s.imputed || s.observed_count() == s.size(), ErrorKind::Input,
          "situation '" + s.id + "' has missing cells and has not been imputed");
}

}  // namespace

std::optional<std::size_t> EmbeddingIndex::find(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return i;
  return std::nullopt;
}

std::size_t configured_threads() {
  if (const char* env = std::getenv("CLSR_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return 1;
}

std::vector<float> embed(const Encoder& model, std::span<const Situation> situations, bool normalize,
                         std::size_t threads) {
  const auto& mc = model.config();
  for (const auto& s : situations) {
    require(s.steps == mc.steps && s.channels == mc.channels, ErrorKind::Shape,
            "situation '" + s.id + "' has shape (" + std::to_string(s.steps) + ", " + std::to_string(s.channels) +
                "), model expects (" + std::to_string(mc.steps) + ", " + std::to_string(mc.channels) + ")");
    check_imputed(s);
  }
  const std::size_t n = situations.size();
  const std::size_t dim = mc.embedding;
  std::vector<float> out(n * dim);
  const std::size_t chunks = (n + kEmbedBatch - 1) / kEmbedBatch;

  // Each chunk writes a disjoint block of rows, so the result does not depend
  // on the worker count.
  auto run_chunk = [&](std::size_t c) {
    const std::size_t start = c * kEmbedBatch;
    const std::size_t len = std::min(kEmbedBatch, n - start);
    std::vector<const Situation*> members;
    for (std::size_t i = 0; i < len; ++i) members.push_back(&situations[start + i]);
    const auto x = stack_situations<float>(members, mc.steps, mc.channels);
    const auto z = model.infer(x, len);
    for (std::size_t i = 0; i < len; ++i) {
      float* row = out.data() + (start + i) * dim;
      double sq = 0.0;
      for (std::size_t e = 0; e < dim; ++e) {
        row[e] = z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e));
        sq += static_cast<double>(row[e]) * row[e];
      }
      if (!normalize) continue;
      require(sq > 0.0 && std::isfinite(sq), ErrorKind::Numeric,
              "situation '" + situations[start + i].id + "' embeds to a zero or non-finite vector");
      const double inv = 1.0 / std::sqrt(sq);
      for (std::size_t e = 0; e < dim; ++e) row[e] = static_cast<float>(row[e] * inv);
    }
  };

  const std::size_t workers = std::min(threads == 0 ? configured_threads() : threads, std::max<std::size_t>(chunks, 1));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunks; c += workers) run_chunk(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

EmbeddingIndex build_index(const Encoder& model, std::span<const Situation> situations) {
  EmbeddingIndex index;
  std::unordered_set<std::string> seen;
  for (const auto& s : situations) {
    require(seen.insert(s.id).second, ErrorKind::Input, "duplicate situation id '" + s.id + "' in index input");
    index.ids.push_back(s.id);
  }
  index.dim = model.config().embedding;
  index.matrix = embed(model, situations);
  index.fingerprint = model_fingerprint(model);
  return index;
}

QueryResult query_top_k(std::span<const float> q, const EmbeddingIndex& index, std::size_t k,
                        const std::string& exclude_id) {
  require(index.size() > 0, ErrorKind::Input, "query against an empty index");
  require(q.size() == index.dim, ErrorKind::Shape, "query embedding width does not match the index");
  double qn = 0.0;
  for (float v : q) qn += static_cast<double>(v) * v;
  require(qn > 0.0, ErrorKind::Numeric, "query embeds to a zero vector");
  qn = std::sqrt(qn);

  std::vector<Hit> candidates;
  candidates.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (!exclude_id.empty() && index.ids[i] == exclude_id) continue;
    const auto row = index.row(i);
    double dot = 0.0;
    for (std::size_t e = 0; e < index.dim; ++e) dot += static_cast<double>(q[e]) * static_cast<double>(row[e]);
    candidates.push_back({index.ids[i], dot / qn, i});
  }
  return select_top_k(std::move(candidates), k);
}

QueryResult query_top_k(const Situation& query, const EmbeddingIndex& index, const Encoder& model, std::size_t k) {
  const auto z = embed(model, std::span(&query, 1));
  return query_top_k(z, index, k, query.id);
}

QueryResult l2_baseline_top_k(const Situation& query, std::span<const Situation> db, std::size_t k) {
  require(!db.empty(), ErrorKind::Input, "query against an empty database");
  check_imputed(query);
  std::vector<Hit> candidates;
  candidates.reserve(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    const Situation& s = db[i];
    if (!query.id.empty() && s.id == query.id) continue;
    require(s.size() == query.size() && s.steps == query.steps, ErrorKind::Shape,
            "situation '" + s.id + "' differs in shape from the query");
    check_imputed(s);
    double sq = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double d = static_cast<double>(s.values[j]) - static_cast<double>(query.values[j]);
      sq += d * d;
    }
    candidates.push_back({s.id, -std::sqrt(sq), i});
  }
  return select_top_k(std::move(candidates), k);
}

void save_index(const EmbeddingIndex& index, const std::string& path) {
  bin::Writer w;
  w.bytes("CLSI");
  w.u32(kIndexVersion);
  w.u32(static_cast<std::uint32_t>(index.dim));
  w.u32(static_cast<std::uint32_t>(index.size()));
  w.u64(index.fingerprint);
  for (const auto& id : index.ids) w.str(id);
  for (float v : index.matrix) w.f32(v);
  bin::write_file(path, w.data());
}

EmbeddingIndex load_index(const std::string& path) {
  const std::string bytes = bin::read_file(path);
  bin::Reader r(bytes, "index " + path);
  require(r.bytes(4) == "CLSI", ErrorKind::Format, path + " is not an embedding index (bad magic)");
  const auto version = r.u32();
  require(version == kIndexVersion, ErrorKind::Format, "index version " + std::to_string(version) + " is not supported");
  EmbeddingIndex index;
  index.dim = r.u32();
  const auto n = r.u32();
  index.fingerprint = r.u64();
  index.ids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) index.ids.push_back(r.str());
  index.matrix.resize(static_cast<std::size_t>(n) * index.dim);
  for (auto& v : index.matrix) v = r.f32();
  require(r.done(), ErrorKind::Format, "index has trailing bytes");
  return index;
}

}  // namespace clsr
