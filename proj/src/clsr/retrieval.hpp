#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clsr/encoder.hpp"
#include "clsr/telemetry.hpp"

namespace clsr {

/// Row-normalized embeddings of a situation database, in insertion order.
struct EmbeddingIndex {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<float> matrix;  // ids.size() x dim, unit rows
  std::uint64_t fingerprint = 0;

  std::size_t size() const { return ids.size(); }
  std::span<const float> row(std::size_t i) const { return {matrix.data() + i * dim, dim}; }
  std::optional<std::size_t> find(const std::string& id) const;
};

struct Hit {
  std::string id;
  double score = 0.0;
  std::size_t index = 0;  // insertion position in the database
};

/// Best first. Scores are cosine similarity (CLSR) or negative L2 distance
/// (baseline); ties are broken by ascending insertion index.
struct QueryResult {
  std::vector<Hit> hits;
  bool truncated = false;
};

/// Eval-mode embeddings of imputed situations, batched internally; rows are
/// L2-normalized. Uses up to `threads` workers (0 = CLSR_THREADS or 1).
std::vector<float> embed(const Encoder& model, std::span<const Situation> situations, bool normalize = true,
                         std::size_t threads = 0);

EmbeddingIndex build_index(const Encoder& model, std::span<const Situation> situations);

/// Exhaustive cosine scan. `exclude_id` (the query's own id) never appears.
QueryResult query_top_k(std::span<const float> query_embedding, const EmbeddingIndex& index, std::size_t k,
                        const std::string& exclude_id = "");
QueryResult query_top_k(const Situation& query, const EmbeddingIndex& index, const Encoder& model, std::size_t k);

/// Flattened Euclidean distance over imputed values.
QueryResult l2_baseline_top_k(const Situation& query, std::span<const Situation> db, std::size_t k);

void save_index(const EmbeddingIndex& index, const std::string& path);
EmbeddingIndex load_index(const std::string& path);

/// Worker count from CLSR_THREADS (default 1).
std::size_t configured_threads();

}  // namespace clsr
