#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace clsr {

/// cos(a, b) = a.b / (|a| |b|). Throws ErrorKind::Numeric for a zero vector.
double cos_sim(std::span<const double> a, std::span<const double> b);
double cos_sim(std::span<const float> a, std::span<const float> b);

struct NtXentResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d embeddings, row-major B x E
};

/// Normalized temperature-scaled cross entropy over a batch of B embeddings
/// (row-major B x E) in which rows 2m and 2m+1 are a positive pair.
///
/// For anchor i with positive j the term is
///   l(i,j) = -log( exp(cos(z_i, z_j)/tau) / sum_{k != i} exp(cos(z_i, z_k)/tau) )
/// and the batch loss is the mean over all B ordered positive pairs.
NtXentResult nt_xent_loss(std::span<const double> embeddings, std::size_t batch, std::size_t dim, double tau,
                          bool with_grad = true);
NtXentResult nt_xent_loss(std::span<const float> embeddings, std::size_t batch, std::size_t dim, double tau,
                          bool with_grad = true);

}  // namespace clsr
