#include "clsr/ntxent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clsr/error.hpp"

namespace clsr {

namespace {

template <typename T>
double cos_sim_impl(std::span<const T> a, std::span<const T> b) {
  require(a.size() == b.size(), ErrorKind::Shape, "cos_sim needs vectors of equal length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
  }
  require(na > 0.0 && nb > 0.0, ErrorKind::Numeric, "cos_sim of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

double cos_sim(std::span<const double> a, std::span<const double> b) { return cos_sim_impl(a, b); }
double cos_sim(std::span<const float> a, std::span<const float> b) { return cos_sim_impl(a, b); }

NtXentResult nt_xent_loss(std::span<const double> z, std::size_t batch, std::size_t dim, double tau,
                          bool with_grad) {
  require(batch >= 2 && batch % 2 == 0, ErrorKind::Shape,
          "nt_xent_loss needs an even batch of at least 2, got " + std::to_string(batch));
  require(z.size() == batch * dim && dim > 0, ErrorKind::Shape, "embedding buffer does not match B x E");
  require(tau > 0.0, ErrorKind::Config, "temperature must be positive");

  // Unit rows.
  std::vector<double> u(z.size()), norm(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    double sq = 0.0;
    for (std::size_t e = 0; e < dim; ++e) sq += z[i * dim + e] * z[i * dim + e];
    require(sq > 0.0 && std::isfinite(sq), ErrorKind::Numeric,
            "embedding " + std::to_string(i) + " has zero or non-finite norm");
    norm[i] = std::sqrt(sq);
    for (std::size_t e = 0; e < dim; ++e) u[i * dim + e] = z[i * dim + e] / norm[i];
  }

  // Scaled similarities s_ik = u_i . u_k / tau.
  std::vector<double> s(batch * batch);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t k = i; k < batch; ++k) {
      double dot = 0.0;
      for (std::size_t e = 0; e < dim; ++e) dot += u[i * dim + e] * u[k * dim + e];
      s[i * batch + k] = s[k * batch + i] = dot / tau;
    }

  // Row softmax over k != i, stabilized by the row max.
  NtXentResult out;
  std::vector<double> g(batch * batch, 0.0);  // d loss / d s_ik
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t pos = i ^ 1u;
    double mx = -INFINITY;
    for (std::size_t k = 0; k < batch; ++k)
      if (k != i) mx = std::max(mx, s[i * batch + k]);
    double denom = 0.0;
    for (std::size_t k = 0; k < batch; ++k)
      if (k != i) denom += std::exp(s[i * batch + k] - mx);
    out.loss += (mx + std::log(denom) - s[i * batch + pos]) * inv_b;
    if (with_grad) {
      for (std::size_t k = 0; k < batch; ++k) {
        if (k == i) continue;
        const double p = std::exp(s[i * batch + k] - mx) / denom;
        g[i * batch + k] = (p - (k == pos ? 1.0 : 0.0)) * inv_b;
      }
    }
  }
  if (!with_grad) return out;

  // d loss / d u_i = (1/tau) sum_k (g_ik + g_ki) u_k, then project through
  // the normalization: dz = (du - u (u . du)) / |z|.
  out.grad.assign(z.size(), 0.0);
  std::vector<double> du(dim);
  for (std::size_t i = 0; i < batch; ++i) {
    std::fill(du.begin(), du.end(), 0.0);
    for (std::size_t k = 0; k < batch; ++k) {
      const double w = (g[i * batch + k] + g[k * batch + i]) / tau;
      if (w == 0.0) continue;
      for (std::size_t e = 0; e < dim; ++e) du[e] += w * u[k * dim + e];
    }
    double proj = 0.0;
    for (std::size_t e = 0; e < dim; ++e) proj += u[i * dim + e] * du[e];
    for (std::size_t e = 0; e < dim; ++e) out.grad[i * dim + e] = (du[e] - u[i * dim + e] * proj) / norm[i];
  }
  return out;
}

NtXentResult nt_xent_loss(std::span<const float> z, std::size_t batch, std::size_t dim, double tau,
                          bool with_grad) {
  std::vector<double> wide(z.begin(), z.end());
  return nt_xent_loss(std::span<const double>(wide), batch, dim, tau, with_grad);
}

}  // namespace clsr
