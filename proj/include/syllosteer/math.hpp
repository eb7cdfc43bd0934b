#pragma once

// Small dense numerics used by the probing and steering code. Widths here are
// hidden-state sized (tens to a few hundred), so plain loops and a Cholesky
// factorization are all that is needed.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "syllosteer/common.hpp"

namespace syllosteer {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Plain cosine; 0 by convention when either vector is zero.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// ---------------------------------------------------------------------------
// Cholesky solve for small SPD systems (probe Newton steps)
// ---------------------------------------------------------------------------

// Solves A x = b for symmetric positive definite A (row-major d x d).
// A is overwritten with its Cholesky factor.
inline std::vector<double> cholesky_solve(std::vector<double>& A, std::vector<double> b,
                                          std::size_t d) {
  for (std::size_t j = 0; j < d; ++j) {
    double diag = A[j * d + j];
    for (std::size_t k = 0; k < j; ++k) diag -= A[j * d + k] * A[j * d + k];
    if (diag <= 0.0) throw DataError("cholesky: matrix not positive definite");
    diag = std::sqrt(diag);
    A[j * d + j] = diag;
    for (std::size_t i = j + 1; i < d; ++i) {
      double v = A[i * d + j];
      for (std::size_t k = 0; k < j; ++k) v -= A[i * d + k] * A[j * d + k];
      A[i * d + j] = v / diag;
    }
  }
  // forward: L y = b
  for (std::size_t i = 0; i < d; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= A[i * d + k] * b[k];
    b[i] = v / A[i * d + i];
  }
  // backward: L^T x = y
  for (std::size_t ii = d; ii-- > 0;) {
    double v = b[ii];
    for (std::size_t k = ii + 1; k < d; ++k) v -= A[k * d + ii] * b[k];
    b[ii] = v / A[ii * d + ii];
  }
  return b;
}

// ---------------------------------------------------------------------------
// First principal component via power iteration on the centered data
// ---------------------------------------------------------------------------

// rows: n x d, row-major. Returns the dominant eigenvector of the covariance,
// computed without forming it. Deterministic start, fixed tolerance.
inline std::vector<double> first_principal_component(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw DataError("pca: need at least 2 rows");
  const std::size_t n = rows.size(), d = rows[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (auto& m : mean) m /= static_cast<double>(n);

  std::vector<double> v(d, 0.0);
  v[0] = 1.0;  // deterministic start; rotated immediately by the first product
  std::vector<double> next(d), centered(d);
  for (int iter = 0; iter < 500; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - mean[j];
      double proj = dot(centered, v);
      for (std::size_t j = 0; j < d; ++j) next[j] += proj * centered[j];
    }
    double nn = norm(next);
    if (nn == 0.0) {
      // degenerate data (all rows equal); no principal direction
      throw DataError("pca: zero-variance data");
    }
    for (auto& x : next) x /= nn;
    double delta = 0.0;
    for (std::size_t j = 0; j < d; ++j) delta = std::max(delta, std::abs(next[j] - v[j]));
    v = next;
    if (delta < 1e-12) break;
  }
  return v;
}

// Standard normal sampler with an explicit engine type so streams are
// reproducible across the codebase.
inline double gaussian(std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace syllosteer
