#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "uma/dense_matrix.hpp"
#include "uma/numerics.hpp"

namespace uma::test {

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                 double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  DenseMatrix a(rows, cols);
  for (double& v : a.values()) v = g(rng);
  return a;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, unsorted.
inline std::vector<double> jacobi_eigenvalues(DenseMatrix a) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a(i, i);
  return out;
}

inline double scalar_prox_objective(double y, double t, double tau) {
  return tau * std::abs(y) + 0.5 * (y - t) * (y - t);
}

// Zooming grid search for argmin tau|y| + (y - t)^2 / 2. Runs in long double:
// near the minimum the objective is flat to within double rounding once
// |y - y*| drops below ~1e-8.
inline double grid_prox(double t, double tau) {
  using L = long double;
  auto f = [&](L y) { return L(tau) * std::abs(y) + (y - L(t)) * (y - L(t)) / 2; };
  L lo = -std::abs(t) - tau - 1.0L;
  L hi = std::abs(t) + tau + 1.0L;
  L best = 0.0L;
  for (int level = 0; level < 12; ++level) {
    const int points = 1000;
    L best_val = std::numeric_limits<L>::infinity();
    const L h = (hi - lo) / points;
    for (int k = 0; k <= points; ++k) {
      const L y = lo + h * k;
      const L v = f(y);
      if (v < best_val) {
        best_val = v;
        best = y;
      }
    }
    // Zero is a kink; make sure it is always a candidate.
    if (f(0.0L) <= best_val) best = 0.0L;
    lo = best - 2 * h;
    hi = best + 2 * h;
  }
  return static_cast<double>(best);
}

inline double svt_objective(const DenseMatrix& x, const DenseMatrix& y, double mu) {
  return mu * nuclear_norm(x) + 0.5 * std::pow(frobenius_norm(x - y), 2);
}

}  // namespace uma::test
