#pragma once

// Test-only oracles. None of these go through the spectral operators or the
// pencil eigensolver they are used to check.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <functional>
#include <vector>

#include "qpos/fields.hpp"

namespace qpos::testing {

using RealFunction = std::function<double(const std::vector<double>&)>;

/// d^2 f / dz_j dzbar_k at x by central differences with step h.
inline Matrix finite_difference_hessian(const RealFunction& f, std::vector<double> x, int n, double h) {
  auto second = [&](int a, int b) {
    auto shifted = [&](double da, double db) {
      std::vector<double> y = x;
      y[static_cast<std::size_t>(a)] += da;
      y[static_cast<std::size_t>(b)] += db;
      return f(y);
    };
    if (a == b) {
      return (shifted(h, 0) - 2.0 * f(x) + shifted(-h, 0)) / (h * h);
    }
    return (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h);
  };
  Matrix out(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const int xj = 2 * j, yj = 2 * j + 1, xk = 2 * k, yk = 2 * k + 1;
      out(j, k) = 0.25 * Complex(second(xj, xk) + second(yj, yk), second(xj, yk) - second(yj, xk));
    }
  }
  return out;
}

/// Real roots of det(R - t Omega), found by scanning for sign changes and
/// bisecting. Returned descending.
inline std::vector<double> characteristic_roots(const Matrix& r, const Matrix& omega, int scan_points = 200000) {
  auto det = [&](double t) { return (r - t * omega).determinant().real(); };
  // Every root is bounded by ||Omega^{-1}|| ||R|| in the spectral norm; use a
  // Frobenius bound for safety.
  const double bound = 1.0 + omega.inverse().norm() * r.norm();
  std::vector<double> roots;
  const double step = 2.0 * bound / scan_points;
  double a = -bound, fa = det(a);
  for (int i = 1; i <= scan_points; ++i) {
    const double b = -bound + i * step;
    const double fb = det(b);
    if (fa == 0.0) {
      roots.push_back(a);
    } else if ((fa < 0.0) != (fb < 0.0)) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = det(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    a = b;
    fa = fb;
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

/// Omega~^{-1} = Omega^{-1} (Id + sum_{k=1}^{K} lambda0^k (R Omega^{-1})^k / (k+1)!).
inline Matrix series_inverse_metric(const Matrix& r, const Matrix& omega, double lambda0, int terms = 30) {
  const int n = static_cast<int>(r.rows());
  const Matrix omega_inv = omega.inverse();
  const Matrix a = lambda0 * r * omega_inv;
  Matrix sum = Matrix::Identity(n, n);
  Matrix power = Matrix::Identity(n, n);
  double factorial = 1.0;
  for (int k = 1; k <= terms; ++k) {
    power = (power * a).eval();
    factorial *= (k + 1);
    sum += power / factorial;
  }
  return omega_inv * sum;
}

/// Minimum over all (q+1)-subsets of the sum of the chosen entries.
inline double brute_force_min_subset_sum(const std::vector<double>& values, int q) {
  const int n = static_cast<int>(values.size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != q + 1) continue;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) s += values[static_cast<std::size_t>(i)];
    }
    best = std::min(best, s);
  }
  return best;
}

}  // namespace qpos::testing
