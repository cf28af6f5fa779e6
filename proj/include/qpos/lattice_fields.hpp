#pragma once

// Spectral differential operators, quadrature and the constant-coefficient
// elliptic solve on a discretized flat torus.
//
// Wirtinger conventions: d/dz = (d/dx - i d/dy) / 2 and d/dzbar = (d/dx + i d/dy) / 2.
// The Hessian of phi is the matrix of d^2 phi / dz_j dzbar_k, the coefficient
// matrix of sqrt(-1) d dbar phi.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "qpos/detail/fft.hpp"
#include "qpos/detail/parallel.hpp"
#include "qpos/detail/summation.hpp"
#include "qpos/fields.hpp"

namespace qpos {

namespace detail {

// Angular wavenumbers along one axis in FFT order. The Nyquist mode keeps its
// k^2 for pure second derivatives but has no first-derivative contribution.
struct AxisWavenumbers {
  std::vector<double> full;
  std::vector<double> first;
};

inline std::vector<AxisWavenumbers> wavenumbers(const TorusGeometry& geometry) {
  std::vector<AxisWavenumbers> out(static_cast<std::size_t>(geometry.real_dim()));
  for (int a = 0; a < geometry.real_dim(); ++a) {
    const int size = geometry.grid_shape()[static_cast<std::size_t>(a)];
    const double unit = 2.0 * std::numbers::pi / geometry.periods()[static_cast<std::size_t>(a)];
    auto& axis = out[static_cast<std::size_t>(a)];
    axis.full.resize(static_cast<std::size_t>(size));
    axis.first.resize(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) {
      const int m = i <= size / 2 ? i : i - size;
      axis.full[static_cast<std::size_t>(i)] = unit * (i == size / 2 ? size / 2 : m);
      axis.first[static_cast<std::size_t>(i)] = i == size / 2 ? 0.0 : unit * m;
    }
  }
  return out;
}

// Symbol of d^2 / dx_a dx_b at the grid mode with per-axis indices `modes`.
inline double second_derivative_symbol(const std::vector<AxisWavenumbers>& k, const int* modes, int a,
                                       int b) {
  const auto ua = static_cast<std::size_t>(a);
  const auto ub = static_cast<std::size_t>(b);
  const auto ia = static_cast<std::size_t>(modes[a]);
  const auto ib = static_cast<std::size_t>(modes[b]);
  if (a == b) return -k[ua].full[ia] * k[ua].full[ia];
  return -k[ua].first[ia] * k[ub].first[ib];
}

// Symbol of the (j,k) Hessian entry d^2 / dz_j dzbar_k.
inline Complex hessian_symbol(const std::vector<AxisWavenumbers>& k, const int* modes, int j, int l) {
  const int xj = 2 * j, yj = 2 * j + 1, xl = 2 * l, yl = 2 * l + 1;
  const double re = second_derivative_symbol(k, modes, xj, xl) + second_derivative_symbol(k, modes, yj, yl);
  const double im = second_derivative_symbol(k, modes, xj, yl) - second_derivative_symbol(k, modes, yj, xl);
  return 0.25 * Complex(re, im);
}

// Per-axis grid indices of every point, flattened [point][axis].
inline std::vector<int> mode_table(const TorusGeometry& geometry) {
  const auto axes = static_cast<std::size_t>(geometry.real_dim());
  std::vector<int> table(geometry.point_count() * axes);
  for (std::size_t p = 0; p < geometry.point_count(); ++p) {
    for (std::size_t a = 0; a < axes; ++a) table[p * axes + a] = geometry.index_along(p, static_cast<int>(a));
  }
  return table;
}

inline std::vector<Complex> forward_transform(const ScalarField& f) {
  std::vector<Complex> spectrum(f.values().begin(), f.values().end());
  fft_in_place(spectrum, f.geometry().grid_shape(), FFTW_FORWARD);
  return spectrum;
}

inline std::vector<double> inverse_transform_real(std::vector<Complex> spectrum, const TorusGeometry& geometry) {
  fft_in_place(spectrum, geometry.grid_shape(), FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(geometry.point_count());
  std::vector<double> out(spectrum.size());
  for (std::size_t p = 0; p < spectrum.size(); ++p) out[p] = spectrum[p].real() * scale;
  return out;
}

}  // namespace detail

/// Matrix of sqrt(-1) d dbar phi, entry (j,k) = d^2 phi / dz_j dzbar_k, via
/// frequency-space multipliers. Exactly Hermitian at every point.
inline HermitianMatrixField dbar_del_hessian(const ScalarField& phi) {
  phi.require_finite("weight");
  const TorusGeometry& geometry = phi.geometry();
  const int axes = geometry.real_dim();
  const int n = geometry.complex_dim();
  const auto k = detail::wavenumbers(geometry);
  const auto modes = detail::mode_table(geometry);
  const auto spectrum = detail::forward_transform(phi);
  const std::size_t points = geometry.point_count();

  // Real second derivatives d_ab for a <= b.
  std::vector<std::vector<double>> second(static_cast<std::size_t>(axes * axes));
  for (int a = 0; a < axes; ++a) {
    for (int b = a; b < axes; ++b) {
      std::vector<Complex> scaled(points);
      for (std::size_t p = 0; p < points; ++p) {
        scaled[p] = spectrum[p] * detail::second_derivative_symbol(
                                      k, &modes[p * static_cast<std::size_t>(axes)], a, b);
      }
      second[static_cast<std::size_t>(a * axes + b)] = detail::inverse_transform_real(std::move(scaled), geometry);
    }
  }
  auto d = [&](int a, int b, std::size_t p) {
    if (a > b) std::swap(a, b);
    return second[static_cast<std::size_t>(a * axes + b)][p];
  };

  HermitianMatrixField out(geometry);
  detail::parallel_for(points, [&](std::size_t p) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        const int xj = 2 * j, yj = 2 * j + 1, xl = 2 * l, yl = 2 * l + 1;
        const double re = d(xj, xl, p) + d(yj, yl, p);
        const double im = d(xj, yl, p) - d(yj, xl, p);
        out.entry(p, j, l) = 0.25 * Complex(re, im);
      }
    }
  });
  return out;
}

/// Pointwise tr_omega A = trace(Omega^{-1} A), real part.
inline ScalarField metric_trace(const HermitianMatrixField& a, const MetricField& omega) {
  require_same_geometry(a.geometry(), omega.geometry());
  ScalarField out(a.geometry());
  if (omega.is_constant()) {
    const Matrix inverse = omega.at(0).inverse();
    detail::parallel_for(a.size(), [&](std::size_t p) { out[p] = (inverse * a.at(p)).trace().real(); });
  } else {
    detail::parallel_for(a.size(), [&](std::size_t p) {
      Eigen::LLT<Matrix> llt(omega.at(p));
      out[p] = llt.solve(a.at(p)).trace().real();
    });
  }
  return out;
}

/// Quadrature sum(g * vol) * cell volume with compensated summation; exact for
/// band-limited integrands.
inline double integrate(const ScalarField& g, const ScalarField& vol) {
  require_same_geometry(g.geometry(), vol.geometry());
  detail::CompensatedSum acc;
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (!(vol[p] > 0.0)) throw Error(Errc::invalid_argument, "volume density must be positive");
    acc.add(g[p] * vol[p]);
  }
  return acc.value() * g.geometry().cell_volume();
}

inline double integrate(const ScalarField& g) { return integrate(g, ScalarField(g.geometry(), 1.0)); }

/// Solves tr_Omega(sqrt(-1) d dbar f) = g for constant Omega, returning the
/// mean-zero solution. g must have (numerically) zero mean.
///
/// The symbol is built from the same multipliers as dbar_del_hessian, so the
/// discrete operator is inverted exactly on every non-constant mode. The
/// residual is measured against the zero-mean part of g and must not exceed
/// residual_tol * max|g|.
inline ScalarField poisson_solve(const ScalarField& g, const MetricField& omega, double residual_tol = 1e-8,
                                 double* residual_out = nullptr) {
  require_same_geometry(g.geometry(), omega.geometry());
  g.require_finite("right-hand side");
  if (!omega.is_constant()) throw Error(Errc::non_constant_metric, "poisson_solve needs a constant metric");

  const double scale = g.max_abs();
  const double mean = g.mean();
  if (std::abs(mean) > 1e-8 * scale) {
    throw Error(Errc::mean_not_zero, "right-hand side has mean " + std::to_string(mean));
  }

  const TorusGeometry& geometry = g.geometry();
  const int axes = geometry.real_dim();
  const int n = geometry.complex_dim();
  const Matrix inverse = omega.at(0).inverse();
  const auto k = detail::wavenumbers(geometry);
  const auto modes = detail::mode_table(geometry);
  auto spectrum = detail::forward_transform(g);

  for (std::size_t p = 0; p < spectrum.size(); ++p) {
    const int* m = &modes[p * static_cast<std::size_t>(axes)];
    if (p == 0) {
      spectrum[p] = 0.0;
      continue;
    }
    Complex symbol = 0.0;
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) symbol += inverse(l, j) * detail::hessian_symbol(k, m, j, l);
    }
    // Strictly negative on every non-constant mode for positive-definite Omega.
    if (!(symbol.real() < 0.0)) throw Error(Errc::invariant_violation, "singular Laplacian symbol");
    spectrum[p] /= symbol.real();
  }
  ScalarField f(geometry, detail::inverse_transform_real(std::move(spectrum), geometry));

  const ScalarField check = metric_trace(dbar_del_hessian(f), omega);
  double residual = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) residual = std::max(residual, std::abs(check[p] - (g[p] - mean)));
  if (residual_out != nullptr) *residual_out = scale > 0.0 ? residual / scale : residual;
  if (residual > residual_tol * scale) {
    throw Error(Errc::invariant_violation, "Poisson residual " + std::to_string(residual) + " above tolerance");
  }
  return f;
}

}  // namespace qpos
