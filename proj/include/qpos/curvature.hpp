#pragma once

// Line-bundle metrics on the torus, Chern curvature, scalar curvature and the
// degree pairing against constant (hence Gauduchon) metrics.
//
// Volume normalization: omega^n / n! = det(Omega) dLebesgue, and a Hermitian
// matrix A stands for the real (1,1)-form (sqrt(-1)/2) sum A_jk dz_j ^ dzbar_k.
// The degree integral is then
//     deg(L, omega) = (1/n) * integral of tr_omega R * det(Omega)
//                   = integral of R ^ omega^(n-1) / n!.
// The 2*pi in the first Bott-Chern class is dropped; every criterion only uses
// signs or ratios of these integrals.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "qpos/exterior.hpp"
#include "qpos/fields.hpp"
#include "qpos/lattice_fields.hpp"

namespace qpos {

/// Relative tolerance for reading the sign of a constant class's eigenvalues.
inline constexpr double kClassSignTolerance = 1e-12;

/// h = e^{-phi} h0 with curvature R = r_const + sqrt(-1) d dbar phi.
///
/// r_const is the constant representative of the first Bott-Chern class. With
/// phi = 0 the same type represents a bare (1,1) class.
class LineBundleMetric {
 public:
  LineBundleMetric(Matrix r_const, ScalarField phi) : r_const_(std::move(r_const)), phi_(std::move(phi)) {
    const int n = phi_.geometry().complex_dim();
    if (r_const_.rows() != n || r_const_.cols() != n) {
      throw Error(Errc::invalid_argument, "r_const size does not match the complex dimension");
    }
    if (!r_const_.allFinite()) throw Error(Errc::non_finite, "r_const has non-finite entries");
    if (!is_hermitian(r_const_)) throw Error(Errc::invalid_argument, "r_const is not Hermitian");
    phi_.require_finite("weight");
  }

  static LineBundleMetric flat(const TorusGeometry& geometry, Matrix r_const) {
    return LineBundleMetric(std::move(r_const), ScalarField(geometry));
  }

  const Matrix& r_const() const noexcept { return r_const_; }
  const ScalarField& phi() const noexcept { return phi_; }
  const TorusGeometry& geometry() const noexcept { return phi_.geometry(); }
  int dim() const noexcept { return geometry().complex_dim(); }

  LineBundleMetric dual() const { return LineBundleMetric(-r_const_, -phi_); }

  LineBundleMetric with_weight(ScalarField phi) const { return LineBundleMetric(r_const_, std::move(phi)); }

 private:
  Matrix r_const_;
  ScalarField phi_;
};

struct PositivityCertificate {
  bool verdict = false;
  double margin = 0.0;     // worst case over the grid
  double threshold = 0.0;  // verdict requires margin > threshold
  std::optional<MetricField> witness_metric;
  std::optional<ScalarField> witness_weight;
  std::map<std::string, double> residuals;
  std::string reason;
};

inline HermitianMatrixField chern_curvature(const LineBundleMetric& bundle) {
  HermitianMatrixField curvature = dbar_del_hessian(bundle.phi());
  const int n = bundle.dim();
  const Matrix& r = bundle.r_const();
  for (std::size_t p = 0; p < curvature.size(); ++p) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) curvature.entry(p, j, k) += r(j, k);
    }
  }
  return curvature;
}

/// tr_omega R^{(L,h)}, the scalar curvature of the Chern curvature.
inline ScalarField scalar_curvature(const LineBundleMetric& bundle, const MetricField& omega) {
  require_same_geometry(bundle.geometry(), omega.geometry());
  return metric_trace(chern_curvature(bundle), omega);
}

/// Integral of omega^n / n!.
inline double metric_volume(const MetricField& omega) {
  return integrate(ScalarField(omega.geometry(), 1.0), omega.volume_density());
}

inline void require_constant_metric(const MetricField& omega) {
  if (!omega.is_constant()) {
    throw Error(Errc::non_constant_metric, "pairing requires a constant (Gauduchon) metric");
  }
}

/// Degree pairing of c1_BC(L) with omega^(n-1), via the trace route.
inline double degree_integral(const LineBundleMetric& bundle, const MetricField& omega) {
  require_same_geometry(bundle.geometry(), omega.geometry());
  require_constant_metric(omega);
  return integrate(scalar_curvature(bundle, omega), omega.volume_density()) / bundle.dim();
}

/// Same pairing via explicit exterior algebra: integral of R ^ omega^(n-1) / n!.
/// Only for n <= 2.
inline double wedge_degree_check(const LineBundleMetric& bundle, const MetricField& omega) {
  require_same_geometry(bundle.geometry(), omega.geometry());
  const int n = bundle.dim();
  if (n > 2) throw Error(Errc::unsupported_dimension, "wedge_degree_check supports n <= 2");
  require_constant_metric(omega);

  const exterior::Form omega_power = exterior::power(exterior::hermitian_to_form(omega.at(0)), n - 1);
  double factorial = 1.0;
  for (int i = 2; i <= n; ++i) factorial *= i;

  const HermitianMatrixField curvature = chern_curvature(bundle);
  ScalarField density(bundle.geometry());
  detail::parallel_for(curvature.size(), [&](std::size_t p) {
    const auto top = wedge(exterior::hermitian_to_form(curvature.at(p)), omega_power);
    density[p] = top.top_coefficient().real() / factorial;
  });
  return integrate(density);
}

/// Sup norm of the (n,n) coefficient of d dbar omega^(n-1). Zero means
/// Gauduchon. For n = 1 the form omega^0 is constant and the defect is 0.
inline double gauduchon_defect(const MetricField& omega) {
  const int n = omega.dim();
  if (n > 2) throw Error(Errc::unsupported_dimension, "gauduchon_defect supports n <= 2");
  if (n == 1) return 0.0;

  const TorusGeometry& geometry = omega.geometry();
  // d_a dbar_b of the complex entry Omega_jk, from Hessians of its real and imaginary parts.
  auto entry_hessian = [&](int j, int k) {
    ScalarField re(geometry), im(geometry);
    for (std::size_t p = 0; p < omega.size(); ++p) {
      re[p] = omega.field().entry(p, j, k).real();
      im[p] = omega.field().entry(p, j, k).imag();
    }
    return std::make_pair(dbar_del_hessian(re), dbar_del_hessian(im));
  };
  const auto h00 = entry_hessian(0, 0);
  const auto h01 = entry_hessian(0, 1);
  const auto h10 = entry_hessian(1, 0);
  const auto h11 = entry_hessian(1, 1);
  auto dd = [](const std::pair<HermitianMatrixField, HermitianMatrixField>& h, std::size_t p, int a, int b) {
    return h.first.entry(p, a, b) + Complex(0.0, 1.0) * h.second.entry(p, a, b);
  };

  // dz_a ^ dzbar_b ^ dz_j ^ dzbar_k is nonzero only for {a,j} = {b,k} = {1,2}.
  double worst = 0.0;
  for (std::size_t p = 0; p < omega.size(); ++p) {
    const Complex c = dd(h11, p, 0, 0) - dd(h10, p, 0, 1) - dd(h01, p, 1, 0) + dd(h00, p, 1, 1);
    worst = std::max(worst, std::abs(c));
  }
  return worst;
}

}  // namespace qpos
