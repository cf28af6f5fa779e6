#pragma once

// Scalar-curvature normalization: given a constant (Gauduchon) metric omega,
// find f with h = e^f h0 such that tr_omega R^{(L,h)} is the constant
//     c = n * deg(L, omega) / vol(omega).

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>

#include "qpos/curvature.hpp"
#include "qpos/lattice_fields.hpp"
#include "qpos/q_positivity.hpp"

namespace qpos {

struct Tolerances {
  double positivity_rel = 1e-9;   // eps_pos relative to the magnitudes involved
  double solver_residual = 1e-8;  // Poisson residual relative to max|rhs|
  double mean_rel = 1e-8;         // rhs mean relative to its scale
  double constancy = 1e-7;        // spread of the normalized scalar curvature / (1 + |c|)
  double aligned_delta = 1e-3;    // weight on non-positive directions of the witness metric
};

inline double target_constant(const LineBundleMetric& bundle, const MetricField& omega) {
  return bundle.dim() * degree_integral(bundle, omega) / metric_volume(omega);
}

struct Normalization {
  ScalarField f;
  double c = 0.0;
  PositivityCertificate certificate;
};

/// Solves tr_omega(sqrt(-1) d dbar f) = tr_omega R0 - c and returns the
/// normalized weight phi - f (h = e^f h0) as the certificate's witness.
/// Succeeds for c <= 0 too; the verdict is then false.
inline Normalization normalize_scalar(const LineBundleMetric& bundle, const MetricField& omega,
                                      const Tolerances& tol = {}) {
  require_same_geometry(bundle.geometry(), omega.geometry());
  require_constant_metric(omega);

  const double c = target_constant(bundle, omega);
  const ScalarField s0 = scalar_curvature(bundle, omega);
  ScalarField rhs = s0;
  rhs += -c;

  const double rhs_scale = s0.max_abs() + std::abs(c);
  const double rhs_mean = rhs.mean();
  if (std::abs(rhs_mean) > tol.mean_rel * rhs_scale) {
    throw Error(Errc::mean_not_zero, "normalization right-hand side is not mean-zero");
  }
  rhs += -rhs_mean;

  double poisson_residual = 0.0;
  ScalarField f = poisson_solve(rhs, omega, tol.solver_residual, &poisson_residual);

  ScalarField normalized_weight = bundle.phi() - f;
  const ScalarField s = scalar_curvature(bundle.with_weight(normalized_weight), omega);
  const double spread = s.max() - s.min();
  if (spread > tol.constancy * (1.0 + std::abs(c))) {
    throw Error(Errc::invariant_violation, "normalized scalar curvature is not constant");
  }

  double class_scale = 0.0;
  for (double mu : pencil_eigenvalues(bundle.r_const(), omega.at(0))) class_scale += std::abs(mu);

  Normalization out{std::move(f), c, {}};
  PositivityCertificate& cert = out.certificate;
  cert.margin = s.min();
  cert.threshold = tol.positivity_rel * (class_scale + s0.max_abs());
  cert.verdict = c > cert.threshold && cert.margin > cert.threshold;
  cert.reason = cert.verdict ? "ScalarCurvaturePositive" : "ScalarCurvatureNotPositive";
  cert.witness_metric = omega;
  cert.witness_weight = std::move(normalized_weight);
  cert.residuals["poisson_residual"] = poisson_residual;
  cert.residuals["rhs_mean"] = rhs_scale > 0.0 ? std::abs(rhs_mean) / rhs_scale : 0.0;
  cert.residuals["scalar_spread"] = spread / (1.0 + std::abs(c));
  cert.residuals["constant_vs_target"] = std::abs(s.mean() - c) / (c != 0.0 ? std::abs(c) : 1.0);
  cert.residuals["target_constant"] = c;
  return out;
}

/// Constant metric Omega = U diag(1/w) U* with r_const = U diag(mu) U*, w_j = 1
/// on positive directions and a small weight elsewhere, chosen so that
/// tr_Omega r_const = (1 - delta) * (sum of positive mu). Empty when r_const
/// has no positive eigenvalue.
inline std::optional<Matrix> eigen_aligned_metric(const Matrix& r_const, double delta = 1e-3) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(r_const);
  const RealVector& mu = eig.eigenvalues();
  const double norm = mu.cwiseAbs().maxCoeff();
  const double cut = kClassSignTolerance * norm;
  double positive = 0.0, non_positive = 0.0;
  for (double m : mu) {
    if (m > cut) positive += m;
    else non_positive += std::abs(m);
  }
  if (!(positive > 0.0)) return std::nullopt;

  const double small = non_positive > 0.0 ? std::min(1.0, delta * positive / non_positive) : delta;
  RealVector inverse_weight(mu.size());
  for (Eigen::Index j = 0; j < mu.size(); ++j) inverse_weight(j) = mu(j) > cut ? 1.0 : 1.0 / small;
  const Matrix& u = eig.eigenvectors();
  Matrix omega = u * inverse_weight.cast<Complex>().asDiagonal() * u.adjoint();
  return Matrix(0.5 * (omega + omega.adjoint()));
}

/// (n-1)-positivity certificate: positive scalar curvature for some (h, omega).
inline PositivityCertificate certify_n_minus_1_positive(const LineBundleMetric& bundle, const Tolerances& tol = {}) {
  const auto aligned = eigen_aligned_metric(bundle.r_const(), tol.aligned_delta);
  if (!aligned) {
    PositivityCertificate cert;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(bundle.r_const(), Eigen::EigenvaluesOnly);
    cert.margin = eig.eigenvalues().maxCoeff();
    cert.threshold = kClassSignTolerance * eig.eigenvalues().cwiseAbs().maxCoeff();
    cert.verdict = false;
    cert.reason = "DualPseudoEffective";
    return cert;
  }
  return normalize_scalar(bundle, MetricField::constant(bundle.geometry(), *aligned), tol).certificate;
}

}  // namespace qpos
