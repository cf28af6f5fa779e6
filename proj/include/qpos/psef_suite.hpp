#pragma once

// Pseudo-effectivity decisions on torus instances and the four-way
// equivalence between
//   (1) the dual class is not pseudo-effective,
//   (2) some Gauduchon metric pairs positively with the class,
//   (3) some (h, omega) has positive scalar curvature,
//   (4) the bundle is (n-1)-positive.

#include <Eigen/Eigenvalues>

#include <array>
#include <optional>
#include <string>

#include "qpos/conformal_normalizer.hpp"
#include "qpos/curvature.hpp"
#include "qpos/q_positivity.hpp"

namespace qpos {

/// Exact pseudo-effectivity on a flat torus. If r + sqrt(-1) d dbar phi >= 0
/// as a current, averaging over translations (which fix constant forms) gives
/// r >= 0; conversely a semidefinite r is carried by phi = 0. So the class is
/// pseudo-effective iff its constant representative is positive semidefinite.
inline bool torus_psef_oracle(const LineBundleMetric& bundle) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(bundle.r_const(), Eigen::EigenvaluesOnly);
  const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  return eig.eigenvalues().minCoeff() >= -kClassSignTolerance * norm;
}

struct DualPsefTest {
  bool not_psef = false;
  std::optional<Matrix> witness;  // constant Gauduchon metric with positive pairing
  double degree = 0.0;
  double threshold = 0.0;
};

/// Searches the eigen-aligned family of constant metrics for a positive degree pairing.
inline DualPsefTest dual_not_psef_test(const LineBundleMetric& bundle, const Tolerances& tol = {}) {
  DualPsefTest out;
  const auto aligned = eigen_aligned_metric(bundle.r_const(), tol.aligned_delta);
  if (!aligned) return out;

  const MetricField omega = MetricField::constant(bundle.geometry(), *aligned);
  out.degree = degree_integral(bundle, omega);
  double class_scale = 0.0;
  for (double mu : pencil_eigenvalues(bundle.r_const(), *aligned)) class_scale += std::abs(mu);
  // Compare on the scale of the averaged scalar curvature n * deg / vol.
  const double c = bundle.dim() * out.degree / metric_volume(omega);
  out.threshold = tol.positivity_rel * class_scale;
  out.not_psef = c > out.threshold;
  if (out.not_psef) out.witness = *aligned;
  return out;
}

struct SuiteReport {
  std::array<bool, 4> items{};
  std::array<double, 4> margins{};
  std::optional<Matrix> witness_metric;
  bool pass = false;
  bool positive = false;
  std::string detail;
};

inline SuiteReport equivalence_suite(const LineBundleMetric& bundle, const Tolerances& tol = {}) {
  SuiteReport report;
  const int n = bundle.dim();

  const LineBundleMetric dual = bundle.dual();
  report.items[0] = !torus_psef_oracle(dual);
  {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(bundle.r_const(), Eigen::EigenvaluesOnly);
    report.margins[0] = eig.eigenvalues().maxCoeff();
  }

  const DualPsefTest pairing = dual_not_psef_test(bundle, tol);
  report.items[1] = pairing.not_psef;
  report.margins[1] = pairing.degree;

  const PositivityCertificate scalar = certify_n_minus_1_positive(bundle, tol);
  report.items[2] = scalar.verdict;
  report.margins[2] = scalar.margin;

  // (4) on the witness pair when one exists, otherwise on the given weight and
  // the flat metric; the eigenvalue threshold is scaled to the grid.
  PositivityCertificate qpos_cert;
  if (scalar.witness_metric && scalar.witness_weight) {
    qpos_cert = check_q_positive(bundle.with_weight(*scalar.witness_weight), *scalar.witness_metric, n - 1);
    report.witness_metric = scalar.witness_metric->at(0);
  } else {
    qpos_cert = check_q_positive(bundle, MetricField::identity(bundle.geometry()), n - 1);
  }
  report.items[3] = qpos_cert.verdict;
  report.margins[3] = qpos_cert.margin;

  const bool all_true = report.items[0] && report.items[1] && report.items[2] && report.items[3];
  const bool all_false = !report.items[0] && !report.items[1] && !report.items[2] && !report.items[3];
  report.pass = all_true || all_false;
  report.positive = all_true;
  report.detail = report.pass ? (all_true ? "all true" : "all false") : "items disagree";
  return report;
}

}  // namespace qpos
