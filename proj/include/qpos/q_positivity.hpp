#pragma once

// Pointwise q-positivity, uniform q-positivity and the base-metric transform
// that turns the former into the latter.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qpos/curvature.hpp"
#include "qpos/detail/parallel.hpp"

namespace qpos {

/// Pencil eigenvalues per grid point, sorted descending.
class EigenvalueField {
 public:
  EigenvalueField(TorusGeometry geometry, int dim)
      : geometry_(std::move(geometry)), dim_(dim), values_(geometry_.point_count() * static_cast<std::size_t>(dim)) {}

  const TorusGeometry& geometry() const noexcept { return geometry_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return geometry_.point_count(); }

  std::span<const double> at(std::size_t p) const {
    return {values_.data() + p * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<double> at(std::size_t p) {
    return {values_.data() + p * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  // i is 1-based: value(p, 1) is the largest eigenvalue.
  double value(std::size_t p, int i) const { return at(p)[static_cast<std::size_t>(i - 1)]; }

  double min_of(int i) const {
    double m = value(0, i);
    for (std::size_t p = 1; p < size(); ++p) m = std::min(m, value(p, i));
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_sorted_descending() const {
    for (std::size_t p = 0; p < size(); ++p) {
      auto v = at(p);
      if (!std::is_sorted(v.begin(), v.end(), std::greater<>())) return false;
    }
    return true;
  }

 private:
  TorusGeometry geometry_;
  int dim_;
  std::vector<double> values_;
};

struct PencilDecomposition {
  RealVector values;  // descending
  Matrix vectors;     // columns v_i with R v_i = values_i Omega v_i and V* Omega V = I
};

/// Eigen-decomposition of the Hermitian pencil (R, Omega) by Cholesky reduction.
inline PencilDecomposition pencil_decompose(const Matrix& r, const Matrix& omega, bool with_vectors = true) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(
      r, omega, (with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly) | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::not_positive_definite, "pencil reduction failed: metric not positive definite");
  }
  const int n = static_cast<int>(r.rows());
  PencilDecomposition out;
  out.values = solver.eigenvalues().reverse();
  if (with_vectors) out.vectors = solver.eigenvectors().rowwise().reverse();
  (void)n;
  return out;
}

inline RealVector pencil_eigenvalues(const Matrix& r, const Matrix& omega) {
  return pencil_decompose(r, omega, false).values;
}

inline EigenvalueField generalized_eigenvalues(const HermitianMatrixField& r, const MetricField& omega) {
  require_same_geometry(r.geometry(), omega.geometry());
  EigenvalueField out(r.geometry(), r.dim());
  detail::parallel_for(r.size(), [&](std::size_t p) {
    const RealVector values = pencil_eigenvalues(r.at(p), omega.at(p));
    auto slot = out.at(p);
    for (int i = 0; i < r.dim(); ++i) slot[static_cast<std::size_t>(i)] = values(i);
  });
  return out;
}

/// Default positivity threshold: eps_rel times the largest |eigenvalue| on the grid.
inline double positivity_threshold(const EigenvalueField& ev, double eps_rel = 1e-9) {
  return eps_rel * ev.max_abs();
}

inline void require_q_in_range(int q, int n) {
  if (q < 0 || q > n - 1) {
    throw Error(Errc::q_out_of_range, "q = " + std::to_string(q) + " outside [0, " + std::to_string(n - 1) + "]");
  }
}

/// min over the grid of lambda_{n-q}.
inline double q_margin(const EigenvalueField& ev, int q) {
  require_q_in_range(q, ev.dim());
  return ev.min_of(ev.dim() - q);
}

/// Sum of the q+1 smallest eigenvalues at one point, the minimal sum over all
/// (q+1)-subsets counted with multiplicity.
inline double smallest_sum(std::span<const double> descending, int q) {
  double s = 0.0;
  const auto n = descending.size();
  for (std::size_t i = n - static_cast<std::size_t>(q) - 1; i < n; ++i) s += descending[i];
  return s;
}

inline double uniform_q_margin(const EigenvalueField& ev, int q) {
  require_q_in_range(q, ev.dim());
  double m = smallest_sum(ev.at(0), q);
  for (std::size_t p = 1; p < ev.size(); ++p) m = std::min(m, smallest_sum(ev.at(p), q));
  return m;
}

/// q-positive: at least n-q positive eigenvalues everywhere, read as
/// min_grid lambda_{n-q} > eps.
inline PositivityCertificate check_q_positive(const LineBundleMetric& bundle, const MetricField& omega, int q,
                                              double eps) {
  require_q_in_range(q, bundle.dim());
  if (!(eps > 0.0)) throw Error(Errc::invalid_argument, "eps must be positive");
  const EigenvalueField ev = generalized_eigenvalues(chern_curvature(bundle), omega);
  PositivityCertificate cert;
  cert.margin = q_margin(ev, q);
  cert.threshold = eps;
  cert.verdict = cert.margin > eps;
  cert.witness_metric = omega;
  cert.reason = cert.verdict ? "QPositive" : "EigenvalueNotPositive";
  return cert;
}

/// Same check with the threshold scaled to the eigenvalue magnitudes on the grid.
inline PositivityCertificate check_q_positive(const LineBundleMetric& bundle, const MetricField& omega, int q) {
  require_q_in_range(q, bundle.dim());
  const EigenvalueField ev = generalized_eigenvalues(chern_curvature(bundle), omega);
  PositivityCertificate cert;
  cert.margin = q_margin(ev, q);
  cert.threshold = positivity_threshold(ev);
  cert.verdict = cert.margin > cert.threshold;
  cert.witness_metric = omega;
  cert.reason = cert.verdict ? "QPositive" : "EigenvalueNotPositive";
  return cert;
}

/// Uniformly q-positive: every sum of q+1 eigenvalues is > eps everywhere.
inline PositivityCertificate check_uniform_q_positive(const LineBundleMetric& bundle, const MetricField& omega,
                                                      int q, double eps) {
  require_q_in_range(q, bundle.dim());
  if (!(eps > 0.0)) throw Error(Errc::invalid_argument, "eps must be positive");
  const EigenvalueField ev = generalized_eigenvalues(chern_curvature(bundle), omega);
  PositivityCertificate cert;
  cert.margin = uniform_q_margin(ev, q);
  cert.threshold = eps;
  cert.verdict = cert.margin > eps;
  cert.witness_metric = omega;
  cert.reason = cert.verdict ? "UniformlyQPositive" : "EigenvalueSumNotPositive";
  return cert;
}

inline PositivityCertificate check_uniform_q_positive(const LineBundleMetric& bundle, const MetricField& omega,
                                                      int q) {
  require_q_in_range(q, bundle.dim());
  const EigenvalueField ev = generalized_eigenvalues(chern_curvature(bundle), omega);
  PositivityCertificate cert;
  cert.margin = uniform_q_margin(ev, q);
  cert.threshold = positivity_threshold(ev);
  cert.verdict = cert.margin > cert.threshold;
  cert.witness_metric = omega;
  cert.reason = cert.verdict ? "UniformlyQPositive" : "EigenvalueSumNotPositive";
  return cert;
}

/// lambda0 = log(n+1) / min_grid lambda_{n-q}.
inline double lambda0(const EigenvalueField& ev, int q, double eps_pos) {
  const double inf = q_margin(ev, q);
  if (!(inf > eps_pos)) {
    throw Error(Errc::not_q_positive, "min lambda_{n-q} = " + std::to_string(inf) + " is not positive");
  }
  return std::log(static_cast<double>(ev.dim() + 1)) / inf;
}

inline double lambda0(const EigenvalueField& ev, int q) { return lambda0(ev, q, positivity_threshold(ev)); }

/// psi(x) = (e^x - 1) / x with psi(0) = 1; positive for every real x.
inline double psi(double x) { return x == 0.0 ? 1.0 : std::expm1(x) / x; }

/// Eigenvalue of R against the transformed metric: (e^{lambda0 * lambda} - 1) / lambda0.
inline double transformed_eigenvalue(double lambda, double lambda0_value) {
  return std::expm1(lambda0_value * lambda) / lambda0_value;
}

struct Uniformization {
  MetricField metric;
  double lambda0;
  EigenvalueField base_eigenvalues;
};

/// Builds the metric omega~ with omega~^{-1} = omega^{-1} psi(lambda0 R omega^{-1}).
///
/// With R V = Omega V diag(lambda) and V* Omega V = I, the matrix function is
/// omega~^{-1} = V diag(psi(lambda0 lambda)) V*, so
/// omega~ = Omega V diag(1 / psi(lambda0 lambda)) V* Omega.
inline Uniformization uniformize(const LineBundleMetric& bundle, const MetricField& omega, int q,
                                 double eps_rel = 1e-9) {
  require_same_geometry(bundle.geometry(), omega.geometry());
  require_q_in_range(q, bundle.dim());
  const HermitianMatrixField curvature = chern_curvature(bundle);
  const int n = bundle.dim();
  const std::size_t points = curvature.size();

  std::vector<PencilDecomposition> pencils(points);
  EigenvalueField ev(bundle.geometry(), n);
  detail::parallel_for(points, [&](std::size_t p) {
    pencils[p] = pencil_decompose(curvature.at(p), omega.at(p));
    auto slot = ev.at(p);
    for (int i = 0; i < n; ++i) slot[static_cast<std::size_t>(i)] = pencils[p].values(i);
  });
  const double l0 = lambda0(ev, q, positivity_threshold(ev, eps_rel));

  HermitianMatrixField transformed(bundle.geometry());
  detail::parallel_for(points, [&](std::size_t p) {
    const Matrix base = omega.at(p);
    const PencilDecomposition& pd = pencils[p];
    RealVector inverse_psi(n);
    for (int i = 0; i < n; ++i) inverse_psi(i) = 1.0 / psi(l0 * pd.values(i));
    const Matrix w = base * pd.vectors;
    Matrix m = w * inverse_psi.cast<Complex>().asDiagonal() * w.adjoint();
    m = 0.5 * (m + m.adjoint()).eval();
    transformed.set(p, m);
  });
  for (std::size_t p = 0; p < points; ++p) {
    if (!transformed.at(p).allFinite()) {
      throw Error(Errc::invariant_violation, "transformed metric overflowed; eigenvalue spread too large");
    }
  }
  return Uniformization{MetricField(std::move(transformed)), l0, std::move(ev)};
}

inline MetricField uniformize_metric(const LineBundleMetric& bundle, const MetricField& omega, int q,
                                     double eps_rel = 1e-9) {
  return uniformize(bundle, omega, q, eps_rel).metric;
}

}  // namespace qpos
