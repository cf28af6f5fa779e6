#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qpos/detail/parallel.hpp"
#include "qpos/detail/summation.hpp"
#include "qpos/error.hpp"
#include "qpos/geometry.hpp"

namespace qpos {

using Complex = std::complex<double>;

// Per-point n x n matrices; fixed maximum size keeps them off the heap.
using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxComplexDim,
                             kMaxComplexDim>;
using RealVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxComplexDim, 1>;

inline double hermitian_defect(const Matrix& a) {
  const double scale = a.norm();
  const double defect = (a - a.adjoint()).norm();
  return scale > 0.0 ? defect / scale : defect;
}

inline bool is_hermitian(const Matrix& a, double rel_tol = 1e-12) {
  return a.rows() == a.cols() && hermitian_defect(a) <= rel_tol;
}

inline bool is_positive_definite(const Matrix& a) {
  if (!is_hermitian(a)) return false;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  const RealVector d = llt.matrixL().toDenseMatrix().diagonal().real();
  return (d.array() > 0.0).all();
}

class ScalarField {
 public:
  explicit ScalarField(TorusGeometry geometry, double fill = 0.0)
      : geometry_(std::move(geometry)), values_(geometry_.point_count(), fill) {}

  ScalarField(TorusGeometry geometry, std::vector<double> values)
      : geometry_(std::move(geometry)), values_(std::move(values)) {
    if (values_.size() != geometry_.point_count()) {
      throw Error(Errc::geometry_mismatch, "value count does not match the grid");
    }
  }

  // f receives the real coordinates of each grid point.
  template <class F>
  static ScalarField sample(const TorusGeometry& geometry, F&& f) {
    ScalarField out(geometry);
    detail::parallel_for(geometry.point_count(), [&](std::size_t p) {
      double coords[2 * kMaxComplexDim];
      geometry.coordinates(p, std::span<double>(coords, static_cast<std::size_t>(geometry.real_dim())));
      out.values_[p] = f(std::span<const double>(coords, static_cast<std::size_t>(geometry.real_dim())));
    });
    return out;
  }

  const TorusGeometry& geometry() const noexcept { return geometry_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t p) const { return values_[p]; }
  double& operator[](std::size_t p) { return values_[p]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  void require_finite(const char* what = "scalar field") const {
    if (!all_finite()) throw Error(Errc::non_finite, std::string(what) + " has non-finite values");
  }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double mean() const { return detail::compensated_sum(values_) / static_cast<double>(values_.size()); }

  ScalarField& operator+=(const ScalarField& other) {
    require_same_geometry(geometry_, other.geometry_);
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] += other.values_[p];
    return *this;
  }

  ScalarField& operator-=(const ScalarField& other) {
    require_same_geometry(geometry_, other.geometry_);
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] -= other.values_[p];
    return *this;
  }

  ScalarField& operator+=(double shift) {
    for (double& v : values_) v += shift;
    return *this;
  }

  ScalarField& operator*=(double scale) {
    for (double& v : values_) v *= scale;
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator-(ScalarField a) { return a *= -1.0; }

 private:
  TorusGeometry geometry_;
  std::vector<double> values_;
};

/// Field of n x n Hermitian matrices, column-major per point.
class HermitianMatrixField {
 public:
  explicit HermitianMatrixField(TorusGeometry geometry)
      : geometry_(std::move(geometry)),
        dim_(geometry_.complex_dim()),
        data_(geometry_.point_count() * static_cast<std::size_t>(dim_ * dim_)) {}

  static HermitianMatrixField constant(const TorusGeometry& geometry, const Matrix& value) {
    if (value.rows() != geometry.complex_dim() || value.cols() != geometry.complex_dim()) {
      throw Error(Errc::invalid_argument, "matrix size does not match the complex dimension");
    }
    if (!is_hermitian(value)) throw Error(Errc::invalid_argument, "matrix is not Hermitian");
    HermitianMatrixField out(geometry);
    for (std::size_t p = 0; p < out.size(); ++p) out.set(p, value);
    return out;
  }

  const TorusGeometry& geometry() const noexcept { return geometry_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return geometry_.point_count(); }

  Matrix at(std::size_t p) const {
    return Eigen::Map<const Eigen::MatrixXcd>(block(p), dim_, dim_);
  }

  void set(std::size_t p, const Matrix& m) { Eigen::Map<Eigen::MatrixXcd>(block(p), dim_, dim_) = m; }

  Complex entry(std::size_t p, int j, int k) const { return block(p)[k * dim_ + j]; }
  Complex& entry(std::size_t p, int j, int k) { return block(p)[k * dim_ + j]; }

  std::span<const Complex> raw() const noexcept { return data_; }

  double max_hermitian_defect() const {
    double worst = 0.0;
    for (std::size_t p = 0; p < size(); ++p) worst = std::max(worst, hermitian_defect(at(p)));
    return worst;
  }

  bool is_constant(double rel_tol = 1e-14) const {
    const Matrix first = at(0);
    const double scale = std::max(first.norm(), 1e-300);
    for (std::size_t p = 1; p < size(); ++p) {
      if ((at(p) - first).norm() > rel_tol * scale) return false;
    }
    return true;
  }

 private:
  const Complex* block(std::size_t p) const { return data_.data() + p * static_cast<std::size_t>(dim_ * dim_); }
  Complex* block(std::size_t p) { return data_.data() + p * static_cast<std::size_t>(dim_ * dim_); }

  TorusGeometry geometry_;
  int dim_;
  std::vector<Complex> data_;
};

/// Hermitian metric: positive definite at every grid point.
class MetricField {
 public:
  explicit MetricField(HermitianMatrixField field) : field_(std::move(field)) {
    for (std::size_t p = 0; p < field_.size(); ++p) {
      if (!is_positive_definite(field_.at(p))) {
        throw Error(Errc::not_positive_definite, "metric is not positive definite at grid point " +
                                                     std::to_string(p));
      }
    }
    constant_ = field_.is_constant();
  }

  static MetricField constant(const TorusGeometry& geometry, const Matrix& value) {
    return MetricField(HermitianMatrixField::constant(geometry, value));
  }

  static MetricField identity(const TorusGeometry& geometry) {
    const int n = geometry.complex_dim();
    return constant(geometry, Matrix::Identity(n, n));
  }

  const TorusGeometry& geometry() const noexcept { return field_.geometry(); }
  const HermitianMatrixField& field() const noexcept { return field_; }
  int dim() const noexcept { return field_.dim(); }
  std::size_t size() const noexcept { return field_.size(); }
  Matrix at(std::size_t p) const { return field_.at(p); }
  bool is_constant() const noexcept { return constant_; }

  // det(Omega) at every point: the density of omega^n / n! against Lebesgue measure.
  ScalarField volume_density() const {
    ScalarField out(geometry());
    for (std::size_t p = 0; p < size(); ++p) out[p] = at(p).determinant().real();
    return out;
  }

  MetricField conformal(const ScalarField& u) const {
    require_same_geometry(geometry(), u.geometry());
    HermitianMatrixField scaled(geometry());
    for (std::size_t p = 0; p < size(); ++p) scaled.set(p, std::exp(u[p]) * at(p));
    return MetricField(std::move(scaled));
  }

 private:
  HermitianMatrixField field_;
  bool constant_ = true;
};

}  // namespace qpos
