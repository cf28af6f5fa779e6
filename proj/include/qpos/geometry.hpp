#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qpos/error.hpp"

namespace qpos {

/// Largest complex dimension supported. Per-point matrices are stack allocated
/// up to this size.
inline constexpr int kMaxComplexDim = 4;

/// Flat torus C^n / (periods * Z^2n) sampled on a uniform grid.
///
/// Real axes pair up as z_j = x_j + i y_j: axis 2(j-1) carries x_j and axis
/// 2(j-1)+1 carries y_j. Grid points are stored row-major, axis 0 slowest.
class TorusGeometry {
 public:
  TorusGeometry(int complex_dim, std::vector<int> grid_shape, std::vector<double> periods = {})
      : complex_dim_(complex_dim), grid_shape_(std::move(grid_shape)), periods_(std::move(periods)) {
    if (complex_dim_ < 1 || complex_dim_ > kMaxComplexDim) {
      throw Error(Errc::unsupported_dimension,
                  "complex dimension must lie in [1, " + std::to_string(kMaxComplexDim) + "]");
    }
    const auto axes = static_cast<std::size_t>(real_dim());
    if (grid_shape_.size() != axes) {
      throw Error(Errc::invalid_argument, "grid shape needs one entry per real axis");
    }
    if (periods_.empty()) periods_.assign(axes, 2.0 * std::numbers::pi);
    if (periods_.size() != axes) {
      throw Error(Errc::invalid_argument, "periods need one entry per real axis");
    }
    for (std::size_t a = 0; a < axes; ++a) {
      if (grid_shape_[a] < 4 || grid_shape_[a] % 2 != 0) {
        throw Error(Errc::invalid_argument, "grid sizes must be even and at least 4");
      }
      if (!(periods_[a] > 0.0) || !std::isfinite(periods_[a])) {
        throw Error(Errc::invalid_argument, "periods must be positive and finite");
      }
    }
    strides_.assign(axes, 1);
    for (std::size_t a = axes - 1; a > 0; --a) {
      strides_[a - 1] = strides_[a] * static_cast<std::size_t>(grid_shape_[a]);
    }
    point_count_ = strides_[0] * static_cast<std::size_t>(grid_shape_[0]);
  }

  static TorusGeometry cubic(int complex_dim, int samples, double period = 2.0 * std::numbers::pi) {
    const auto axes = static_cast<std::size_t>(2 * complex_dim);
    return TorusGeometry(complex_dim, std::vector<int>(axes, samples), std::vector<double>(axes, period));
  }

  int complex_dim() const noexcept { return complex_dim_; }
  int real_dim() const noexcept { return 2 * complex_dim_; }
  const std::vector<int>& grid_shape() const noexcept { return grid_shape_; }
  const std::vector<double>& periods() const noexcept { return periods_; }
  std::size_t point_count() const noexcept { return point_count_; }
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  double spacing(int axis) const {
    const auto a = static_cast<std::size_t>(axis);
    return periods_[a] / grid_shape_[a];
  }

  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < real_dim(); ++a) v *= spacing(a);
    return v;
  }

  double volume() const {
    double v = 1.0;
    for (double p : periods_) v *= p;
    return v;
  }

  int index_along(std::size_t point, int axis) const {
    const auto a = static_cast<std::size_t>(axis);
    return static_cast<int>((point / strides_[a]) % static_cast<std::size_t>(grid_shape_[a]));
  }

  double coordinate(std::size_t point, int axis) const { return index_along(point, axis) * spacing(axis); }

  void coordinates(std::size_t point, std::span<double> out) const {
    for (int a = 0; a < real_dim(); ++a) out[static_cast<std::size_t>(a)] = coordinate(point, a);
  }

  static std::string axis_name(int axis) {
    return std::string(axis % 2 == 0 ? "x" : "y") + std::to_string(axis / 2 + 1);
  }

  bool operator==(const TorusGeometry&) const = default;

 private:
  int complex_dim_;
  std::vector<int> grid_shape_;
  std::vector<double> periods_;
  std::vector<std::size_t> strides_;
  std::size_t point_count_ = 0;
};

inline void require_same_geometry(const TorusGeometry& a, const TorusGeometry& b) {
  if (!(a == b)) throw Error(Errc::geometry_mismatch, "fields live on different grids");
}

}  // namespace qpos
