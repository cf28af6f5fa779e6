#pragma once

// Minimal exterior algebra over the real cotangent basis dx_1, dy_1, ..., dx_n, dy_n.
// Used as an independent route to top-degree pairings of (1,1)-forms.

#include <bit>
#include <complex>
#include <cstdint>
#include <vector>

#include "qpos/fields.hpp"

namespace qpos::exterior {

/// Form with one complex coefficient per basis monomial, indexed by the
/// bitmask of the real axes it contains (bit a <-> axis a, increasing order).
class Form {
 public:
  explicit Form(int real_dim) : real_dim_(real_dim), coeffs_(std::size_t{1} << real_dim, Complex{}) {}

  static Form one_form(int real_dim, int axis, Complex c) {
    Form f(real_dim);
    f.coeffs_[std::size_t{1} << axis] = c;
    return f;
  }

  static Form unit(int real_dim) {
    Form f(real_dim);
    f.coeffs_[0] = 1.0;
    return f;
  }

  int real_dim() const noexcept { return real_dim_; }
  Complex coefficient(std::uint32_t mask) const { return coeffs_[mask]; }

  Complex top_coefficient() const { return coeffs_[(std::size_t{1} << real_dim_) - 1]; }

  Form& operator+=(const Form& other) {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
    return *this;
  }

  Form& operator*=(Complex s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }

  friend Form wedge(const Form& a, const Form& b) {
    Form out(a.real_dim_);
    for (std::uint32_t i = 0; i < a.coeffs_.size(); ++i) {
      if (a.coeffs_[i] == Complex{}) continue;
      for (std::uint32_t j = 0; j < b.coeffs_.size(); ++j) {
        if ((i & j) != 0 || b.coeffs_[j] == Complex{}) continue;
        out.coeffs_[i | j] += static_cast<double>(merge_sign(i, j)) * a.coeffs_[i] * b.coeffs_[j];
      }
    }
    return out;
  }

 private:
  // Sign of the permutation sorting (basis of i) followed by (basis of j):
  // one transposition for every pair with an index of j below an index of i.
  static int merge_sign(std::uint32_t i, std::uint32_t j) {
    int swaps = 0;
    for (std::uint32_t rest = j; rest != 0; rest &= rest - 1) {
      const std::uint32_t lowest = rest & (~rest + 1);
      swaps += std::popcount(i & ~((lowest << 1) - 1));
    }
    return swaps % 2 == 0 ? 1 : -1;
  }

  int real_dim_;
  std::vector<Complex> coeffs_;
};

inline Form dz(int real_dim, int j) {
  Form f = Form::one_form(real_dim, 2 * j, 1.0);
  f += Form::one_form(real_dim, 2 * j + 1, Complex(0.0, 1.0));
  return f;
}

inline Form dzbar(int real_dim, int j) {
  Form f = Form::one_form(real_dim, 2 * j, 1.0);
  f += Form::one_form(real_dim, 2 * j + 1, Complex(0.0, -1.0));
  return f;
}

/// (sqrt(-1)/2) sum_{j,k} A_jk dz_j ^ dzbar_k. With this normalization the
/// identity matrix gives the flat Kaehler form sum_j dx_j ^ dy_j.
inline Form hermitian_to_form(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  const int real_dim = 2 * n;
  Form out(real_dim);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (a(j, k) == Complex{}) continue;
      Form term = wedge(dz(real_dim, j), dzbar(real_dim, k));
      term *= Complex(0.0, 0.5) * a(j, k);
      out += term;
    }
  }
  return out;
}

inline Form power(const Form& f, int exponent) {
  Form out = Form::unit(f.real_dim());
  for (int i = 0; i < exponent; ++i) out = wedge(out, f);
  return out;
}

}  // namespace qpos::exterior
