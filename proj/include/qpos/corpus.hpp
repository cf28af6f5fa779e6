#pragma once

// Seeded random torus instances: constant classes of mixed signature plus
// band-limited weights drawn from the expression grammar.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "qpos/curvature.hpp"
#include "qpos/expression.hpp"

namespace qpos {

class InstanceGenerator {
 public:
  explicit InstanceGenerator(std::uint64_t seed) : rng_(seed) {}

  // Independent stream for instance `index` of a corpus seeded with `seed`.
  static InstanceGenerator for_instance(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 engine(seq);
    return InstanceGenerator(engine());
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

  Matrix random_unitary(int n) {
    Matrix g(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) g(i, j) = Complex(normal(), normal());
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    // Fix the phases so Q is Haar distributed.
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
      const double mag = std::abs(r(j, j));
      if (mag > 0.0) q.col(j) *= r(j, j) / mag;
    }
    return q;
  }

  Matrix hermitian_with_spectrum(const std::vector<double>& spectrum) {
    const int n = static_cast<int>(spectrum.size());
    const Matrix u = random_unitary(n);
    RealVector d(n);
    for (int i = 0; i < n; ++i) d(i) = spectrum[static_cast<std::size_t>(i)];
    Matrix m = u * d.cast<Complex>().asDiagonal() * u.adjoint();
    return 0.5 * (m + m.adjoint());
  }

  Matrix random_positive_definite(int n, double lo = 0.5, double hi = 2.0) {
    std::vector<double> spectrum(static_cast<std::size_t>(n));
    for (double& s : spectrum) s = uniform(lo, hi);
    return hermitian_with_spectrum(spectrum);
  }

  // Random weight whose complex Hessian has entries of size about
  // `hessian_scale` (periods 2*pi). Wavenumbers stay at most max_wave.
  Expression random_weight(int n, int max_wave, double hessian_scale, int max_terms = 3) {
    std::vector<ExpressionTerm> terms;
    const int count = integer(1, max_terms);
    for (int t = 0; t < count; ++t) {
      ExpressionTerm term;
      const int factors = integer(1, 2);
      double wave_norm2 = 0.0;
      for (int f = 0; f < factors; ++f) {
        TrigFactor factor;
        factor.is_sin = coin();
        const int axis = integer(0, 2 * n - 1);
        const int m = integer(1, max_wave);
        factor.wave.emplace_back(axis, m);
        if (coin(0.3)) {
          const int other = integer(0, 2 * n - 1);
          if (other != axis) {
            const int m2 = integer(-max_wave, max_wave);
            if (m2 != 0) factor.wave.emplace_back(other, m2);
          }
        }
        for (const auto& [a, k] : factor.wave) wave_norm2 += static_cast<double>(k * k);
        term.factors.push_back(std::move(factor));
      }
      // Round to a short decimal so the text form parses back to the same value.
      const double raw = uniform(-1.0, 1.0) * 4.0 * hessian_scale / (wave_norm2 * count);
      term.coefficient = std::round(raw * 1e6) / 1e6;
      if (term.coefficient != 0.0) terms.push_back(std::move(term));
    }
    return Expression::parse(Expression(std::move(terms)).str());
  }

 private:
  std::mt19937_64 rng_;
};

/// One corpus entry; the weight is kept as text so reports can reproduce it.
struct CorpusInstance {
  std::size_t index = 0;
  std::string kind;
  Matrix r_const;
  std::string phi_expression;

  LineBundleMetric bundle(const TorusGeometry& geometry) const {
    return LineBundleMetric(r_const, Expression::parse(phi_expression).sample(geometry));
  }
};

struct CorpusOptions {
  int complex_dim = 2;
  int grid = 8;
  std::uint64_t seed = 42;
  std::size_t size = 1000;
  double min_magnitude = 1e-2;
  double max_magnitude = 1e2;
  int max_wave = 2;
};

/// Class signatures: mostly indefinite, plus definite, semidefinite boundary
/// and zero classes. Eigenvalue magnitudes are log-uniform.
inline CorpusInstance make_corpus_instance(const CorpusOptions& options, std::size_t index) {
  auto gen = InstanceGenerator::for_instance(options.seed, index);
  const int n = options.complex_dim;
  CorpusInstance inst;
  inst.index = index;

  const double roll = gen.uniform(0.0, 1.0);
  std::vector<double> spectrum(static_cast<std::size_t>(n));
  auto magnitude = [&] { return gen.log_uniform(options.min_magnitude, options.max_magnitude); };
  if (roll < 0.55) {
    inst.kind = "indefinite";
    for (double& s : spectrum) s = (gen.coin() ? 1.0 : -1.0) * magnitude();
    if (n > 1) {
      spectrum[0] = magnitude();
      spectrum[1] = -magnitude();
    }
  } else if (roll < 0.67) {
    inst.kind = "positive_definite";
    for (double& s : spectrum) s = magnitude();
  } else if (roll < 0.79) {
    inst.kind = "negative_definite";
    for (double& s : spectrum) s = -magnitude();
  } else if (roll < 0.87) {
    inst.kind = "positive_semidefinite";
    for (double& s : spectrum) s = magnitude();
    spectrum[static_cast<std::size_t>(gen.integer(0, n - 1))] = 0.0;
  } else if (roll < 0.95) {
    inst.kind = "negative_semidefinite";
    for (double& s : spectrum) s = -magnitude();
    spectrum[static_cast<std::size_t>(gen.integer(0, n - 1))] = 0.0;
  } else {
    inst.kind = "zero";
    for (double& s : spectrum) s = 0.0;
  }
  inst.r_const = gen.hermitian_with_spectrum(spectrum);
  // Exact zeros must stay exact so the zero class is the zero matrix.
  if (inst.kind == "zero") inst.r_const.setZero();

  double scale = 0.0;
  for (double s : spectrum) scale = std::max(scale, std::abs(s));
  if (scale == 0.0) scale = gen.log_uniform(options.min_magnitude, options.max_magnitude);
  const double hessian_scale = gen.uniform(0.0, 2.0) * scale;
  inst.phi_expression = gen.coin(0.1) ? "0" : gen.random_weight(n, options.max_wave, hessian_scale).str();
  return inst;
}

inline std::vector<CorpusInstance> make_corpus(const CorpusOptions& options) {
  std::vector<CorpusInstance> out;
  out.reserve(options.size);
  for (std::size_t i = 0; i < options.size; ++i) out.push_back(make_corpus_instance(options, i));
  return out;
}

}  // namespace qpos
