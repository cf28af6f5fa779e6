#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <numbers>

#include "qpos/corpus.hpp"
#include "qpos/q_positivity.hpp"
#include "support/oracles.hpp"

using namespace qpos;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Matrix diag(std::initializer_list<double> values) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) m(i, i) = v, ++i;
  return m;
}

Errc error_code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected qpos::Error");
  return Errc::invalid_argument;
}

// Eigenvalues of Omega^{-1} R from a general (non-Hermitian) solver, descending.
std::vector<double> dense_pencil_eigenvalues(const Matrix& r, const Matrix& omega) {
  Eigen::ComplexEigenSolver<Matrix> solver(Matrix(omega.inverse() * r));
  std::vector<double> out;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) out.push_back(solver.eigenvalues()(i).real());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

// Instance with pointwise q-positive curvature: constant part with margin at
// least 1 and a weight whose Hessian stays well below that margin.
LineBundleMetric q_positive_instance(InstanceGenerator& gen, const TorusGeometry& g, int q) {
  const int n = g.complex_dim();
  std::vector<double> spectrum(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) spectrum[static_cast<std::size_t>(i)] = i < n - q ? gen.uniform(1.0, 4.0) : gen.uniform(-4.0, 4.0);
  return LineBundleMetric(gen.hermitian_with_spectrum(spectrum), gen.random_weight(n, 2, 0.1).sample(g));
}

}  // namespace

TEST_CASE("pencil eigenvalues examples", "[pencil]") {
  const RealVector a = pencil_eigenvalues(diag({1.0, -5.0}), diag({1.0, 1.0}));
  CHECK(a(0) == 1.0);
  CHECK(a(1) == -5.0);
  const RealVector b = pencil_eigenvalues(diag({1.0, -5.0}), diag({0.1, 10.0}));
  CHECK_THAT(b(0), WithinRel(10.0, 1e-14));
  CHECK_THAT(b(1), WithinRel(-0.5, 1e-14));
}

TEST_CASE("pencil eigenvalues match characteristic roots", "[pencil][oracle]") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    InstanceGenerator gen(seed);
    const Matrix r = gen.hermitian_with_spectrum({3.0, 0.5, -2.0});
    const Matrix omega = gen.random_positive_definite(3);
    const RealVector values = pencil_eigenvalues(r, omega);
    const auto roots = testing::characteristic_roots(r, omega);
    REQUIRE(roots.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK_THAT(values(i), WithinAbs(roots[static_cast<std::size_t>(i)], 1e-10));

    const PencilDecomposition pd = pencil_decompose(r, omega);
    CHECK((pd.vectors.adjoint() * omega * pd.vectors - Matrix::Identity(3, 3)).norm() <= 1e-12);
    CHECK((r * pd.vectors - omega * pd.vectors * pd.values.cast<Complex>().asDiagonal()).norm() <= 1e-12);
  }
}

TEST_CASE("check_q_positive examples", "[qpositive]") {
  const auto g = TorusGeometry::cubic(2, 8);
  const auto bundle = LineBundleMetric::flat(g, diag({1.0, -5.0}));
  const auto id = MetricField::identity(g);
  const auto cert = check_q_positive(bundle, id, 1);
  CHECK(cert.verdict);
  CHECK(cert.margin == 1.0);
  CHECK(cert.reason == "QPositive");
  CHECK_FALSE(check_q_positive(bundle, id, 0).verdict);
  CHECK(error_code_of([&] { check_q_positive(bundle, id, 2); }) == Errc::q_out_of_range);
  CHECK(error_code_of([&] { check_q_positive(bundle, id, -1); }) == Errc::q_out_of_range);
  CHECK(error_code_of([&] { check_q_positive(bundle, id, 1, 0.0); }) == Errc::invalid_argument);
}

TEST_CASE("check_q_positive follows the weight", "[qpositive]") {
  const auto g = TorusGeometry::cubic(1, 32);
  const auto bundle = LineBundleMetric(diag({1.0}), Expression::parse("2*cos(x1)").sample(g));
  const auto cert = check_q_positive(bundle, MetricField::identity(g), 0);
  CHECK(cert.verdict);
  CHECK_THAT(cert.margin, WithinAbs(0.5, 1e-12));
}

TEST_CASE("eigenvalue field agrees with dense per-point solves", "[qpositive][oracle]") {
  const auto g = TorusGeometry::cubic(2, 8);
  InstanceGenerator gen(5);
  const auto bundle = LineBundleMetric(gen.hermitian_with_spectrum({2.0, -1.0}), gen.random_weight(2, 2, 1.5).sample(g));
  const auto omega = MetricField::constant(g, gen.random_positive_definite(2));
  const auto curvature = chern_curvature(bundle);
  const auto ev = generalized_eigenvalues(curvature, omega);
  CHECK(ev.is_sorted_descending());
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < ev.size(); ++p) {
    const auto dense = dense_pencil_eigenvalues(curvature.at(p), omega.at(p));
    for (int i = 1; i <= 2; ++i) REQUIRE(std::abs(ev.value(p, i) - dense[static_cast<std::size_t>(i - 1)]) <= 1e-11);
    margin = std::min(margin, dense[0]);
  }
  CHECK_THAT(check_q_positive(bundle, omega, 1).margin, WithinAbs(margin, 1e-11));
}

TEST_CASE("uniform q-positivity examples", "[uniform]") {
  const auto g = TorusGeometry::cubic(2, 4);
  const auto id = MetricField::identity(g);
  const auto yes = check_uniform_q_positive(LineBundleMetric::flat(g, diag({3.0, -1.0})), id, 1);
  CHECK(yes.verdict);
  CHECK(yes.margin == 2.0);
  const auto no = check_uniform_q_positive(LineBundleMetric::flat(g, diag({1.0, -5.0})), id, 1);
  CHECK_FALSE(no.verdict);
  CHECK(no.margin == -4.0);
}

TEST_CASE("smallest_sum matches subset enumeration", "[uniform][oracle]") {
  InstanceGenerator gen(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = gen.integer(1, 4);
    std::vector<double> values(static_cast<std::size_t>(n));
    for (double& v : values) v = gen.normal();
    std::sort(values.begin(), values.end(), std::greater<>());
    for (int q = 0; q < n; ++q) {
      CHECK_THAT(smallest_sum(values, q), WithinAbs(testing::brute_force_min_subset_sum(values, q), 1e-14));
    }
  }
}

TEST_CASE("uniform q-positivity implies q-positivity", "[uniform][property]") {
  const auto g = TorusGeometry::cubic(2, 8);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    InstanceGenerator gen(seed);
    const auto bundle = LineBundleMetric(gen.hermitian_with_spectrum({gen.normal() * 3, gen.normal() * 3}),
                                         gen.random_weight(2, 2, 1.0).sample(g));
    const auto omega = MetricField::identity(g);
    for (int q = 0; q < 2; ++q) {
      if (check_uniform_q_positive(bundle, omega, q, 1e-9).verdict) CHECK(check_q_positive(bundle, omega, q, 1e-9).verdict);
    }
  }
}

TEST_CASE("lambda0 examples", "[uniformize]") {
  const auto g = TorusGeometry::cubic(1, 4);
  EigenvalueField two(g, 2);
  for (std::size_t p = 0; p < two.size(); ++p) {
    two.at(p)[0] = std::log(3.0);
    two.at(p)[1] = -7.0;
  }
  CHECK_THAT(lambda0(two, 1), WithinRel(1.0, 1e-15));

  EigenvalueField three(g, 3);
  for (std::size_t p = 0; p < three.size(); ++p) {
    three.at(p)[0] = 2.0;
    three.at(p)[1] = 0.5 + 0.1 * static_cast<double>(p % 2);
    three.at(p)[2] = -1.0;
  }
  CHECK_THAT(lambda0(three, 1), WithinRel(2.0 * std::log(4.0), 1e-15));
  CHECK_THAT(lambda0(three, 1), WithinRel(2.77258872223978, 1e-13));
  CHECK(error_code_of([&] { lambda0(three, 0); }) == Errc::not_q_positive);
}

TEST_CASE("psi is the divided exponential", "[uniformize]") {
  CHECK(psi(0.0) == 1.0);
  CHECK_THAT(psi(1e-12), WithinRel(1.0 + 5e-13, 1e-15));
  CHECK_THAT(psi(2.0), WithinRel((std::exp(2.0) - 1.0) / 2.0, 1e-15));
  CHECK(psi(-50.0) > 0.0);
}

TEST_CASE("uniformize example", "[uniformize]") {
  const auto g = TorusGeometry::cubic(2, 4);
  const double l3 = std::log(3.0);
  const auto bundle = LineBundleMetric::flat(g, diag({l3, -l3}));
  const auto u = uniformize(bundle, MetricField::identity(g), 1);
  CHECK_THAT(u.lambda0, WithinRel(1.0, 1e-15));
  const auto kappa = generalized_eigenvalues(chern_curvature(bundle), u.metric);
  for (std::size_t p = 0; p < kappa.size(); ++p) {
    CHECK_THAT(kappa.value(p, 1), WithinRel(2.0, 1e-13));
    CHECK_THAT(kappa.value(p, 2), WithinRel(-2.0 / 3.0, 1e-13));
  }
  CHECK(check_uniform_q_positive(bundle, u.metric, 1).verdict);
  CHECK(error_code_of([&] { uniformize(bundle, MetricField::identity(g), 0); }) == Errc::not_q_positive);
}

TEST_CASE("uniformized metric matches the truncated series", "[uniformize][oracle]") {
  const auto g = TorusGeometry::cubic(2, 8);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    InstanceGenerator gen(seed);
    const auto bundle = q_positive_instance(gen, g, 1);
    const auto omega = MetricField::constant(g, gen.random_positive_definite(2));
    const auto u = uniformize(bundle, omega, 1);
    const auto curvature = chern_curvature(bundle);
    for (std::size_t p = 0; p < curvature.size(); p += 7) {
      const Matrix series = testing::series_inverse_metric(curvature.at(p), omega.at(p), u.lambda0);
      const Matrix direct = u.metric.at(p).inverse();
      REQUIRE((series - direct).norm() <= 1e-10 * direct.norm());
    }
  }
}

TEST_CASE("uniformize properties", "[uniformize][property]") {
  for (int n : {1, 2, 3}) {
    const auto g = TorusGeometry::cubic(n, n == 1 ? 32 : (n == 2 ? 8 : 4));
    for (int q = 0; q < n; ++q) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        InstanceGenerator gen(seed * 100 + static_cast<std::uint64_t>(10 * n + q));
        const auto bundle = q_positive_instance(gen, g, q);
        const auto omega = MetricField::constant(g, gen.random_positive_definite(n));
        REQUIRE(check_q_positive(bundle, omega, q).verdict);
        const auto u = uniformize(bundle, omega, q);
        const auto kappa = generalized_eigenvalues(chern_curvature(bundle), u.metric);
        CHECK(kappa.is_sorted_descending());
        for (std::size_t p = 0; p < kappa.size(); ++p) {
          REQUIRE(is_positive_definite(u.metric.at(p)));
          double scale = 0.0;
          for (double k : kappa.at(p)) scale = std::max(scale, std::abs(k));
          for (int i = 1; i <= n; ++i) {
            const double expected = transformed_eigenvalue(u.base_eigenvalues.value(p, i), u.lambda0);
            REQUIRE(std::abs(kappa.value(p, i) - expected) <= 1e-8 * scale);
          }
          const double bound = (std::exp(u.lambda0 * u.base_eigenvalues.value(p, n - q)) - (q + 1)) / u.lambda0;
          REQUIRE(smallest_sum(kappa.at(p), q) >= bound - 1e-7);
        }
        CHECK(check_uniform_q_positive(bundle, u.metric, q).verdict);
      }
    }
  }
}
