#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "qpos/corpus.hpp"
#include "qpos/expression.hpp"
#include "qpos/lattice_fields.hpp"
#include "support/oracles.hpp"

using namespace qpos;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Errc error_code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected qpos::Error");
  return Errc::invalid_argument;
}

}  // namespace

TEST_CASE("geometry validation", "[geometry]") {
  CHECK(error_code_of([] { TorusGeometry(1, {8, 7}); }) == Errc::invalid_argument);
  CHECK(error_code_of([] { TorusGeometry(1, {2, 8}); }) == Errc::invalid_argument);
  CHECK(error_code_of([] { TorusGeometry(1, {8}); }) == Errc::invalid_argument);
  CHECK(error_code_of([] { TorusGeometry(0, {}); }) == Errc::unsupported_dimension);
  CHECK(error_code_of([] { TorusGeometry(1, {8, 8}, {1.0, -1.0}); }) == Errc::invalid_argument);

  const TorusGeometry g(2, {4, 6, 8, 10}, {1.0, 2.0, 3.0, 4.0});
  CHECK(g.point_count() == 4u * 6u * 8u * 10u);
  CHECK_THAT(g.volume(), WithinRel(24.0, 1e-15));
  CHECK_THAT(g.cell_volume() * static_cast<double>(g.point_count()), WithinRel(24.0, 1e-14));
  // Row-major with axis 0 slowest.
  CHECK(g.index_along(1, 3) == 1);
  CHECK(g.index_along(10, 2) == 1);
  CHECK(g.coordinate(10, 2) == 3.0 / 8.0);
  CHECK(TorusGeometry::axis_name(3) == "y2");
}

TEST_CASE("dbar_del_hessian annihilates constants", "[hessian]") {
  const auto g = TorusGeometry::cubic(2, 8);
  const auto h = dbar_del_hessian(ScalarField(g, 3.5));
  for (std::size_t p = 0; p < h.size(); ++p) CHECK(h.at(p).norm() < 1e-13);
}

TEST_CASE("dbar_del_hessian of cos(x1) in one variable", "[hessian]") {
  const auto g = TorusGeometry::cubic(1, 16);
  const auto phi = Expression::parse("cos(x1)").sample(g);
  const auto h = dbar_del_hessian(phi);
  for (std::size_t p = 0; p < h.size(); ++p) {
    CHECK_THAT(h.entry(p, 0, 0).real(), WithinAbs(-0.25 * std::cos(g.coordinate(p, 0)), 1e-13));
    CHECK(h.entry(p, 0, 0).imag() == 0.0);
  }
}

TEST_CASE("off-diagonal Hessian entry matches finite differences", "[hessian][oracle]") {
  const auto g = TorusGeometry::cubic(2, 8);
  const auto phi = Expression::parse("sin(x1)*sin(y2)").sample(g);
  const auto h = dbar_del_hessian(phi);
  const testing::RealFunction f = [](const std::vector<double>& x) { return std::sin(x[0]) * std::sin(x[3]); };
  for (std::size_t p = 0; p < h.size(); p += 37) {
    std::vector<double> x(4);
    g.coordinates(p, x);
    const Matrix fd = testing::finite_difference_hessian(f, x, 2, 1e-3);
    CHECK(std::abs(h.entry(p, 0, 1) - fd(0, 1)) < 1e-6);
    CHECK((h.at(p) - fd).norm() < 1e-6);
    // Closed form (i/4) cos(x1) cos(y2).
    CHECK(std::abs(h.entry(p, 0, 1) - Complex(0.0, 0.25 * std::cos(x[0]) * std::cos(x[3]))) < 1e-13);
  }
}

TEST_CASE("Hessian is Hermitian and linear", "[hessian][property]") {
  const auto g = TorusGeometry::cubic(2, 8);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    InstanceGenerator gen(seed);
    const auto a = gen.random_weight(2, 3, 1.0).sample(g);
    const auto b = gen.random_weight(2, 3, 1.0).sample(g);
    const double s = gen.uniform(-2.0, 2.0), t = gen.uniform(-2.0, 2.0);
    const auto ha = dbar_del_hessian(a);
    const auto hb = dbar_del_hessian(b);
    const auto hab = dbar_del_hessian(s * a + t * b);
    CHECK(ha.max_hermitian_defect() <= 1e-12);
    double worst = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < ha.size(); ++p) {
      worst = std::max(worst, (hab.at(p) - s * ha.at(p) - t * hb.at(p)).norm());
      scale = std::max(scale, ha.at(p).norm() + hb.at(p).norm());
    }
    CHECK(worst <= 1e-13 * (1.0 + scale));
  }
}

TEST_CASE("Hessian rejects non-finite weights", "[hessian]") {
  const auto g = TorusGeometry::cubic(1, 8);
  ScalarField phi(g);
  phi[3] = std::nan("");
  CHECK(error_code_of([&] { dbar_del_hessian(phi); }) == Errc::non_finite);
}

TEST_CASE("integrate", "[integrate]") {
  const auto g = TorusGeometry::cubic(1, 8);
  const ScalarField one(g, 1.0);
  CHECK_THAT(integrate(one, one), WithinRel(kTwoPi * kTwoPi, 1e-14));
  CHECK_THAT(integrate(Expression::parse("cos(x1)").sample(g), one), WithinAbs(0.0, 1e-14));

  const auto other = TorusGeometry::cubic(1, 16);
  CHECK(error_code_of([&] { integrate(one, ScalarField(other, 1.0)); }) == Errc::geometry_mismatch);
  CHECK(error_code_of([&] { integrate(one, ScalarField(g, 0.0)); }) == Errc::invalid_argument);
}

TEST_CASE("quadrature agrees with a refined grid for band-limited integrands", "[integrate][oracle]") {
  for (std::uint64_t seed = 11; seed <= 20; ++seed) {
    InstanceGenerator gen(seed);
    // Products of two factors with wavenumber <= 2 stay below the coarse Nyquist limit.
    const Expression e = gen.random_weight(2, 2, 1.0);
    const std::string text = e.str() + " + 0.75";
    const auto coarse = TorusGeometry::cubic(2, 8);
    const auto fine = TorusGeometry::cubic(2, 32);
    const double a = integrate(Expression::parse(text).sample(coarse));
    const double b = integrate(Expression::parse(text).sample(fine));
    CHECK_THAT(a, WithinAbs(b, 1e-10 * std::max(1.0, std::abs(b))));
  }
}

TEST_CASE("exact forms integrate to zero", "[integrate][property]") {
  const auto g = TorusGeometry::cubic(2, 8);
  for (std::uint64_t seed = 21; seed <= 30; ++seed) {
    InstanceGenerator gen(seed);
    const auto phi = gen.random_weight(2, 3, 5.0).sample(g);
    const auto omega = MetricField::constant(g, gen.random_positive_definite(2));
    const auto trace = metric_trace(dbar_del_hessian(phi), omega);
    const double scale = g.volume() * trace.max_abs();
    CHECK(std::abs(integrate(trace)) <= 1e-9 * std::max(scale, 1e-300));
  }
}

TEST_CASE("poisson_solve examples", "[poisson]") {
  const auto g = TorusGeometry::cubic(1, 16);
  const auto id = MetricField::identity(g);

  const auto zero = poisson_solve(ScalarField(g), id);
  CHECK(zero.max_abs() == 0.0);

  const auto f = poisson_solve(Expression::parse("cos(x1)").sample(g), id);
  for (std::size_t p = 0; p < f.size(); ++p) {
    CHECK_THAT(f[p], WithinAbs(-4.0 * std::cos(g.coordinate(p, 0)), 1e-12));
  }

  const auto shifted = Expression::parse("1 + cos(x1)").sample(g);
  CHECK(error_code_of([&] { poisson_solve(shifted, id); }) == Errc::mean_not_zero);
}

TEST_CASE("poisson_solve rejects non-constant metrics", "[poisson]") {
  const auto g = TorusGeometry::cubic(1, 8);
  HermitianMatrixField field(g);
  for (std::size_t p = 0; p < field.size(); ++p) field.entry(p, 0, 0) = 1.5 + std::sin(g.coordinate(p, 0));
  const MetricField omega(field);
  CHECK(error_code_of([&] { poisson_solve(ScalarField(g), omega); }) == Errc::non_constant_metric);
}

TEST_CASE("poisson_solve then Hessian trace round-trips", "[poisson][property]") {
  for (int n : {1, 2}) {
    const auto g = TorusGeometry(n, std::vector<int>(static_cast<std::size_t>(2 * n), n == 1 ? 32 : 8),
                                 std::vector<double>(static_cast<std::size_t>(2 * n), 1.7));
    for (std::uint64_t seed = 31; seed <= 36; ++seed) {
      InstanceGenerator gen(seed);
      ScalarField rhs = gen.random_weight(n, 4, 3.0).sample(g);
      rhs += -rhs.mean();
      const auto omega = MetricField::constant(g, gen.random_positive_definite(n, 0.1, 10.0));
      double residual = -1.0;
      const auto f = poisson_solve(rhs, omega, 1e-8, &residual);
      CHECK(residual <= 1e-8);
      CHECK(std::abs(f.mean()) <= 1e-12 * (1.0 + f.max_abs()));
      const auto back = metric_trace(dbar_del_hessian(f), omega);
      for (std::size_t p = 0; p < back.size(); ++p) {
        REQUIRE(std::abs(back[p] - rhs[p]) <= 1e-8 * rhs.max_abs());
      }
    }
  }
}
