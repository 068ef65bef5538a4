#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mfg_lab/grid.hpp"

using namespace mfg;

namespace {

GridGeometry square(Index n, double lo, double hi) {
  return GridGeometry::from_extent(2, {n, n}, {lo, lo}, {hi, hi});
}

// Simpson's rule on [a, b] with n (even) intervals.
template <typename Fn>
double simpson(Fn&& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

ScalarField random_field(const GridGeometry& g, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  ScalarField::Values v(g.size());
  for (Index k = 0; k < g.size(); ++k) v[k] = u(rng);
  return ScalarField(g, v);
}

}  // namespace

TEST_CASE("geometry factories place cells as documented") {
  const auto g = GridGeometry::node_aligned(2, {129, 129}, {0.0, 0.0}, {1.0, 1.0});
  CHECK(g.spacing[0] == doctest::Approx(1.0 / 128));
  CHECK(g.center(0)[0] == doctest::Approx(0.0));
  CHECK(g.center(g.size() - 1)[1] == doctest::Approx(1.0));
  const auto f = GridGeometry::from_extent(1, {10, 1}, {0.0, 0.0}, {1.0, 0.0});
  CHECK(f.center(0)[0] == doctest::Approx(0.05));
  CHECK(f.size() == 10);
  CHECK_THROWS_AS(ScalarField(f, ScalarField::Values::Constant(9, 0.0)), DomainError);
  ScalarField::Values bad = ScalarField::Values::Zero(10);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(ScalarField(f, bad), DomainError);
}

TEST_CASE("gradient of constants and affine fields is exact") {
  const auto g = square(16, 0.0, 1.0);
  const auto c = gradient(ScalarField::constant(g, 3.5));
  CHECK(c.components().abs().maxCoeff() == 0.0);
  const auto lin = gradient(ScalarField::sample(g, [](const Point& x) { return x[0]; }));
  CHECK((lin.components().col(0) - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(lin.components().col(1).abs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(gradient(ScalarField::constant(square(2, 0.0, 1.0), 1.0)), GridTooSmall);
}

TEST_CASE("gradient of sin converges at second order including boundary cells") {
  std::vector<double> err;
  for (Index n : {32, 64, 128}) {
    const auto g = GridGeometry::from_extent(1, {n, 1}, {0.0, 0.0}, {2.0, 0.0});
    const auto du = gradient(ScalarField::sample(g, [](const Point& x) { return std::sin(x[0]); }));
    double e = 0.0;
    for (Index k = 0; k < g.size(); ++k) e = std::max(e, std::abs(du.components()(k, 0) - std::cos(g.center(k)[0])));
    err.push_back(e);
  }
  CHECK(std::log2(err[0] / err[1]) >= 1.9);
  CHECK(std::log2(err[1] / err[2]) >= 1.9);
}

TEST_CASE("divergence is the negative adjoint of gradient") {
  std::mt19937_64 rng(7);
  const auto g = GridGeometry::from_extent(2, {13, 11}, {0.0, 0.0}, {1.3, 1.1});
  const double vol = g.cell_volume();
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ScalarField::Values pv = random_field(g, rng, -1.0, 1.0).values();
    for (Index k = 0; k < g.size(); ++k) {
      const auto idx = g.unflatten(k);
      if (idx[0] < 3 || idx[1] < 3 || idx[0] > 9 || idx[1] > 7) pv[k] = 0.0;
    }
    const ScalarField phi(g, pv);
    VectorField::Components fc(g.size(), 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Index k = 0; k < g.size(); ++k) fc(k, 0) = u(rng), fc(k, 1) = u(rng);
    const VectorField F(g, fc);
    const auto terms = (F.components() * gradient(phi).components()).eval();
    const double lhs = terms.sum() * vol;
    const double rhs = -(divergence(F).values() * phi.values()).sum() * vol;
    const double scale = terms.abs().sum() * vol;
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("divergence of a constant field vanishes away from the boundary") {
  const auto g = square(12, 0.0, 1.0);
  VectorField::Components fc(g.size(), 2);
  fc.col(0).setConstant(1.7);
  fc.col(1).setConstant(-0.4);
  const auto d = divergence(VectorField(g, fc));
  for (Index k = 0; k < g.size(); ++k) {
    const auto idx = g.unflatten(k);
    if (idx[0] >= 3 && idx[0] <= 8 && idx[1] >= 3 && idx[1] <= 8) CHECK(std::abs(d[k]) < 1e-12);
  }
}

TEST_CASE("divergence of the gradient of |x|^2/2 is 2 in the interior") {
  const auto g = square(32, -1.0, 1.0);
  const auto u = ScalarField::sample(g, [](const Point& x) { return 0.5 * x.squaredNorm(); });
  const auto lap = divergence(gradient(u));
  for (Index k = 0; k < g.size(); ++k) {
    const auto idx = g.unflatten(k);
    if (idx[0] >= 3 && idx[0] < 29 && idx[1] >= 3 && idx[1] < 29)
      CHECK(lap[k] == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("lp_norm examples") {
  const auto g = square(300, -1.5, 1.5);
  const Ball b1{make_point(0.0, 0.0), 1.0};
  const auto two = ScalarField::constant(g, 2.0);
  CHECK(lp_norm(two, b1, {-1.0}) == doctest::Approx(2.0 / std::numbers::pi).epsilon(2e-3));
  const auto three = ScalarField::constant(g, 3.0);
  CHECK(lp_norm(three, b1, {INFINITY}) == 3.0);
  CHECK(lp_norm(three, b1, {-INFINITY}) == 3.0);
  const auto r = ScalarField::sample(g, [](const Point& x) { return x.norm(); });
  CHECK(lp_norm(r, b1, {1.0}) == doctest::Approx(2.0 * std::numbers::pi / 3.0).epsilon(1e-3));
  CHECK_THROWS_AS(lp_norm(ScalarField::constant(g, -1.0), b1, {-2.0}), NegativePNonNonnegativeField);
  CHECK_THROWS_AS(lp_norm(two, b1, {0.0}), DomainError);
  // A zero cell makes every negative-exponent norm vanish.
  CHECK(lp_norm(r, b1, {-1.0}) >= 0.0);
}

TEST_CASE("negative exponent duality") {
  std::mt19937_64 rng(11);
  const auto g = square(40, 0.0, 1.0);
  const Ball b{make_point(0.5, 0.5), 0.4};
  for (int trial = 0; trial < 20; ++trial) {
    const ScalarField v = random_field(g, rng, 0.1, 5.0);
    const ScalarField inv(g, v.values().inverse());
    for (double p : {0.5, 1.0, 2.5, 7.0}) {
      const double prod = lp_norm(v, b, {p}) * lp_norm(inv, b, {-p});
      CHECK(std::abs(prod - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("scale-invariant norm is non-decreasing in p") {
  std::mt19937_64 rng(3);
  const auto g = square(30, 0.0, 1.0);
  const Ball b{make_point(0.5, 0.5), 0.35};
  const std::vector<double> ps{-HUGE_VAL, -8.0, -2.0, -0.5, 0.5, 1.0, 2.0, 4.0, 8.0, HUGE_VAL};
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const ScalarField v = random_field(g, rng, 0.0, 3.0);
    for (std::size_t i = 0; i + 1 < ps.size(); ++i)
      if (scale_invariant_norm(v, b, ps[i]) > scale_invariant_norm(v, b, ps[i + 1]) * (1.0 + 1e-12))
        ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("scale-invariant norm of a constant and its large-p limit") {
  const auto g = square(200, -1.0, 1.0);
  const Ball b{make_point(0.0, 0.0), 0.8};
  for (double p : {-HUGE_VAL, -3.0, 1.0, 6.0, HUGE_VAL})
    CHECK(scale_invariant_norm(ScalarField::constant(g, 1.25), b, p) == doctest::Approx(1.25).epsilon(1e-12));
  // With the raw R^{-d/p} convention the constant picks up |B_1|^{1/p}.
  const double raw = lp_norm(ScalarField::constant(g, 1.25), b, {2.0, true});
  const double measure = ball_quadrature(g, b).measure();
  CHECK(raw == doctest::Approx(1.25 * std::sqrt(measure / (0.8 * 0.8))).epsilon(1e-12));
  const auto v = ScalarField::sample(g, [](const Point& x) { return 10.0 + std::cos(x.norm()); });
  const double sup = lp_norm(v, b, {INFINITY});
  CHECK(scale_invariant_norm(v, b, 256.0) >= 0.99 * sup);
}

TEST_CASE("integral averages") {
  const auto g = square(200, -1.0, 1.0);
  const Ball b{make_point(0.0, 0.0), 0.6};
  CHECK(integral_average(ScalarField::constant(g, -2.0), b) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(std::abs(integral_average(ScalarField::sample(g, [](const Point& x) { return x[0]; }), b)) < 1e-12);
  const auto r2 = ScalarField::sample(g, [](const Point& x) { return x.squaredNorm(); });
  CHECK(integral_average(r2, b) == doctest::Approx(0.36 / 2.0).epsilon(2e-3));
}

TEST_CASE("ball quadrature converges under refinement") {
  std::vector<double> err;
  for (Index n : {25, 50, 100, 200}) {
    const auto g = square(n, -1.0, 1.0);
    const auto q = ball_quadrature(g, {make_point(0.1, -0.05), 0.7});
    err.push_back(std::abs(q.measure() - std::numbers::pi * 0.49));
  }
  CHECK(err[3] < err[0]);
  const double order = std::log2(err[0] / err[3]) / 3.0;
  CHECK(order >= 1.0);
}

TEST_CASE("a_rk examples") {
  const auto g = square(200, -1.0, 1.0);
  const double R = 0.25, k = 1.0, theta = 4.0;
  const double rho = R * (1.0 + k / theta);
  const auto zero = ScalarField::constant(g, 0.0);
  const double measure = ball_quadrature(g, {make_point(0.0, 0.0), rho}).measure();
  CHECK(a_rk(zero, make_point(0.0, 0.0), R, k, theta) ==
        doctest::Approx(R * std::pow(measure, 1.0 / theta) * std::pow(R, -2.0 / theta)).epsilon(1e-12));
  const auto r = ScalarField::sample(g, [](const Point& x) { return x.norm(); });
  const double integral =
      simpson([&](double s) { return std::pow(s + R, theta) * 2.0 * std::numbers::pi * s; }, 0.0, rho);
  const double oracle = std::pow(R, -2.0 / theta) * std::pow(integral, 1.0 / theta);
  CHECK(a_rk(r, make_point(0.0, 0.0), R, k, theta) == doctest::Approx(oracle).epsilon(2e-3));
  CHECK(a_rk(r, make_point(0.0, 0.0), R, k, INFINITY) == doctest::Approx(0.25 + 0.25).epsilon(0.01));
  CHECK_THROWS_AS(a_rk(r, make_point(0.9, 0.0), R, k, theta), BallEscapesDomain);
}

TEST_CASE("a_rk is non-decreasing in theta on a fixed ball") {
  const auto g = square(100, -1.0, 1.0);
  const auto u = ScalarField::sample(g, [](const Point& x) { return std::sin(3.0 * x[0]) + x[1]; });
  const Point c = make_point(0.1, 0.0);
  const Ball b{c, 0.3};
  const auto shifted = ScalarField(g, (u.values().abs() + 0.3).eval());
  double prev = -INFINITY;
  for (double th : {-6.0, -1.0, 1.0, 2.0, 5.0, 20.0}) {
    const double v = scale_invariant_norm(shifted, b, th);
    CHECK(v >= prev * (1.0 - 1e-12));
    prev = v;
  }
}

TEST_CASE("cutoff") {
  const auto g = square(101, -1.0, 1.0);
  const Ball inner{make_point(0.0, 0.0), 0.3}, outer{make_point(0.0, 0.0), 0.6};
  const auto xi = cutoff(g, inner, outer);
  CHECK(xi[g.flat(50, 50)] == 1.0);
  CHECK(xi[g.flat(0, 0)] == 0.0);
  const auto grad = gradient(xi).magnitude();
  CHECK(grad.values().maxCoeff() <= 2.0 / 0.3 + 1e-9);
  CHECK_THROWS_AS(cutoff(g, outer, inner), DomainError);

  const auto line = GridGeometry::node_aligned(1, {201, 1}, {-1.0, 0.0}, {1.0, 0.0});
  const auto xi1 = cutoff(line, {make_point(0.0), 0.3}, {make_point(0.0), 0.6});
  CHECK(xi1[145] == doctest::Approx(0.5));
}

TEST_CASE("bump test family") {
  const auto g = square(64, 0.0, 1.0);
  const auto fam = bump_test_family(g, 10, {0.1, 0.2}, 0);
  CHECK(fam.size() == 20);
  for (const auto& t : fam) {
    for (Index k = 0; k < g.size(); ++k) {
      const auto idx = g.unflatten(k);
      const bool ring = idx[0] < 3 || idx[1] < 3 || idx[0] > 60 || idx[1] > 60;
      if (ring) CHECK(t.value[k] == 0.0);
    }
    const auto d = gradient(t.value).components();
    CHECK(std::abs(d.col(0).sum()) < 1e-10);
    CHECK(std::abs(d.col(1).sum()) < 1e-10);
    const double gmax = t.exact_gradient.components().abs().maxCoeff();
    CHECK((d - t.exact_gradient.components()).abs().maxCoeff() < 0.1 * gmax);
  }
  const auto again = bump_test_family(g, 10, {0.1, 0.2}, 0);
  CHECK(again[7].center == fam[7].center);
  const auto fine = bump_test_family(square(128, 0.0, 1.0), 10, {0.1, 0.2}, 0);
  CHECK(fine[3].center == fam[3].center);
}

TEST_CASE("truncated power") {
  const double q = 2.5, R = 0.3, M = 1.7;
  CHECK(truncated_power(M, q, R, M) == doctest::Approx(std::pow(M + R, q)));
  const double h = 1e-7;
  const double left = (truncated_power(M, q, R, M) - truncated_power(M - h, q, R, M)) / h;
  const double right = (truncated_power(M + h, q, R, M) - truncated_power(M, q, R, M)) / h;
  CHECK(left == doctest::Approx(right).epsilon(1e-5));
  CHECK(truncated_power_derivative(M + 5.0, q, R, M) == doctest::Approx(q * std::pow(M + R, q - 1.0)));
  CHECK(truncated_power(0.9, q, R, 1e6) == doctest::Approx(std::pow(1.2, q)));
  for (double z : {0.0, 0.5, 3.0, 40.0}) CHECK(truncated_power(z, 1.0, R, M) == doctest::Approx(z + R));
  CHECK_THROWS_AS(truncated_power(1.0, 0.0, R, M), DomainError);
}
