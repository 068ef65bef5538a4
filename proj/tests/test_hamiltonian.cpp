#include <cmath>
#include <random>

#include "doctest.h"
#include "mfg_lab/hamiltonian.hpp"

using namespace mfg;

namespace {

const Point kX = make_point(0.0, 0.0);

HamiltonianModel standard(double a, double t, double b, double eps = 0.1) {
  return HamiltonianModel::standard(derive_params(a, t, b, eps));
}

// Brute-force sup over a square of p values; independent of the radial solver.
double brute_lagrangian(const HamiltonianModel& H, const Point& v, double m, double half, int n) {
  double best = -INFINITY;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const Point p = make_point(-half + 2.0 * half * i / n, -half + 2.0 * half * j / n);
      best = std::max(best, -v.dot(p) - H.h(kX, p, m));
    }
  return best;
}

}  // namespace

TEST_CASE("derive_params examples") {
  const auto p = derive_params(2.0, 0.0, 1.0, 0.1);
  CHECK(p.delta == doctest::Approx(0.5));
  CHECK(p.gamma == doctest::Approx(4.0));
  CHECK(p.gamma_conj == doctest::Approx(4.0 / 3.0));
  const auto q = derive_params(2.0, 0.5, 2.0, 0.1);
  CHECK(q.delta == doctest::Approx(1.25));
  CHECK(q.gamma == doctest::Approx(2.4));
  CHECK(q.gamma_conj == doctest::Approx(12.0 / 7.0));
  CHECK_THROWS_AS(derive_params(2.0, 0.5, 0.4, 0.1), ParamConstraintViolation);
  CHECK_THROWS_AS(derive_params(1.0, 0.0, 1.0, 0.1), ParamConstraintViolation);
  CHECK_THROWS_AS(derive_params(2.0, 1.0, 3.0, 0.1), ParamConstraintViolation);
  CHECK_THROWS_AS(derive_params(2.0, 0.0, 1.0, 0.6), ParamConstraintViolation);
  try {
    derive_params(2.0, 0.5, 0.4, 0.1);
  } catch (const ParamConstraintViolation& e) {
    CHECK(std::string(e.what()).find("beta > tau/(alpha-1)") != std::string::npos);
  }
}

TEST_CASE("exponent identities hold for random valid tuples") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ua(1.05, 6.0), ut(0.0, 0.99), uf(0.0, 1.0);
  int checked = 0;
  while (checked < 1000) {
    const double a = ua(rng), t = ut(rng);
    const double bmin = t / (a - 1.0);
    const double b = bmin + 0.01 + 5.0 * uf(rng);
    const double delta = (b + t) / a;
    if (b - delta <= 1e-3) continue;
    const auto p = derive_params(a, t, b, 0.5 * (b - delta));
    CHECK(identity_residual(p) <= 1e-12);
    CHECK(p.gamma > p.alpha);
    ++checked;
  }
}

TEST_CASE("eval_h examples") {
  CHECK(standard(2, 0, 1).h(kX, make_point(1, 0), 1.0) == doctest::Approx(0.0));
  CHECK(standard(2, 0.5, 2).h(kX, make_point(2, 0), 4.0) == doctest::Approx(-14.0));
  const auto g = HamiltonianModel::separable_gamma(4.0);
  CHECK(g.h(kX, make_point(2, 0), 2.0) == doctest::Approx(0.0));
  CHECK(g.params().alpha == 2.0);
  CHECK(g.params().gamma == doctest::Approx(4.0));
  CHECK_THROWS_AS(g.h(kX, make_point(1, 0), 0.0), NonPositiveDensity);
  CHECK_THROWS_AS(g.h(kX, make_point(1, 0), -1.0), NonPositiveDensity);
}

TEST_CASE("eval_dph examples") {
  const Point g1 = standard(2, 0, 1).dph(kX, make_point(1, 2), 3.0);
  CHECK(g1[0] == doctest::Approx(2.0));
  CHECK(g1[1] == doctest::Approx(4.0));
  const Point g2 = standard(3, 0.5, 2).dph(kX, make_point(1, 0), 4.0);
  CHECK(g2[0] == doctest::Approx(1.5));
  CHECK(g2[1] == doctest::Approx(0.0));
  CHECK(standard(1.5, 0.2, 1.5).dph(kX, make_point(0, 0), 2.0).norm() == 0.0);
  CHECK_THROWS_AS(standard(2, 0, 1).dph(kX, make_point(1, 0), 0.0), NonPositiveDensity);
}

TEST_CASE("analytic gradient matches central differences at second order") {
  const auto H = standard(3.0, 0.5, 2.0);
  for (const Point& p : {make_point(0.3, 0.4), make_point(-1.2, 0.7), make_point(0.1, 0.0)}) {
    const Point exact = H.dph(kX, p, 1.7);
    std::vector<double> err;
    for (double h : {0.02, 0.01, 0.005}) err.push_back((finite_difference_dph(H, kX, p, 1.7, h) - exact).norm());
    CHECK(std::log2(err[0] / err[1]) >= 1.9);
    CHECK(std::log2(err[1] / err[2]) >= 1.9);
  }
}

TEST_CASE("custom models validate a supplied gradient") {
  const auto params = derive_params(2.0, 0.0, 1.0, 0.1);
  auto h = [](const Point&, const Point& p, double m) { return p.squaredNorm() - m; };
  auto good = [](const Point&, const Point& p, double) { return Point(2.0 * p); };
  auto bad = [](const Point&, const Point& p, double) { return Point(3.0 * p); };
  CHECK_NOTHROW(HamiltonianModel::custom(params, h, good));
  CHECK_THROWS_AS(HamiltonianModel::custom(params, h, bad), GradientMismatch);
  const auto fd = HamiltonianModel::custom(params, h);
  CHECK((fd.dph(kX, make_point(0.5, -1.0), 1.0) - make_point(1.0, -2.0)).norm() < 1e-6);
}

TEST_CASE("legendre transform examples") {
  const auto a = standard(2, 0, 1);
  CHECK(legendre_lagrangian(a, kX, make_point(2, 0), 1.0) == doctest::Approx(2.0).epsilon(1e-10));
  const auto b = standard(2, 0, 2);
  CHECK(legendre_lagrangian(b, kX, make_point(0, 0), 1.0) == doctest::Approx(1.0).epsilon(1e-10));
  const auto c = standard(2, 0.5, 2);
  const double oracle = brute_lagrangian(c, make_point(1, 0), 1.0, 1.5, 600);
  CHECK(oracle == doctest::Approx(1.25).epsilon(1e-9));
  CHECK(legendre_lagrangian(c, kX, make_point(1, 0), 1.0) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("legendre transform refuses a bracket that is too small") {
  RadialBracket br;
  br.s_max = 0.5;
  CHECK_THROWS_AS(legendre_lagrangian(standard(2, 0, 1), kX, make_point(2, 0), 1.0, br), BracketTooSmall);
}

TEST_CASE("legendre transform is a supremum") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto H = standard(2.5, 0.3, 1.5);
  for (int i = 0; i < 50; ++i) {
    const Point v = make_point(u(rng), u(rng));
    const double m = std::exp(u(rng));
    const double L = legendre_lagrangian(H, kX, v, m);
    for (int j = 0; j < 20; ++j) {
      const Point p = make_point(u(rng), u(rng));
      CHECK(L >= -v.dot(p) - H.h(kX, p, m) - 1e-12);
    }
  }
}

TEST_CASE("legendre biconjugacy reproduces H") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> up(-2.0, 2.0), ulm(std::log(0.2), std::log(5.0));
  const auto H = standard(2, 0, 1);
  RadialBracket inner;
  inner.s_max = 60.0;
  RadialBracket outer;
  outer.s_max = 30.0;
  outer.coarse_samples = 200;
  inner.coarse_samples = 200;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Point p = make_point(up(rng), up(rng));
    const double m = std::exp(ulm(rng));
    // H(p) = sup_v (-p.v - L(v)), maximised along v = -s p/|p|.
    const double pn = p.norm();
    const Point dir = pn > 0 ? Point(-p / pn) : make_point(1.0, 0.0);
    auto phi = [&](double s) { return s * pn - legendre_lagrangian(H, kX, s * dir, m, inner); };
    double best = -INFINITY;
    double lo = 0.0, hi = outer.s_max;
    for (int pass = 0; pass < 3; ++pass) {
      const int n = outer.coarse_samples;
      double arg = lo;
      for (int k = 0; k <= n; ++k) {
        const double s = lo + (hi - lo) * k / n;
        const double v = phi(s);
        if (v > best) best = v, arg = s;
      }
      const double w = (hi - lo) / n;
      lo = std::max(0.0, arg - w);
      hi = arg + w;
    }
    const double h = H.h(kX, p, m);
    worst = std::max(worst, std::abs(best - h) / std::max(std::abs(h), 1.0));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("closed-form Lagrangian matches the transform up to a constant factor") {
  for (double alpha : {1.5, 2.0, 3.0}) {
    const auto H = HamiltonianModel::standard(derive_params(alpha, 0.0, 1.0, 0.01));
    const auto& P = H.params();
    for (double vn : {0.5, 1.0, 2.0}) {
      const double exact = legendre_lagrangian(H, kX, make_point(vn, 0.0), 1.0);
      const double paper_velocity = paper_lagrangian(P, vn, 1.0) - 1.0;
      const double ratio = (exact - 1.0) / paper_velocity;
      CHECK(ratio == doctest::Approx(lagrangian_velocity_factor(P)).epsilon(1e-6));
    }
  }
  CHECK(lagrangian_velocity_factor(derive_params(2.0, 0.0, 1.0, 0.1)) == doctest::Approx(0.5));
}

TEST_CASE("anisotropic custom model uses the coordinate search") {
  const auto params = derive_params(2.0, 0.0, 1.0, 0.1);
  auto h = [](const Point&, const Point& p, double m) { return p[0] * p[0] + 2.0 * p[1] * p[1] - m; };
  const auto H = HamiltonianModel::custom(params, h, {}, false);
  const Point v = make_point(1.0, -2.0);
  CHECK(legendre_lagrangian(H, kX, v, 1.5) == doctest::Approx(0.25 + 4.0 / 8.0 + 1.5).epsilon(1e-6));
}

TEST_CASE("envelope examples") {
  const auto p201 = derive_params(2, 0, 1, 0.1);
  CHECK(envelope_lower(p201, 0.0, 0.0, 3.0) == doctest::Approx(-3.0));
  CHECK(envelope_lower(p201, 2.0, 1.0, 1.0) == doctest::Approx(0.0));
  const auto p3 = derive_params(3, 0.5, 2, 0.1);
  CHECK(envelope_lower(p3, 1.0, 4.0, 2.0) == doctest::Approx(1.0 / 6.0 - 32.0 - 2.0));
  CHECK(envelope_upper(p201, 1.0, 2.0, 1.0) == doctest::Approx(-1.0));
  CHECK(envelope_upper(p201, 1.0, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK(envelope_upper(derive_params(2, 0.5, 2, 0.1), 0.0, 4.0, 2.0) == doctest::Approx(-8.0));
  CHECK_THROWS_AS(envelope_upper(p201, 1.0, 0.5, 1.0), EnvelopeNotApplicable);
  CHECK(std::isfinite(envelope_lower(derive_params(2, 0.5, 2, 0.1), 0.0, 0.0, 2.0)));
}

TEST_CASE("m -> 0 limits") {
  const auto H = standard(2, 0, 1);
  CHECK(H.h_at_zero(kX, make_point(1.0, 1.0)) == doctest::Approx(2.0));
  const auto T = standard(2, 0.5, 2);
  CHECK(std::isinf(T.h_at_zero(kX, make_point(1.0, 0.0))));
  CHECK(T.h_at_zero(kX, make_point(0.0, 0.0)) == 0.0);
}

TEST_CASE("lower-order terms enter H and its gradient") {
  LowerOrderTerm t{Coefficient(0.5), [](double m) { return 1.0 / m; }, 1.5, "congestion"};
  const auto H = HamiltonianModel::standard(derive_params(2, 0, 2, 0.1), 1.0, 1.0, {t});
  const Point p = make_point(0.6, -0.8);
  CHECK(H.h(kX, p, 2.0) == doctest::Approx(1.0 - 4.0 + 0.5 * 0.5 * 1.0));
  CHECK((H.dph(kX, p, 2.0) - finite_difference_dph(H, kX, p, 2.0, 1e-5)).norm() < 1e-8);
}
