#include <cmath>

#include "doctest.h"
#include "mfg_lab/assumptions.hpp"
#include "mfg_lab/fit.hpp"

using namespace mfg;

namespace {

HamiltonianModel standard(double a, double t, double b, double eps = 0.1) {
  return HamiltonianModel::standard(derive_params(a, t, b, eps));
}

// Sup of the A.1 ratio for the standard model, evaluated on a much denser
// (|p|, m) sweep than the checker uses.
double a1_ratio_oracle(double a, double t, double b) {
  const double d = (b + t) / a;
  double best = 0.0;
  for (double lp = -3.0; lp <= 4.0; lp += 1.0 / 64)
    for (double lm = -4.0; lm <= 4.0; lm += 1.0 / 64) {
      const double p = std::pow(10.0, lp), m = std::pow(10.0, lm);
      const double g = a * std::pow(p, a - 1.0) / std::pow(m, t);
      const double bound = (1.0 / m + std::pow(m, -t)) * std::pow(p, a - 1.0) + std::pow(m, b - d) + 1.0 / m;
      best = std::max(best, g / bound);
    }
  return best;
}

}  // namespace

TEST_CASE("lattice defaults cover the documented ranges") {
  const auto L = default_lattice();
  CHECK(L.p_magnitudes.front() == doctest::Approx(1e-3));
  CHECK(L.p_magnitudes.back() == doctest::Approx(1e4));
  CHECK(L.m_values.front() == doctest::Approx(1e-4));
  CHECK(L.m_values.back() == doctest::Approx(1e4));
  CHECK(L.p_directions.size() == 8);
  const auto R = refine(L);
  CHECK(R.p_magnitudes.size() == 2 * L.p_magnitudes.size() - 1);
  CHECK(R.p_directions.size() == 16);
  SampleLattice narrow = L;
  narrow.m_values = logspace_per_decade(1.0, 100.0, 4);
  CHECK_THROWS_AS(narrow.validate(), DomainError);
}

TEST_CASE("A1 on the quadratic model") {
  const auto rec = check_a1(standard(2, 0, 1), default_lattice());
  CHECK(rec.pass);
  CHECK(rec.fitted.at("slope_p") == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(rec.fitted.at("slope_m")) < 1e-6);
  // The ratio 2|p| / ((1/m + 1)|p| + ...) tends to 2 as m, |p| grow.
  CHECK(rec.raw_C <= 2.0);
  CHECK(rec.raw_C >= 1.9);
}

TEST_CASE("A1 on the congested model agrees with a dense oracle") {
  const auto rec = check_a1(standard(2, 0.5, 2), default_lattice());
  CHECK(rec.pass);
  CHECK(rec.estimated_C <= 2.0);
  CHECK(rec.raw_C <= a1_ratio_oracle(2, 0.5, 2) * (1.0 + 1e-12));
  CHECK(rec.raw_C >= 0.95 * a1_ratio_oracle(2, 0.5, 2));
  CHECK(rec.fitted.at("slope_p") == doctest::Approx(1.0).epsilon(0.05));
  CHECK(rec.fitted.at("slope_m") == doctest::Approx(-0.5).epsilon(0.05));
}

TEST_CASE("A1 rejects a gradient that grows with m") {
  const auto params = derive_params(2, 0, 1, 0.1);
  const auto H = HamiltonianModel::custom(
      params, [](const Point&, const Point& p, double m) { return 0.5 * m * p.squaredNorm() - m; },
      [](const Point&, const Point& p, double m) { return Point(m * p); });
  const auto L = default_lattice();
  const auto rec = check_a1(H, L);
  CHECK_FALSE(rec.pass);
  CHECK(rec.witness.present);
  CHECK(rec.witness.m == doctest::Approx(L.m_values.back()));
}

TEST_CASE("A2 examples") {
  const auto L = default_lattice();
  const auto quad = standard(2, 0, 1);
  const auto rec = check_a2(quad, L);
  CHECK(rec.pass);
  CHECK(holds_with_constant(quad, L, "A2", 2.0));
  const auto cong = standard(2, 0.5, 2);
  const auto r1 = check_a2(cong, L);
  const auto r2 = check_a2(cong, refine(L));
  CHECK(r1.pass);
  CHECK(std::abs(r2.estimated_C - r1.estimated_C) <= 0.1 * r1.estimated_C);
  CHECK(r1.fitted.at("C_eps0") >= r1.fitted.at("C_eps_half") * (1.0 - 1e-12));
  CHECK(r1.fitted.at("C_eps_half") >= r1.fitted.at("C_eps") * (1.0 - 1e-12));
  const auto params = derive_params(2, 0, 1, 0.1);
  const auto anti = HamiltonianModel::custom(
      params, [](const Point&, const Point& p, double m) { return -0.5 * p.squaredNorm() - m; },
      [](const Point&, const Point& p, double) { return Point(-p); });
  CHECK_FALSE(check_a2(anti, L).pass);
}

TEST_CASE("A3 examples") {
  const auto L = default_lattice();
  const auto rec = check_a3(standard(2, 0, 1), L);
  CHECK(rec.pass);
  CHECK(rec.estimated_C == 1.0);
  CHECK(rec.fitted.at("threshold_C") == 1.0);
  CHECK(rec.fitted.at("slope_m") == doctest::Approx(1.0));
  const auto params = derive_params(2, 0, 1, 0.1);
  const auto flipped = HamiltonianModel::custom(
      params, [](const Point&, const Point& p, double m) { return p.squaredNorm() + m; },
      [](const Point&, const Point& p, double) { return Point(2.0 * p); });
  CHECK_FALSE(check_a3(flipped, L).pass);
  CHECK(check_a3(HamiltonianModel::separable_gamma(4.0), L).pass);
}

TEST_CASE("envelopes hold with the inflated constant") {
  const auto L = default_lattice();
  const auto quad = standard(2, 0, 1);
  const auto rec = check_lemma_envelopes(quad, L);
  CHECK(rec.pass);
  CHECK(std::isfinite(rec.estimated_C));
  CHECK(rec.fitted.at("C_direct_lower") <= rec.fitted.at("C_lower"));
  const auto params = derive_params(2, 0, 1, 0.1);
  const auto flipped = HamiltonianModel::custom(
      params, [](const Point&, const Point& p, double m) { return p.squaredNorm() + m; },
      [](const Point&, const Point& p, double) { return Point(2.0 * p); });
  CHECK_FALSE(check_lemma_envelopes(flipped, L).pass);
}

TEST_CASE("models passing A1-A3 pass the envelope check") {
  const auto L = default_lattice();
  const std::vector<HamiltonianModel> models{
      standard(2, 0, 1), standard(2, 0.5, 2), standard(3, 0.5, 2), standard(1.5, 0.2, 1.5, 0.2),
      HamiltonianModel::separable_gamma(4.0), HamiltonianModel::separable_gamma(3.0)};
  for (const auto& H : models) {
    const bool base = check_a1(H, L).pass && check_a2(H, L).pass && check_a3(H, L).pass;
    CHECK(base);
    if (base) CHECK(check_lemma_envelopes(H, L).pass);
  }
}

TEST_CASE("passing constants stay valid when doubled") {
  const auto L = default_lattice();
  for (const auto& H : {standard(2, 0, 1), standard(2, 0.5, 2), standard(3, 0.5, 2)}) {
    const auto a1 = check_a1(H, L);
    const auto a2 = check_a2(H, L);
    const auto a3 = check_a3(H, L);
    CHECK(holds_with_constant(H, L, "A1", a1.estimated_C));
    CHECK(holds_with_constant(H, L, "A1", 2.0 * a1.estimated_C));
    CHECK(holds_with_constant(H, L, "A2", a2.estimated_C));
    CHECK(holds_with_constant(H, L, "A2", 2.0 * a2.estimated_C));
    CHECK(holds_with_constant(H, L, "A3.lower", 2.0 * a3.estimated_C));
    CHECK(holds_with_constant(H, L, "A3.upper", a3.fitted.at("threshold_C")));
    CHECK(holds_with_constant(H, L, "A3.upper", 2.0 * a3.fitted.at("threshold_C")));
  }
}

TEST_CASE("constants are stable under lattice refinement") {
  const auto L = default_lattice();
  const auto R = refine(L);
  const auto H = standard(2, 0.5, 2);
  for (auto check : {check_a1, check_a2, check_a3}) {
    const double c = check(H, L, {}).estimated_C;
    const double f = check(H, R, {}).estimated_C;
    CHECK(std::abs(f - c) < 0.2 * c);
  }
}

TEST_CASE("continuity check") {
  CHECK(check_a0(standard(2, 0.5, 2), default_lattice()).pass);
  const auto params = derive_params(2, 0, 1, 0.1);
  const auto jump = HamiltonianModel::custom(
      params, [](const Point&, const Point& p, double m) { return p.squaredNorm() - m + (m > 1.0 ? 1.0 : 0.0); },
      {}, true);
  CHECK_FALSE(check_a0(jump, default_lattice()).pass);
}

TEST_CASE("lower-order terms") {
  const auto params = derive_params(2, 0.5, 2, 0.1);
  const LowerOrderTerm potential{Coefficient(0.3), [](double) { return 1.0; }, 0.0, "V"};
  // |p|^{a~}/m^{t~} with a~ = 1.5, t~ = 0.5 >= delta a~ - beta = -0.125.
  const LowerOrderTerm congestion{Coefficient(1.0), [](double m) { return std::pow(m, -0.5); }, 1.5, "cong"};
  const LowerOrderTerm too_big{Coefficient(1.0), [](double m) { return m * m * m; }, 0.0, "big"};
  const auto H = HamiltonianModel::standard(params, 1.0, 1.0, {potential, congestion, too_big});
  const auto recs = check_lower_order_terms(H, default_lattice());
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].pass);
  CHECK(recs[0].fitted.at("condition") == 1.0);
  CHECK(recs[1].pass);
  CHECK(recs[1].fitted.at("condition") == 2.0);
  CHECK_FALSE(recs[2].pass);
}

TEST_CASE("Lions condition") {
  CHECK(check_lions(derive_params(2, 0.5, 2, 0.1)));
  HamiltonianParams p;
  p.alpha = 1.1;
  p.tau = 0.9;
  CHECK_FALSE(check_lions(p));
  CHECK(check_lions(derive_params(2, 0, 1, 0.1)));
}

TEST_CASE("full suite on the reference models") {
  const auto rep = run_assumption_suite(standard(2, 0.5, 2), default_lattice());
  CHECK(rep.all_pass());
  CHECK(rep.lions);
  CHECK(rep.find("LemmaEnvelopes") != nullptr);
}
