#include "mfg_lab/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfg_lab/fit.hpp"

namespace mfg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_pair(const SolutionPair& pair) {
  if (!(pair.u.geometry() == pair.m.geometry())) throw ModelMismatch("u and m live on different grids");
}

double pair_gamma(const SolutionPair& pair) {
  if (!(pair.gamma > 1.0) || !std::isfinite(pair.gamma)) throw ModelMismatch("the pair carries no valid gamma");
  return pair.gamma;
}

Point row(const VectorField& F, Index k) { return F.components().row(k).transpose(); }

// Sum of |v|^p over all cells, times the cell volume, to the power 1/p.
double domain_norm(const std::vector<double>& mags, double p, double vol) {
  double s = 0.0;
  for (double v : mags) s += std::pow(v, p);
  return std::pow(s * vol, 1.0 / p);
}

void require_nonnegative_on(const ScalarField& u, const Ball& ball, const char* what, bool signed_branch) {
  const auto q = ball_quadrature(u.geometry(), ball);
  auto check = [&](Index k) {
    if (u[k] < 0.0) {
      const std::string msg = std::string(what) + ": u < 0 inside the ball of radius " + std::to_string(ball.radius);
      if (signed_branch) throw BranchPreconditionViolated(msg);
      throw SignViolation(msg);
    }
  };
  for (Index k : q.cells) check(k);
  for (Index k : q.covered) check(k);
}

void finish(InequalityRecord& r) {
  r.degenerate = !(std::abs(r.rhs) >= kDegenerateDenominator) && r.lhs != 0.0;
  if (r.degenerate) {
    r.estimated_C = kInf;
    r.pass = false;
    r.note = "degenerate: right-hand side below 1e-14";
    return;
  }
  r.pass = std::isfinite(r.estimated_C) && r.estimated_C <= r.c_cap && r.holds_with(r.estimated_C);
}

}  // namespace

bool InequalityRecord::holds_with(double C) const {
  const double slack = 1e-12 * std::max(std::abs(lhs), std::abs(rhs));
  if (form == Form::Linear) return lhs <= C * rhs + slack;
  const double factor = std::pow(C * theta * theta, gamma / theta);
  if (reversed) return lhs >= factor * rhs * (1.0 - 1e-12) - slack;
  return lhs <= factor * rhs * (1.0 + 1e-12) + slack;
}

InequalityRecord linear_record(std::string name, const Point& center, double R, double lhs,
                               std::map<std::string, double> rhs_terms, double c_cap) {
  InequalityRecord r;
  r.name = std::move(name);
  r.center = center;
  r.R = R;
  r.lhs = lhs;
  r.rhs = 0.0;
  for (const auto& [key, v] : rhs_terms) r.rhs += v;
  r.rhs_terms = std::move(rhs_terms);
  r.c_cap = c_cap;
  r.estimated_C = lhs == 0.0 ? 0.0 : lhs / r.rhs;
  finish(r);
  return r;
}

HjbSummary hjb_residual(const SolutionPair& pair, const HamiltonianModel& model, double tol) {
  require_pair(pair);
  if (!(model.params().gamma > 1.0)) throw ModelMismatch("model carries no exponent data");
  const GridGeometry& g = pair.u.geometry();
  const VectorField Du = gradient(pair.u);
  HjbSummary s;
  ScalarField::Values h = ScalarField::Values::Zero(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    if (g.is_boundary_cell(k)) continue;
    const Point x = g.center(k), p = row(Du, k);
    const double m = pair.m[k];
    double v;
    if (m > 0.0) {
      v = model.h(x, p, m);
      ++s.support_cells;
      s.max_abs_on_support = std::max(s.max_abs_on_support, std::abs(v));
    } else {
      v = model.h_at_zero(x, p);
      ++s.zero_cells;
      s.max_on_zero_set = std::max(s.max_on_zero_set, v);
    }
    h[k] = std::clamp(v, -std::numeric_limits<double>::max(), std::numeric_limits<double>::max());
  }
  s.h = ScalarField(g, std::move(h));
  s.pass = s.max_abs_on_support <= tol && (s.zero_cells == 0 || s.max_on_zero_set <= tol);
  return s;
}

std::vector<TransportResidual> transport_residual(const SolutionPair& pair, const HamiltonianModel& model,
                                                  const std::vector<TestFunction>& family) {
  require_pair(pair);
  const double gamma = model.params().gamma;
  if (!(gamma > 1.0)) throw ModelMismatch("model carries no exponent data");
  const GridGeometry& g = pair.u.geometry();
  const double vol = g.cell_volume();
  const VectorField Du = gradient(pair.u);
  Eigen::ArrayXXd j = Eigen::ArrayXXd::Zero(g.size(), g.dim);
  std::vector<double> jmag(static_cast<std::size_t>(g.size()), 0.0);
  for (Index k = 0; k < g.size(); ++k) {
    const double m = pair.m[k];
    if (!(m > 0.0)) continue;
    const Point jk = m * model.dph(g.center(k), row(Du, k), m);
    j.row(k) = jk.transpose().array();
    jmag[static_cast<std::size_t>(k)] = jk.norm();
  }
  const double gamma_conj = gamma / (gamma - 1.0);
  const double jnorm = domain_norm(jmag, gamma_conj, vol);
  std::vector<TransportResidual> out;
  out.reserve(family.size());
  for (const auto& phi : family) {
    if (!(phi.exact_gradient.geometry() == g)) throw DomainError("test function grid does not match the pair");
    const auto& D = phi.exact_gradient.components();
    TransportResidual r;
    r.center = phi.center;
    r.scale = phi.scale;
    std::vector<double> dmag(static_cast<std::size_t>(g.size()));
    double raw = 0.0;
    for (Index k = 0; k < g.size(); ++k) {
      raw += (j.row(k) * D.row(k)).sum();
      dmag[static_cast<std::size_t>(k)] = D.row(k).matrix().norm();
    }
    r.raw = raw * vol;
    const double denom = jnorm * domain_norm(dmag, gamma, vol);
    r.degenerate = !(denom >= kDegenerateDenominator);
    r.normalized = r.degenerate ? std::abs(r.raw) : std::abs(r.raw) / denom;
    out.push_back(r);
  }
  return out;
}

PointwiseBounds pointwise_bound_constant(const SolutionPair& pair, const HamiltonianParams& params, double c_cap) {
  require_pair(pair);
  if (!(params.delta > 0.0)) throw ModelMismatch("params carry no delta");
  const GridGeometry& g = pair.u.geometry();
  const VectorField Du = gradient(pair.u);
  PointwiseBounds b;
  for (Index k = 0; k < g.size(); ++k) {
    if (g.is_boundary_cell(k)) continue;
    const double P = std::pow(Du.components().row(k).matrix().norm(), 1.0 / params.delta);
    const double m = pair.m[k];
    b.C_upper = std::max(b.C_upper, m / (P + 1.0));
    // Root of C^2 + m C - P = 0: the smallest C with P/C - C <= m.
    b.C_lower = std::max(b.C_lower, 0.5 * (-m + std::sqrt(m * m + 4.0 * P)));
  }
  b.finite = std::isfinite(b.C_upper) && std::isfinite(b.C_lower) && b.C_upper <= c_cap && b.C_lower <= c_cap;
  return b;
}

InequalityRecord caccioppoli_check(const SolutionPair& pair, const Ball& inner, const Ball& outer,
                                   const CaccioppoliSpec& f) {
  require_pair(pair);
  const double gamma = pair_gamma(pair);
  const GridGeometry& g = pair.u.geometry();
  require_ball_inside(g, outer);
  const double Q = gamma * (f.q - 1.0) + 1.0;
  if (!(Q > 0.0)) throw DomainError("Caccioppoli test needs q > (gamma - 1)/gamma");
  if (!(f.scale > 0.0)) throw DomainError("f' scale must be positive");
  const ScalarField xi = cutoff(g, inner, outer);
  const VectorField Du = gradient(pair.u);
  const double width = outer.radius - inner.radius;
  const double RQ = std::pow(f.R, Q);
  double lhs = 0.0, t_grad = 0.0, t_zero = 0.0;
  for (Index k = 0; k < g.size(); ++k) {
    const double dist = (g.center(k) - outer.center).norm();
    if (dist >= outer.radius) continue;
    const double z = std::abs(pair.u[k]);
    const double fp = f.scale * truncated_power_derivative(z, Q, f.R, f.M) / Q;
    const double fv = f.scale * (truncated_power(z, Q, f.R, f.M) - RQ) / Q;
    const double dxi = dist > inner.radius ? 1.0 / width : 0.0;
    lhs += std::pow(xi[k] * Du.components().row(k).matrix().norm(), gamma) * fp;
    t_grad += std::pow(dxi, gamma) * std::pow(fv, gamma) / std::pow(fp, gamma - 1.0);
    t_zero += std::pow(xi[k], gamma) * fp;
  }
  const double vol = g.cell_volume();
  auto r = linear_record("caccioppoli", outer.center, outer.radius, lhs * vol,
                         {{"cutoff_gradient", t_grad * vol}, {"zero_order", t_zero * vol}});
  r.note = "q=" + std::to_string(f.q) + " r=" + std::to_string(inner.radius);
  return r;
}

InequalityRecord reverse_holder_step(const SolutionPair& pair, const Point& center, double R, double k,
                                     double theta, SignMode mode) {
  require_pair(pair);
  const double gamma = pair_gamma(pair);
  const GridGeometry& g = pair.u.geometry();
  if (!(k > 0.0) || !(R > 0.0)) throw DomainError("reverse Hölder step needs k > 0 and R > 0");
  if (mode == SignMode::Unsigned) {
    if (!(theta >= gamma - 1.0 + k)) throw BranchPreconditionViolated("unsigned branch needs theta >= gamma - 1 + k");
  } else {
    const bool low = k <= theta && theta <= gamma - 1.0 - k;
    const bool neg = theta <= -k;
    if (!low && !neg) throw BranchPreconditionViolated("signed branch needs k <= theta <= gamma-1-k or theta <= -k");
  }
  const Ball outer{center, 2.0 * R};
  require_ball_inside(g, outer);
  if (mode == SignMode::Signed) require_nonnegative_on(pair.u, outer, "signed reverse Hölder branch", true);
  const double theta_up = theta * (1.0 + 1.0 / g.dim);
  InequalityRecord r;
  r.name = mode == SignMode::Unsigned ? "reverse_holder" : (theta < 0 ? "reverse_holder_negative" : "reverse_holder_signed");
  r.center = center;
  r.R = R;
  r.form = InequalityRecord::Form::Power;
  r.theta = theta;
  r.gamma = gamma;
  r.reversed = theta < 0.0;
  r.lhs = a_rk(pair.u, center, R, k, theta_up);
  r.rhs = a_rk(pair.u, center, R, k, theta);
  r.rhs_terms = {{"a_theta", r.rhs}};
  r.estimated_C = std::pow(r.lhs / r.rhs, theta / gamma) / (theta * theta);
  r.note = "theta=" + std::to_string(theta) + " k=" + std::to_string(k);
  finish(r);
  return r;
}

MoserResult moser_sup_bound(const SolutionPair& pair, const Point& center, double R, double lambda) {
  require_pair(pair);
  const double gamma = pair_gamma(pair);
  const GridGeometry& g = pair.u.geometry();
  if (!(lambda > gamma - 1.0)) throw DomainError("Moser bound needs lambda > gamma - 1");
  const Ball outer{center, 2.0 * R};
  require_ball_inside(g, outer);
  const double sup = lp_norm(pair.u, Ball{center, R}, NormSpec{kInf, false});
  const double lam = std::pow(R, -g.dim / lambda) * lp_norm(pair.u, outer, NormSpec{lambda, false});
  MoserResult out;
  out.record = linear_record("moser_sup", center, R, sup, {{"lambda_norm", lam}, {"R", R}});
  out.record.note = "lambda=" + std::to_string(lambda);
  const double k = lambda - gamma + 1.0;
  for (double th = lambda; th <= kMoserThetaCap; th *= 1.0 + 1.0 / g.dim) {
    out.thetas.push_back(th);
    out.trace.push_back(a_rk(pair.u, center, R, k, th));
  }
  out.thetas.push_back(kInf);
  out.trace.push_back(a_rk(pair.u, center, R, k, kInf));
  return out;
}

InequalityRecord harnack_ratio(const SolutionPair& pair, const Point& center, double R) {
  require_pair(pair);
  const GridGeometry& g = pair.u.geometry();
  const Ball outer{center, 2.0 * R};
  require_ball_inside(g, outer);
  require_nonnegative_on(pair.u, outer, "Harnack", false);
  const Ball ball{center, R};
  const double mx = lp_norm(pair.u, ball, NormSpec{kInf, false});
  const double mn = lp_norm(pair.u, ball, NormSpec{-kInf, false});
  auto r = linear_record("harnack", center, R, mx, {{"min", mn}, {"R", R}});
  r.asserted = false;
  return r;
}

double harnack_mu(double C) {
  if (!(C > 1.0)) return 0.0;
  return -std::log2((C - 1.0) / (C + 1.0));
}

JohnNirenbergResult log_jn_diagnostic(const SolutionPair& pair, const Point& center, double R,
                                      const std::vector<double>& epsilon_grid, double ratio_cap,
                                      double bound_cap) {
  require_pair(pair);
  const GridGeometry& g = pair.u.geometry();
  const Ball ball{center, R};
  require_ball_inside(g, ball);
  require_nonnegative_on(pair.u, ball, "John-Nirenberg diagnostic", false);
  const VectorField Du = gradient(pair.u);
  ScalarField::Values dv(g.size());
  for (Index k = 0; k < g.size(); ++k)
    dv[k] = Du.components().row(k).matrix().norm() / (std::max(pair.u[k], 0.0) + R);
  const ScalarField Dv(g, std::move(dv));

  std::vector<Point> centres{center};
  const std::vector<double> offsets = g.dim == 1 ? std::vector<double>{0.25 * R, 0.5 * R}
                                                 : std::vector<double>{0.5 * R};
  for (double off : offsets) {
    for (int a = 0; a < g.dim; ++a) {
      for (double sgn : {-1.0, 1.0}) {
        Point c = center;
        c[a] += sgn * off;
        centres.push_back(c);
      }
    }
  }
  JohnNirenbergResult out;
  for (const Point& c : centres) {
    for (double frac : {1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0}) {
      const double r = frac * R;
      const auto q = ball_quadrature(g, Ball{c, r});
      double l1 = 0.0;
      for (std::size_t i = 0; i < q.cells.size(); ++i) l1 += q.weights[i] * Dv[q.cells[i]];
      out.hypothesis_bound = std::max(out.hypothesis_bound, std::pow(r, 1.0 - g.dim) * l1);
    }
  }
  const ScalarField ev(g, (pair.u.values().max(0.0) + R).eval());
  for (double eps : epsilon_grid) {
    if (!(eps > 0.0)) throw DomainError("epsilon grid entries must be positive");
    const double hi = scale_invariant_norm(ev, ball, eps);
    const double lo = scale_invariant_norm(ev, ball, -eps);
    const double ratio = hi / lo;
    out.epsilons.push_back(eps);
    out.ratios.push_back(ratio);
    if (ratio <= ratio_cap && (!out.epsilon || eps > *out.epsilon)) out.epsilon = eps;
  }
  out.inconclusive = !out.epsilon || out.hypothesis_bound > bound_cap;
  return out;
}

std::vector<double> chain_radii(const GridGeometry& g, const BallChain& chain) {
  if (!(chain.R0 > 0.0)) throw DomainError("ball chain needs R0 > 0");
  if (chain.center.size() != g.dim) throw DomainError("ball chain centre has the wrong dimension");
  if (!chain.clip) require_ball_inside(g, Ball{chain.center, chain.R0});
  std::vector<double> radii;
  double r = chain.R0;
  for (int j = 0; j < chain.max_levels; ++j, r *= 0.5) {
    const auto q = ball_quadrature(g, Ball{chain.center, r});
    if (static_cast<int>(q.covered.size()) < chain.min_cells) break;
    radii.push_back(r);
  }
  return radii;
}

OscDecay osc_decay(const SolutionPair& pair, const BallChain& chain) {
  const GridGeometry& g = pair.u.geometry();
  OscDecay out;
  out.radii = chain_radii(g, chain);
  for (double r : out.radii) out.osc.push_back(oscillation(pair.u, Ball{chain.center, r}));
  for (std::size_t j = 1; j < out.radii.size(); ++j) {
    OscStep s;
    s.R = out.radii[j];
    s.osc = out.osc[j];
    s.osc_parent = out.osc[j - 1];
    if (s.osc > s.osc_parent * (1.0 + 1e-12) + 1e-300) out.monotone = false;
    if (!(s.osc_parent >= kDegenerateDenominator)) {
      s.degenerate = true;
      s.ratio = s.mu = std::numeric_limits<double>::quiet_NaN();
    } else {
      s.ratio = (s.osc - 2.0 * s.R) / s.osc_parent;
      if (!(s.ratio > 0.0)) {
        s.degenerate = true;
        s.mu = std::numeric_limits<double>::quiet_NaN();
      } else {
        s.ratio = std::min(s.ratio, 1.0);
        s.mu = -std::log2(s.ratio);
      }
    }
    out.steps.push_back(s);
  }
  return out;
}

HolderFit holder_fit(const ScalarField& u, const BallChain& chain, int drop_first) {
  HolderFit out;
  const auto radii = chain_radii(u.geometry(), chain);
  for (std::size_t j = static_cast<std::size_t>(std::max(drop_first, 0)); j < radii.size(); ++j) {
    out.radii.push_back(radii[j]);
    out.osc.push_back(oscillation(u, Ball{chain.center, radii[j]}));
  }
  const LinearFit f = loglog_fit(out.radii, out.osc);
  if (f.n < 2) throw DomainError("Hölder fit needs at least two scales with positive oscillation");
  out.mu_hat = f.slope;
  out.intercept = f.intercept;
  out.r2 = f.r2;
  return out;
}

HolderFit holder_fit(const SolutionPair& pair, const BallChain& chain, int drop_first) {
  return holder_fit(pair.u, chain, drop_first);
}

}  // namespace mfg
