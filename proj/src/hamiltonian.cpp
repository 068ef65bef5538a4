#include "mfg_lab/hamiltonian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void require_positive_density(double m) {
  if (!(m > 0.0)) throw NonPositiveDensity("m = " + fmt(m) + " (requires m > 0)");
}

double rel_err(double lhs, double rhs) {
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
}

// Value along m_k = 10^{-2k}, k = 2..8; the last finite iterate if the
// sequence settles, +-inf if it blows up.
template <typename Fn>
double limit_at_zero(Fn&& fn) {
  double last = fn(1e-4);
  for (int k = 3; k <= 8; ++k) {
    const double v = fn(std::pow(10.0, -2.0 * k));
    if (!std::isfinite(v) || std::abs(v) > 1e150) return v > 0 ? kInf : -kInf;
    last = v;
  }
  return last;
}

}  // namespace

HamiltonianParams derive_params(double alpha, double tau, double beta, double epsilon) {
  for (double v : {alpha, tau, beta, epsilon})
    if (!std::isfinite(v)) throw ParamConstraintViolation("exponents must be finite");
  if (!(alpha > 1.0)) throw ParamConstraintViolation("alpha > 1 violated (alpha = " + fmt(alpha) + ")");
  if (!(tau >= 0.0 && tau < 1.0))
    throw ParamConstraintViolation("0 <= tau < 1 violated (tau = " + fmt(tau) + ")");
  if (!(beta > tau / (alpha - 1.0)))
    throw ParamConstraintViolation("beta > tau/(alpha-1) violated (beta = " + fmt(beta) +
                                   ", tau/(alpha-1) = " + fmt(tau / (alpha - 1.0)) + ")");
  if (!(epsilon > 0.0)) throw ParamConstraintViolation("epsilon > 0 violated");
  HamiltonianParams p;
  p.alpha = alpha;
  p.tau = tau;
  p.beta = beta;
  p.epsilon = epsilon;
  p.delta = (beta + tau) / alpha;
  p.gamma = (beta + 1.0) / p.delta;
  p.gamma_conj = p.gamma / (p.gamma - 1.0);
  if (!(beta - p.delta > epsilon))
    throw ParamConstraintViolation("beta - delta > epsilon violated (beta - delta = " +
                                   fmt(beta - p.delta) + ", epsilon = " + fmt(epsilon) + ")");
  return p;
}

double identity_residual(const HamiltonianParams& p) {
  const double r1 = rel_err(p.gamma * p.delta, p.beta + 1.0);
  const double r2 = rel_err(p.delta * (p.gamma - p.alpha), 1.0 - p.tau);
  const double r3 = rel_err(p.delta * (p.gamma - 1.0), p.beta + 1.0 - p.delta);
  return std::max({r1, r2, r3});
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Standard: return "standard";
    case ModelKind::SeparableGamma: return "separable_gamma";
    case ModelKind::Custom: return "custom";
  }
  return "unknown";
}

HamiltonianModel HamiltonianModel::standard(const HamiltonianParams& params, Coefficient a,
                                            Coefficient b, std::vector<LowerOrderTerm> terms) {
  HamiltonianModel model;
  model.params_ = params;
  model.kind_ = ModelKind::Standard;
  model.a_ = std::move(a);
  model.b_ = std::move(b);
  for (const auto& t : terms)
    if (!t.f) throw ParamConstraintViolation("lower-order term without f(m)");
  model.terms_ = std::move(terms);
  return model;
}

HamiltonianModel HamiltonianModel::separable_gamma(double gamma, std::optional<double> epsilon) {
  const double alpha = gamma / 2.0;
  if (!(alpha > 1.0))
    throw ParamConstraintViolation("alpha > 1 violated (gamma = " + fmt(gamma) + " gives alpha = " +
                                   fmt(alpha) + ")");
  const double delta = 1.0 / alpha;
  const double eps = epsilon.value_or((1.0 - delta) / 2.0);
  HamiltonianModel model = standard(derive_params(alpha, 0.0, 1.0, eps), Coefficient(2.0 / gamma));
  model.kind_ = ModelKind::SeparableGamma;
  return model;
}

HamiltonianModel HamiltonianModel::custom(const HamiltonianParams& params, HFn h, GradFn grad,
                                          bool radial, int probe_dim) {
  if (!h) throw ParamConstraintViolation("custom model needs H");
  HamiltonianModel model;
  model.params_ = params;
  model.kind_ = ModelKind::Custom;
  model.custom_h_ = std::move(h);
  model.radial_ = radial;
  if (grad) {
    model.custom_grad_ = std::move(grad);
    const Point x = probe_dim == 1 ? make_point(0.0) : make_point(0.0, 0.0);
    const std::array<std::array<double, 2>, 3> probes{{{0.7, -0.3}, {1.5, 0.4}, {-2.2, 1.1}}};
    for (const auto& pr : probes) {
      const Point p = probe_dim == 1 ? make_point(pr[0]) : make_point(pr[0], pr[1]);
      for (double m : {0.5, 1.0, 2.0}) {
        const Point g = model.custom_grad_(x, p, m);
        const Point fd = finite_difference_dph(model, x, p, m, 1e-5 * std::max(1.0, p.norm()));
        const double err = (g - fd).norm() / std::max(fd.norm(), 1e-8);
        if (!(err <= 1e-5))
          throw GradientMismatch("supplied D_pH differs from finite differences by relative " +
                                 fmt(err) + " at |p| = " + fmt(p.norm()) + ", m = " + fmt(m));
      }
    }
  }
  return model;
}

double HamiltonianModel::h(const Point& x, const Point& p, double m) const {
  require_positive_density(m);
  double value;
  if (kind_ == ModelKind::Custom) {
    value = custom_h_(x, p, m);
  } else {
    const double pn = p.norm();
    value = a_(x) * std::pow(pn, params_.alpha) / std::pow(m, params_.tau) -
            b_(x) * std::pow(m, params_.beta);
    for (const auto& t : terms_) {
      const double pw = t.theta == 0.0 ? 1.0 : std::pow(pn, t.theta);
      value += t.c(x) * t.f(m) * pw;
    }
  }
  if (std::isnan(value)) throw EvaluationFailure("H is NaN at m = " + fmt(m));
  return value;
}

Point HamiltonianModel::dph(const Point& x, const Point& p, double m) const {
  require_positive_density(m);
  if (kind_ == ModelKind::Custom) {
    if (custom_grad_) return custom_grad_(x, p, m);
    return finite_difference_dph(*this, x, p, m, 1e-6 * std::max(1.0, p.norm()));
  }
  const double pn = p.norm();
  Point g = Point::Zero(p.size());
  if (pn == 0.0) return g;
  g = p * (a_(x) * params_.alpha * std::pow(pn, params_.alpha - 2.0) / std::pow(m, params_.tau));
  for (const auto& t : terms_) {
    if (t.theta == 0.0) continue;
    g += p * (t.c(x) * t.f(m) * t.theta * std::pow(pn, t.theta - 2.0));
  }
  return g;
}

double HamiltonianModel::h_at_zero(const Point& x, const Point& p) const {
  if (kind_ == ModelKind::Custom) return limit_at_zero([&](double m) { return h(x, p, m); });
  const double pn = p.norm();
  double value = 0.0;
  if (pn > 0.0) value = params_.tau > 0.0 ? kInf : a_(x) * std::pow(pn, params_.alpha);
  for (const auto& t : terms_) {
    const double pw = t.theta == 0.0 ? 1.0 : std::pow(pn, t.theta);
    if (pw == 0.0) continue;
    value += t.c(x) * pw * limit_at_zero([&](double m) { return t.f(m); });
  }
  return value;
}

Point HamiltonianModel::dph_at_zero(const Point& x, const Point& p) const {
  Point g(p.size());
  for (Index i = 0; i < p.size(); ++i)
    g[i] = limit_at_zero([&](double m) { return dph(x, p, m)[i]; });
  return g;
}

double eval_h(const HamiltonianModel& model, const Point& x, const Point& p, double m) {
  return model.h(x, p, m);
}

Point eval_dph(const HamiltonianModel& model, const Point& x, const Point& p, double m) {
  return model.dph(x, p, m);
}

Point finite_difference_dph(const HamiltonianModel& model, const Point& x, const Point& p, double m,
                            double step) {
  Point g(p.size());
  for (Index i = 0; i < p.size(); ++i) {
    Point pp = p, pm = p;
    pp[i] += step;
    pm[i] -= step;
    g[i] = (model.h(x, pp, m) - model.h(x, pm, m)) / (2.0 * step);
  }
  return g;
}

namespace {

// Maximises phi on [0, s_max]: coarse scan then golden section on the
// neighbouring samples of the best one.
template <typename Fn>
double radial_max(Fn&& phi, const RadialBracket& br) {
  if (!(br.s_max > 0.0) || br.coarse_samples < 3) throw BracketTooSmall("invalid radial bracket");
  const int n = br.coarse_samples;
  const double ds = br.s_max / (n - 1);
  int best = 0;
  double best_val = phi(0.0);
  for (int i = 1; i < n; ++i) {
    const double v = phi(ds * i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == n - 1)
    throw BracketTooSmall("maximiser reached s_max = " + fmt(br.s_max) + "; enlarge the bracket");
  double lo = ds * std::max(0, best - 1), hi = ds * (best + 1);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - ratio * (hi - lo), d = lo + ratio * (hi - lo);
  double fc = phi(c), fd = phi(d);
  const double tol = br.rel_tol * br.s_max;
  for (int it = 0; it < 300 && hi - lo > tol; ++it) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - ratio * (hi - lo);
      fc = phi(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + ratio * (hi - lo);
      fd = phi(d);
    }
  }
  return std::max({best_val, fc, fd, phi(0.5 * (lo + hi))});
}

}  // namespace

double legendre_lagrangian(const HamiltonianModel& model, const Point& x, const Point& v, double m,
                           const RadialBracket& search) {
  require_positive_density(m);
  const double vn = v.norm();
  if (model.radial()) {
    Point dir = Point::Zero(v.size());
    if (vn > 0.0)
      dir = -v / vn;
    else
      dir[0] = 1.0;
    return radial_max([&](double s) { return s * vn - model.h(x, s * dir, m); }, search);
  }
  // Multi-start compass search on -v.p - H(p).
  auto obj = [&](const Point& p) { return -v.dot(p) - model.h(x, p, m); };
  const Index d = v.size();
  std::vector<Point> starts{Point::Zero(d)};
  for (Index i = 0; i < d; ++i) {
    for (double sgn : {-1.0, 1.0}) {
      Point s = Point::Zero(d);
      s[i] = sgn * std::max(1.0, vn);
      starts.push_back(s);
    }
  }
  double best = -kInf;
  for (Point p : starts) {
    double f = obj(p);
    double step = std::max(1.0, vn);
    while (step > search.rel_tol * search.s_max) {
      bool moved = false;
      for (Index i = 0; i < d; ++i) {
        for (double sgn : {-1.0, 1.0}) {
          Point q = p;
          q[i] += sgn * step;
          const double fq = obj(q);
          if (fq > f) {
            p = q;
            f = fq;
            moved = true;
          }
        }
      }
      if (!moved) step *= 0.5;
      if (p.norm() > search.s_max) throw BracketTooSmall("coordinate search left the bracket");
    }
    best = std::max(best, f);
  }
  return best;
}

double paper_lagrangian(const HamiltonianParams& params, double v_norm, double m) {
  const double ap = params.alpha / (params.alpha - 1.0);
  return std::pow(m, params.tau / (params.alpha - 1.0)) * std::pow(v_norm, ap) / ap +
         std::pow(m, params.beta);
}

double lagrangian_velocity_factor(const HamiltonianParams& params) {
  return std::pow(params.alpha, -1.0 / (params.alpha - 1.0));
}

double envelope_lower(const HamiltonianParams& params, double p_norm, double m, double C) {
  const double mt = m == 0.0 ? (params.tau == 0.0 ? 1.0 : 0.0) : std::pow(m, params.tau);
  const double mb = m == 0.0 ? 0.0 : std::pow(m, params.beta);
  return std::pow(p_norm, params.alpha) / (C * (mt + 1.0)) - C * mb - C;
}

double envelope_upper(const HamiltonianParams& params, double p_norm, double m, double C) {
  if (m < C)
    throw EnvelopeNotApplicable("m = " + fmt(m) + " is below the threshold C = " + fmt(C));
  return C * std::pow(p_norm, params.alpha) / std::pow(m, params.tau) - std::pow(m, params.beta) / C;
}

}  // namespace mfg
