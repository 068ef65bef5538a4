#pragma once

// Hamiltonian models H(x, p, m), the exponent algebra (alpha, tau, beta,
// epsilon) -> (delta, gamma, gamma'), Legendre duality and the analytic
// envelopes that every admissible H must sit between.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfg_lab/grid.hpp"

namespace mfg {

struct HamiltonianParams {
  double alpha = 0.0;
  double tau = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  double gamma_conj = 0.0;
};

/// Validates the primary exponents and fills in the derived ones.
/// Throws ParamConstraintViolation naming the first violated inequality.
HamiltonianParams derive_params(double alpha, double tau, double beta, double epsilon);

/// Largest relative error among the three exponent identities.
double identity_residual(const HamiltonianParams& p);

/// A coefficient that is either a constant or a function of position.
class Coefficient {
 public:
  Coefficient(double c = 1.0) : constant_(c) {}  // NOLINT(google-explicit-constructor)
  explicit Coefficient(std::function<double(const Point&)> fn) : fn_(std::move(fn)) {}

  double operator()(const Point& x) const { return fn_ ? fn_(x) : constant_; }
  bool is_constant() const { return !fn_; }

 private:
  double constant_ = 1.0;
  std::function<double(const Point&)> fn_;
};

/// c(x) f(m) |p|^theta.
struct LowerOrderTerm {
  Coefficient c;
  std::function<double(double)> f;
  double theta = 0.0;
  std::string label;
};

enum class ModelKind { Standard, SeparableGamma, Custom };

std::string to_string(ModelKind kind);

class HamiltonianModel {
 public:
  using HFn = std::function<double(const Point& x, const Point& p, double m)>;
  using GradFn = std::function<Point(const Point& x, const Point& p, double m)>;

  /// a(x)|p|^alpha / m^tau - b(x) m^beta + sum c(x) f(m) |p|^theta.
  static HamiltonianModel standard(const HamiltonianParams& params, Coefficient a = 1.0,
                                   Coefficient b = 1.0, std::vector<LowerOrderTerm> terms = {});

  /// (2/gamma)|p|^{gamma/2} - m, read as a standard model with
  /// alpha = gamma/2, tau = 0, beta = 1. Epsilon defaults to (beta - delta)/2.
  static HamiltonianModel separable_gamma(double gamma, std::optional<double> epsilon = {});

  /// User-supplied H. Without `grad` the p-gradient is taken by central
  /// differences. A supplied `grad` is checked against central differences
  /// on a small probe set (GradientMismatch on failure). `radial` selects the
  /// radial Legendre maximisation.
  static HamiltonianModel custom(const HamiltonianParams& params, HFn h, GradFn grad = {},
                                 bool radial = true, int probe_dim = 2);

  const HamiltonianParams& params() const { return params_; }
  ModelKind kind() const { return kind_; }
  bool radial() const { return radial_; }
  const std::vector<LowerOrderTerm>& lower_order_terms() const { return terms_; }
  const Coefficient& a() const { return a_; }
  const Coefficient& b() const { return b_; }

  /// Throws NonPositiveDensity for m <= 0.
  double h(const Point& x, const Point& p, double m) const;
  Point dph(const Point& x, const Point& p, double m) const;

  /// Limits along m -> 0+ at fixed p, used on {m = 0}. For the standard model
  /// with tau > 0 and p != 0 the limit is +inf.
  double h_at_zero(const Point& x, const Point& p) const;
  Point dph_at_zero(const Point& x, const Point& p) const;

 private:
  HamiltonianParams params_;
  ModelKind kind_ = ModelKind::Standard;
  Coefficient a_ = 1.0;
  Coefficient b_ = 1.0;
  std::vector<LowerOrderTerm> terms_;
  HFn custom_h_;
  GradFn custom_grad_;
  bool radial_ = true;
};

double eval_h(const HamiltonianModel& model, const Point& x, const Point& p, double m);
Point eval_dph(const HamiltonianModel& model, const Point& x, const Point& p, double m);

/// Central-difference p-gradient of H with step `step`.
Point finite_difference_dph(const HamiltonianModel& model, const Point& x, const Point& p, double m,
                            double step);

/// Radial search bracket [0, s_max] for the Legendre maximisation.
struct RadialBracket {
  double s_max = 1e3;
  int coarse_samples = 400;
  double rel_tol = 1e-8;
};

/// L(x, v, m) = sup_p (-v.p - H(x, p, m)). Radial models maximise along the
/// ray p = -s v/|v|; anisotropic custom models use a multi-start coordinate
/// search, which is approximate. Throws BracketTooSmall if the maximiser
/// sits on s_max.
double legendre_lagrangian(const HamiltonianModel& model, const Point& x, const Point& v, double m,
                           const RadialBracket& search = {});

/// The closed-form m^{tau/(alpha-1)}|v|^{alpha'}/alpha' + m^beta. It differs
/// from the exact transform of |p|^alpha/m^tau - m^beta by a constant factor
/// on the |v| term; see `lagrangian_velocity_factor`.
double paper_lagrangian(const HamiltonianParams& params, double v_norm, double m);

/// Exact transform of |p|^alpha/m^tau - m^beta divided by the closed form
/// above, for the velocity part: alpha^{-1/(alpha-1)}.
double lagrangian_velocity_factor(const HamiltonianParams& params);

/// |p|^alpha / (C (m^tau + 1)) - C m^beta - C, valid for m >= 0.
double envelope_lower(const HamiltonianParams& params, double p_norm, double m, double C);

/// C |p|^alpha / m^tau - m^beta / C. Throws EnvelopeNotApplicable if m < C.
double envelope_upper(const HamiltonianParams& params, double p_norm, double m, double C);

}  // namespace mfg
