#pragma once

// Measurements of the regularity inequalities on a solved (u, m) pair:
// weak-solution residuals, pointwise density bounds, Caccioppoli, reverse
// Hölder steps, Moser sup bounds, Harnack, John-Nirenberg, oscillation decay
// and Hölder exponent fits. Every inequality is reported with the smallest
// constant that makes it hold on the given data.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfg_lab/grid.hpp"
#include "mfg_lab/hamiltonian.hpp"
#include "mfg_lab/solver.hpp"

namespace mfg {

/// Ratios whose denominator falls below this are degenerate.
inline constexpr double kDegenerateDenominator = 1e-14;
/// Constants above this cap count as "not finite".
inline constexpr double kDefaultCCap = 1e6;

struct InequalityRecord {
  /// lhs <= C rhs, or lhs <= (C theta^2)^{gamma/theta} rhs for reverse Hölder
  /// steps (lhs >= ... when `reversed`).
  enum class Form { Linear, Power };

  std::string name;
  Point center;
  double R = 0.0;
  double lhs = 0.0;
  std::map<std::string, double> rhs_terms;
  double rhs = 0.0;
  double estimated_C = 0.0;
  double c_cap = kDefaultCCap;
  Form form = Form::Linear;
  double theta = 0.0;
  double gamma = 0.0;
  bool reversed = false;
  bool degenerate = false;
  /// Estimate-only records never fail a run.
  bool asserted = true;
  bool pass = false;
  std::string note;

  bool holds_with(double C) const;
};

/// Smallest-constant record for lhs <= C rhs.
InequalityRecord linear_record(std::string name, const Point& center, double R, double lhs,
                               std::map<std::string, double> rhs_terms, double c_cap = kDefaultCCap);

struct HjbSummary {
  ScalarField h;
  double max_abs_on_support = 0.0;  ///< max |h| on {m > 0}
  double max_on_zero_set = -HUGE_VAL;  ///< max h on {m = 0}
  Index support_cells = 0;
  Index zero_cells = 0;
  bool pass = false;
};

/// h = H(x, Du, m) on interior cells (0 on the boundary ring); on {m = 0}
/// the m -> 0+ limit. Passes iff |h| <= tol on {m > 0} and h <= tol on {m = 0}.
HjbSummary hjb_residual(const SolutionPair& pair, const HamiltonianModel& model, double tol = 1e-10);

struct TransportResidual {
  Point center;
  double scale = 0.0;
  double raw = 0.0;         ///< sum j . Dphi h^d
  double normalized = 0.0;  ///< |raw| / (||j||_{gamma'} ||Dphi||_gamma)
  bool degenerate = false;  ///< j or Dphi vanishes; normalized set to |raw|
};

/// j = m D_pH(x, Du, m), taken as 0 on {m = 0}; Dphi is the exact gradient.
std::vector<TransportResidual> transport_residual(const SolutionPair& pair, const HamiltonianModel& model,
                                                  const std::vector<TestFunction>& family);

struct PointwiseBounds {
  double C_upper = 0.0;  ///< smallest C with m <= C |Du|^{1/delta} + C
  double C_lower = 0.0;  ///< smallest C with m >= |Du|^{1/delta} / C - C
  bool finite = false;   ///< both below the C cap
};

PointwiseBounds pointwise_bound_constant(const SolutionPair& pair, const HamiltonianParams& params,
                                         double c_cap = kDefaultCCap);

/// f with f'(u) = scale (min(|u|, M) + R)^{Q-1}, Q = gamma (q - 1) + 1 > 0,
/// odd in u.
struct CaccioppoliSpec {
  double q = 1.0;
  double R = 0.1;
  double M = 1e6;
  double scale = 1.0;
};

InequalityRecord caccioppoli_check(const SolutionPair& pair, const Ball& inner, const Ball& outer,
                                   const CaccioppoliSpec& f);

enum class SignMode { Unsigned, Signed };

/// a_{R,k}(theta (1 + 1/d)) against (C theta^2)^{gamma/theta} a_{R,k}(theta).
InequalityRecord reverse_holder_step(const SolutionPair& pair, const Point& center, double R, double k,
                                     double theta, SignMode mode);

struct MoserResult {
  InequalityRecord record;
  std::vector<double> thetas;  ///< lambda (1 + 1/d)^j up to the cap, then +inf
  std::vector<double> trace;   ///< a_{R,k}(theta_j), k = lambda - gamma + 1
};

inline constexpr double kMoserThetaCap = 512.0;

MoserResult moser_sup_bound(const SolutionPair& pair, const Point& center, double R, double lambda);

/// max_{B_R} u <= C (min_{B_R} u + R); estimate-only. Throws SignViolation
/// if u < 0 somewhere on B_{2R}.
InequalityRecord harnack_ratio(const SolutionPair& pair, const Point& center, double R);

/// 2^{-mu} = (C - 1)/(C + 1); 0 for C <= 1.
double harnack_mu(double C);

struct JohnNirenbergResult {
  double hypothesis_bound = 0.0;  ///< max r^{1-d} ||Dv||_{L^1(B_r)} over the sampled balls
  std::vector<double> epsilons;
  std::vector<double> ratios;     ///< power-mean ratio avg_eps(e^v) / avg_{-eps}(e^v)
  std::optional<double> epsilon;  ///< largest eps with ratio <= ratio_cap
  bool inconclusive = false;
};

/// v = log(u + R) on B_R, u >= 0 required. Balls: 5 centres x 4 radii inside
/// B_R. The constant of the corollary is reported relative to the volume
/// factor of a constant field, i.e. as a ratio of power means.
JohnNirenbergResult log_jn_diagnostic(const SolutionPair& pair, const Point& center, double R,
                                      const std::vector<double>& epsilon_grid, double ratio_cap = 2.0,
                                      double bound_cap = 100.0);

/// Concentric dyadic balls R_j = 2^{-j} R0, stopped before a ball covers
/// fewer than `min_cells` cell centres. With `clip` the balls may leave the
/// grid and only their part inside the grid is used.
struct BallChain {
  Point center;
  double R0 = 0.0;
  int max_levels = 12;
  int min_cells = 16;
  bool clip = false;
};

std::vector<double> chain_radii(const GridGeometry& g, const BallChain& chain);

struct OscStep {
  double R = 0.0;
  double osc = 0.0;
  double osc_parent = 0.0;
  double ratio = 0.0;  ///< (osc - 2R)/osc_parent, clamped to at most 1
  double mu = 0.0;
  bool degenerate = false;
};

struct OscDecay {
  std::vector<double> radii;
  std::vector<double> osc;
  std::vector<OscStep> steps;
  bool monotone = true;  ///< osc non-decreasing in r
};

OscDecay osc_decay(const SolutionPair& pair, const BallChain& chain);

struct HolderFit {
  double mu_hat = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<double> radii;
  std::vector<double> osc;
};

HolderFit holder_fit(const SolutionPair& pair, const BallChain& chain, int drop_first = 0);
HolderFit holder_fit(const ScalarField& u, const BallChain& chain, int drop_first = 0);

}  // namespace mfg
