#pragma once

// Sampling checks of the structural assumptions on H. Every check estimates
// the smallest constant C that makes its inequality hold over a lattice of
// (x, p, m) samples and fits the asymptotic exponents on the lattice edges.

#include <map>
#include <string>
#include <vector>

#include "mfg_lab/hamiltonian.hpp"

namespace mfg {

struct SampleLattice {
  std::vector<Point> x_points;
  std::vector<double> p_magnitudes;
  std::vector<Point> p_directions;
  std::vector<double> m_values;

  int dim() const { return x_points.empty() ? 2 : static_cast<int>(x_points.front().size()); }
  void validate() const;
};

/// |p| in [1e-3, 1e4] and m in [1e-4, 1e4], `per_decade` log-spaced points,
/// `directions` unit vectors (two in 1-D), one x sample at the origin.
SampleLattice default_lattice(int dim = 2, int per_decade = 8, int directions = 8);

/// Same ranges with twice the density in p, m and directions.
SampleLattice refine(const SampleLattice& lattice);

struct AssumptionTolerances {
  double slope_tol = 0.05;
  /// Edge growth slope above which a constant is treated as unbounded.
  double finite_slope_tol = 0.25;
  double fit_decades = 2.0;
};

struct Witness {
  bool present = false;
  Point x;
  Point p;
  double m = 0.0;
};

struct CheckRecord {
  std::string check_id;
  /// Reported constant, floored at 1; +inf if the lattice shows no bound.
  double estimated_C = 0.0;
  double raw_C = 0.0;
  std::map<std::string, double> fitted;
  bool pass = false;
  Witness witness;
  std::string note;
};

struct AssumptionReport {
  std::vector<CheckRecord> records;
  bool lions = false;
  bool all_pass() const;
  const CheckRecord* find(const std::string& id) const;
};

CheckRecord check_a0(const HamiltonianModel& model, const SampleLattice& lattice,
                     const AssumptionTolerances& tol = {});
CheckRecord check_a1(const HamiltonianModel& model, const SampleLattice& lattice,
                     const AssumptionTolerances& tol = {});
/// Also estimates the constant for the relaxed slack eps~ in {0, eps/2, eps};
/// `estimated_C` is the one for eps~ = eps.
CheckRecord check_a2(const HamiltonianModel& model, const SampleLattice& lattice,
                     const AssumptionTolerances& tol = {});
/// `estimated_C` covers the lower bound; fitted["threshold_C"] is the
/// smallest C for which the upper bound holds on {m >= C}.
CheckRecord check_a3(const HamiltonianModel& model, const SampleLattice& lattice,
                     const AssumptionTolerances& tol = {});

struct EnvelopeConstants {
  double lower = 0.0;
  double upper = 0.0;
};

/// Envelope constants obtained from the A.1-A.3 constants by the
/// fundamental-theorem-of-calculus argument plus Young's inequality.
EnvelopeConstants inflate_envelope_constants(const HamiltonianParams& params, double c1,
                                             double c2_eps0, double c3_lower, double c3_threshold);

CheckRecord check_lemma_envelopes(const HamiltonianModel& model, const SampleLattice& lattice,
                                  const AssumptionTolerances& tol = {});

/// One record per lower-order term, checking the first or second sufficient
/// condition by sign checks and edge slope fits.
std::vector<CheckRecord> check_lower_order_terms(const HamiltonianModel& model,
                                                 const SampleLattice& lattice,
                                                 const AssumptionTolerances& tol = {});

/// tau * alpha' <= 4. Informational.
bool check_lions(const HamiltonianParams& params);

/// Re-evaluates the inequality behind `check_id` ("A1", "A2", "A3.lower",
/// "A3.upper") on every lattice sample with the given constant.
bool holds_with_constant(const HamiltonianModel& model, const SampleLattice& lattice,
                         const std::string& check_id, double C, double eps_tilde = -1.0);

/// A.0 to A.3, the envelopes and lower-order terms.
AssumptionReport run_assumption_suite(const HamiltonianModel& model, const SampleLattice& lattice,
                                      const AssumptionTolerances& tol = {});

}  // namespace mfg
