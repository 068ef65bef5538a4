#pragma once

// Separable variational MFG: minimise the integral of G(H0(Du)) with
// H0(p) = c (2/gamma)|p|^{gamma/2} under Dirichlet data, then recover
// m = G'(H0(Du)).

#include <string>
#include <vector>

#include "mfg_lab/grid.hpp"
#include "mfg_lab/hamiltonian.hpp"

namespace mfg {

/// G(z) = z^s / s for z >= 0; s = 2 is the quadratic coupling.
struct Coupling {
  double s = 2.0;

  static Coupling quadratic() { return {2.0}; }
  static Coupling power(double s);

  bool is_quadratic() const { return s == 2.0; }
  double G(double z) const;
  double dG(double z) const;
  /// (G')^{-1}(m) = m^{1/(s-1)}.
  double dG_inverse(double m) const;
};

struct VariationalProblem {
  GridGeometry grid;
  double gamma = 4.0;
  double h0_coeff = 1.0;
  Coupling G;
  /// Only the values on the outer ring of cells are used.
  ScalarField boundary;

  double h0(double p_norm) const;
  double dh0(double p_norm) const;
  void validate() const;
};

/// Problem on `grid` whose boundary data is `fn` sampled at cell centres.
template <typename Fn>
VariationalProblem make_problem(const GridGeometry& grid, double gamma, Fn&& fn,
                                Coupling G = Coupling::quadratic(), double h0_coeff = 1.0) {
  VariationalProblem p{grid, gamma, h0_coeff, G, ScalarField::sample(grid, std::forward<Fn>(fn))};
  p.validate();
  return p;
}

struct MinimizeOptions {
  int max_iters = 4000;
  /// Bound on max_k |dE/du_k| / h^d over the unknowns.
  double grad_tol = 1e-9;
  double armijo = 1e-4;
  int max_backtracks = 60;
  /// Re-assembly period of the weighted-Laplacian preconditioner.
  int precond_refresh = 8;
};

struct SolverDiagnostics {
  int iterations = 0;
  double final_grad_norm = 0.0;
  double energy = 0.0;
  bool converged = false;
  bool energy_monotone = true;
  std::vector<double> energy_history;
  std::string message;
};

enum class Provenance { Solved, Loaded, Oracle };
std::string to_string(Provenance p);

struct SolutionPair {
  ScalarField u;
  ScalarField m;
  Provenance provenance = Provenance::Solved;
  double gamma = 0.0;
  SolverDiagnostics diagnostics;
};

/// Discrete energy. Gradients live on the corners of the dual cells
/// spanned by four neighbouring cell centres (segments in 1-D); each corner
/// gets a quarter of the dual cell volume. Regularised with
/// sqrt(|p|^2 + mu^2) when mu > 0.
double energy(const VariationalProblem& problem, const ScalarField& u, double mu = 0.0);

/// dE/du_k / h^d on interior cells, 0 on the boundary ring.
ScalarField energy_gradient(const VariationalProblem& problem, const ScalarField& u, double mu = 0.0);

/// Regularisation used by `minimize`: 1e-8 diam/h for gamma < 4, else 0.
double regularization(const VariationalProblem& problem);

/// Interior values from the discrete Laplace equation with the boundary data.
ScalarField harmonic_extension(const VariationalProblem& problem);

/// Preconditioned nonlinear conjugate gradients (Polak-Ribiere+), weighted
/// Laplacian preconditioner, line search with monotone energy. Returns the
/// last (lowest-energy) iterate, flagged if not converged.
SolutionPair minimize(const VariationalProblem& problem, const ScalarField& init,
                      const MinimizeOptions& opts = {});

/// m = G'(H0(Du)) with Du from `gradient`; negative round-off clamped to 0.
ScalarField recover_density(const VariationalProblem& problem, const ScalarField& u);

/// u = |x|^{(gamma-d)/(gamma-1)} on `grid`, m from the quadratic coupling.
/// Throws OriginInDomain if the origin lies strictly inside the box spanned
/// by the cell centres.
SolutionPair oracle_radial(double gamma, int d, const GridGeometry& grid);

/// H(x, p, m) = H0(p) - (G')^{-1}(m) as a standard model:
/// alpha = gamma/2, tau = 0, beta = 1/(s-1).
HamiltonianModel hamiltonian_of_problem(const VariationalProblem& problem);

}  // namespace mfg
