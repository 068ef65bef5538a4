#include "mfg_lab/solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfg {

namespace {

// psi(r) = K r^q, the energy density as a function of |Du|.
struct Density {
  double K = 0.0;
  double q = 0.0;

  explicit Density(const VariationalProblem& P)
      : K(std::pow(2.0 * P.h0_coeff / P.gamma, P.G.s) / P.G.s), q(P.G.s * P.gamma / 2.0) {}

  double psi(double r) const { return K * std::pow(r, q); }
  // psi'(r) / r; at r = 0 the gradient contribution vanishes for q > 1.
  double omega(double r) const {
    if (r == 0.0) return q > 2.0 ? 0.0 : (q == 2.0 ? K * q : 0.0);
    return K * q * std::pow(r, q - 2.0);
  }
  // (psi''(r) - psi'(r)/r) / r^2, the coefficient of p p^T in the Hessian.
  double curvature(double r) const {
    if (r == 0.0) return 0.0;
    return K * q * (q - 2.0) * std::pow(r, q - 4.0);
  }
};

struct Edge {
  Index a, b;
  double w;
};

struct Accumulated {
  double energy = 0.0;
  Eigen::VectorXd grad;  // dE/du, raw
  std::vector<Edge> edges;
};

enum Want : unsigned { kEnergy = 1, kGrad = 2, kEdges = 4 };

// Visits every corner gradient of the staggered discretisation once. The
// edge list carries the weights of the plain staggered Laplacian.
Accumulated accumulate(const VariationalProblem& P, const Eigen::VectorXd& u, double mu, unsigned want) {
  const GridGeometry& g = P.grid;
  const Density dens(P);
  Accumulated acc;
  if (want & kGrad) acc.grad = Eigen::VectorXd::Zero(u.size());
  auto mag = [mu](double gx, double gy) { return std::sqrt(gx * gx + gy * gy + mu * mu); };
  if (g.dim == 1) {
    const double h = g.spacing[0];
    for (Index i = 0; i + 1 < g.shape[0]; ++i) {
      const double gx = (u[i + 1] - u[i]) / h;
      const double r = mag(gx, 0.0);
      if (want & kEnergy) acc.energy += h * dens.psi(r);
      if (want & kGrad) {
        const double t = h * dens.omega(r) * gx / h;
        acc.grad[i + 1] += t;
        acc.grad[i] -= t;
      }
      if (want & kEdges) acc.edges.push_back({i, i + 1, 1.0 / h});
    }
    return acc;
  }
  const double h0 = g.spacing[0], h1 = g.spacing[1];
  const double wq = 0.25 * h0 * h1;
  for (Index i = 0; i + 1 < g.shape[0]; ++i) {
    for (Index j = 0; j + 1 < g.shape[1]; ++j) {
      const Index k00 = g.flat(i, j), k10 = g.flat(i + 1, j), k01 = g.flat(i, j + 1), k11 = g.flat(i + 1, j + 1);
      const double ex0 = (u[k10] - u[k00]) / h0, ex1 = (u[k11] - u[k01]) / h0;
      const double ey0 = (u[k01] - u[k00]) / h1, ey1 = (u[k11] - u[k10]) / h1;
      const double r00 = mag(ex0, ey0), r10 = mag(ex0, ey1), r01 = mag(ex1, ey0), r11 = mag(ex1, ey1);
      if (want & kEnergy) acc.energy += wq * (dens.psi(r00) + dens.psi(r10) + dens.psi(r01) + dens.psi(r11));
      if (want & kGrad) {
        const double t00 = wq * dens.omega(r00), t10 = wq * dens.omega(r10), t01 = wq * dens.omega(r01),
                     t11 = wq * dens.omega(r11);
        const double dex0 = (t00 + t10) * ex0 / h0, dex1 = (t01 + t11) * ex1 / h0;
        const double dey0 = (t00 + t01) * ey0 / h1, dey1 = (t10 + t11) * ey1 / h1;
        acc.grad[k10] += dex0;
        acc.grad[k00] -= dex0;
        acc.grad[k11] += dex1;
        acc.grad[k01] -= dex1;
        acc.grad[k01] += dey0;
        acc.grad[k00] -= dey0;
        acc.grad[k11] += dey1;
        acc.grad[k10] -= dey1;
      }
      if (want & kEdges) {
        acc.edges.push_back({k00, k10, 2.0 * wq / (h0 * h0)});
        acc.edges.push_back({k01, k11, 2.0 * wq / (h0 * h0)});
        acc.edges.push_back({k00, k01, 2.0 * wq / (h1 * h1)});
        acc.edges.push_back({k10, k11, 2.0 * wq / (h1 * h1)});
      }
    }
  }
  return acc;
}

// Interior cells are the unknowns; -1 marks Dirichlet cells.
struct UnknownMap {
  std::vector<Index> of_cell;
  std::vector<Index> cells;

  explicit UnknownMap(const GridGeometry& g) : of_cell(static_cast<std::size_t>(g.size()), -1) {
    for (Index k = 0; k < g.size(); ++k) {
      if (g.is_boundary_cell(k)) continue;
      of_cell[static_cast<std::size_t>(k)] = static_cast<Index>(cells.size());
      cells.push_back(k);
    }
  }
  Index size() const { return static_cast<Index>(cells.size()); }
  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const {
    Eigen::VectorXd r(size());
    for (Index i = 0; i < size(); ++i) r[i] = full[cells[static_cast<std::size_t>(i)]];
    return r;
  }
};

// Weighted graph Laplacian on the unknowns; contributions of Dirichlet
// neighbours go to `rhs` when requested.
Eigen::SparseMatrix<double> assemble(const std::vector<Edge>& edges, const UnknownMap& map,
                                     const Eigen::VectorXd* u_full, Eigen::VectorXd* rhs) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(edges.size() * 4);
  if (rhs) *rhs = Eigen::VectorXd::Zero(map.size());
  for (const Edge& e : edges) {
    const Index ia = map.of_cell[static_cast<std::size_t>(e.a)], ib = map.of_cell[static_cast<std::size_t>(e.b)];
    if (ia >= 0) trip.emplace_back(ia, ia, e.w);
    if (ib >= 0) trip.emplace_back(ib, ib, e.w);
    if (ia >= 0 && ib >= 0) {
      trip.emplace_back(ia, ib, -e.w);
      trip.emplace_back(ib, ia, -e.w);
    } else if (rhs && u_full) {
      if (ia >= 0) (*rhs)[ia] += e.w * (*u_full)[e.b];
      if (ib >= 0) (*rhs)[ib] += e.w * (*u_full)[e.a];
    }
  }
  Eigen::SparseMatrix<double> A(map.size(), map.size());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

// Hessian of the discrete energy restricted to the unknowns: every corner
// contributes w B^T (omega I + curvature p p^T) B. A small multiple of the
// mean omega times the plain Laplacian keeps it definite where Du = 0.
Eigen::SparseMatrix<double> assemble_hessian(const VariationalProblem& P, const Eigen::VectorXd& u, double mu,
                                             const UnknownMap& map) {
  const GridGeometry& g = P.grid;
  const Density dens(P);
  std::vector<Eigen::Triplet<double>> trip;
  double omega_sum = 0.0;
  std::size_t corners = 0;
  auto put = [&](Index a, Index b, double v) {
    const Index ia = map.of_cell[static_cast<std::size_t>(a)], ib = map.of_cell[static_cast<std::size_t>(b)];
    if (ia >= 0 && ib >= 0 && v != 0.0) trip.emplace_back(ia, ib, v);
  };
  if (g.dim == 1) {
    const double h = g.spacing[0];
    trip.reserve(static_cast<std::size_t>(4 * g.size()));
    for (Index i = 0; i + 1 < g.shape[0]; ++i) {
      const double p = (u[i + 1] - u[i]) / h;
      const double r = std::sqrt(p * p + mu * mu);
      const double om = dens.omega(r);
      const double c = h * (om + dens.curvature(r) * p * p) / (h * h);
      omega_sum += om;
      ++corners;
      put(i, i, c);
      put(i + 1, i + 1, c);
      put(i, i + 1, -c);
      put(i + 1, i, -c);
    }
  } else {
    const double h0 = g.spacing[0], h1 = g.spacing[1];
    const double wq = 0.25 * h0 * h1;
    trip.reserve(static_cast<std::size_t>(16 * g.size()));
    for (Index i = 0; i + 1 < g.shape[0]; ++i) {
      for (Index j = 0; j + 1 < g.shape[1]; ++j) {
        // Local node order: (i,j), (i+1,j), (i,j+1), (i+1,j+1).
        const Index nodes[4] = {g.flat(i, j), g.flat(i + 1, j), g.flat(i, j + 1), g.flat(i + 1, j + 1)};
        double Hl[4][4] = {};
        for (int b = 0; b < 2; ++b) {
          for (int a = 0; a < 2; ++a) {
            // x-difference along row j+b, y-difference along column i+a.
            double bx[4] = {}, by[4] = {};
            bx[2 * b] = -1.0 / h0;
            bx[2 * b + 1] = 1.0 / h0;
            by[a] = -1.0 / h1;
            by[a + 2] = 1.0 / h1;
            double px = 0.0, py = 0.0;
            for (int n = 0; n < 4; ++n) {
              px += bx[n] * u[nodes[n]];
              py += by[n] * u[nodes[n]];
            }
            const double r = std::sqrt(px * px + py * py + mu * mu);
            const double om = dens.omega(r), cv = dens.curvature(r);
            omega_sum += om;
            ++corners;
            const double hxx = wq * (om + cv * px * px), hyy = wq * (om + cv * py * py), hxy = wq * cv * px * py;
            for (int m = 0; m < 4; ++m)
              for (int n = 0; n < 4; ++n)
                Hl[m][n] += hxx * bx[m] * bx[n] + hyy * by[m] * by[n] + hxy * (bx[m] * by[n] + by[m] * bx[n]);
          }
        }
        for (int m = 0; m < 4; ++m)
          for (int n = 0; n < 4; ++n) put(nodes[m], nodes[n], Hl[m][n]);
      }
    }
  }
  Eigen::SparseMatrix<double> H(map.size(), map.size());
  H.setFromTriplets(trip.begin(), trip.end());
  double shift = corners ? 1e-8 * omega_sum / static_cast<double>(corners) : 0.0;
  if (!(shift > 0.0)) shift = 1.0;
  const auto lap = assemble(accumulate(P, u, 0.0, kEdges).edges, map, nullptr, nullptr);
  return H + shift * lap;
}

void require_same_grid(const VariationalProblem& P, const ScalarField& u) {
  if (!(u.geometry() == P.grid)) throw DomainError("field grid does not match the problem grid");
}

}  // namespace

Coupling Coupling::power(double s) {
  if (!(s > 1.0)) throw DomainError("power coupling needs s > 1");
  return {s};
}

double Coupling::G(double z) const {
  if (z < 0.0) throw DomainError("G is defined for z >= 0");
  return std::pow(z, s) / s;
}

double Coupling::dG(double z) const {
  if (z < 0.0) throw DomainError("G' is defined for z >= 0");
  return std::pow(z, s - 1.0);
}

double Coupling::dG_inverse(double m) const {
  if (m < 0.0) throw DomainError("(G')^{-1} is defined for m >= 0");
  return std::pow(m, 1.0 / (s - 1.0));
}

double VariationalProblem::h0(double p_norm) const {
  return h0_coeff * (2.0 / gamma) * std::pow(p_norm, gamma / 2.0);
}

double VariationalProblem::dh0(double p_norm) const {
  return h0_coeff * std::pow(p_norm, gamma / 2.0 - 1.0);
}

void VariationalProblem::validate() const {
  grid.validate();
  if (!(gamma > 1.0) || !std::isfinite(gamma)) throw DomainError("gamma must exceed 1");
  if (!(h0_coeff > 0.0)) throw DomainError("H0 coefficient must be positive");
  if (!(G.s > 1.0)) throw DomainError("coupling exponent must exceed 1");
  for (int a = 0; a < grid.dim; ++a)
    if (grid.shape[a] < 3) throw GridTooSmall("solver needs at least 3 cells per axis");
  if (!(boundary.geometry() == grid)) throw DomainError("boundary data grid does not match");
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Solved: return "solved";
    case Provenance::Loaded: return "loaded";
    case Provenance::Oracle: return "oracle";
  }
  return "unknown";
}

double energy(const VariationalProblem& P, const ScalarField& u, double mu) {
  require_same_grid(P, u);
  return accumulate(P, u.values().matrix(), mu, kEnergy).energy;
}

ScalarField energy_gradient(const VariationalProblem& P, const ScalarField& u, double mu) {
  require_same_grid(P, u);
  Eigen::VectorXd g = accumulate(P, u.values().matrix(), mu, kGrad).grad / P.grid.cell_volume();
  for (Index k = 0; k < P.grid.size(); ++k)
    if (P.grid.is_boundary_cell(k)) g[k] = 0.0;
  return ScalarField(P.grid, g.array());
}

double regularization(const VariationalProblem& P) {
  if (P.gamma >= 4.0) return 0.0;
  double hmin = P.grid.spacing[0];
  if (P.grid.dim == 2) hmin = std::min(hmin, P.grid.spacing[1]);
  return 1e-8 * P.grid.diameter() / hmin;
}

ScalarField harmonic_extension(const VariationalProblem& P) {
  P.validate();
  const UnknownMap map(P.grid);
  Eigen::VectorXd u = P.boundary.values().matrix();
  if (map.size() == 0) return P.boundary;
  const auto acc = accumulate(P, u, 0.0, kEdges);
  Eigen::VectorXd rhs;
  const auto A = assemble(acc.edges, map, &u, &rhs);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw DomainError("Laplace factorisation failed");
  const Eigen::VectorXd x = ldlt.solve(rhs);
  for (Index i = 0; i < map.size(); ++i) u[map.cells[static_cast<std::size_t>(i)]] = x[i];
  return ScalarField(P.grid, u.array());
}

SolutionPair minimize(const VariationalProblem& P, const ScalarField& init, const MinimizeOptions& opts) {
  P.validate();
  require_same_grid(P, init);
  for (Index k = 0; k < P.grid.size(); ++k) {
    if (!P.grid.is_boundary_cell(k)) continue;
    const double b = P.boundary[k];
    if (std::abs(init[k] - b) > 1e-12 * std::max(1.0, std::abs(b)))
      throw DomainError("initial guess does not match the boundary data");
  }
  const UnknownMap map(P.grid);
  const double mu = regularization(P);
  const double vol = P.grid.cell_volume();

  Eigen::VectorXd u = init.values().matrix();
  for (Index k = 0; k < P.grid.size(); ++k)
    if (P.grid.is_boundary_cell(k)) u[k] = P.boundary[k];

  auto scatter = [&](Eigen::VectorXd& full, const Eigen::VectorXd& x, double a) {
    for (Index i = 0; i < map.size(); ++i) full[map.cells[static_cast<std::size_t>(i)]] += a * x[i];
  };
  auto grad_at = [&](const Eigen::VectorXd& full) { return map.restrict(accumulate(P, full, mu, kGrad).grad); };
  auto energy_at = [&](const Eigen::VectorXd& full) { return accumulate(P, full, mu, kEnergy).energy; };

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;
  auto refactor = [&]() {
    const auto A = assemble_hessian(P, u, mu, map);
    if (!analyzed) {
      ldlt.analyzePattern(A);
      analyzed = true;
    }
    ldlt.factorize(A);
    if (ldlt.info() != Eigen::Success) throw DomainError("preconditioner factorisation failed");
  };


  SolutionPair out;
  out.provenance = Provenance::Solved;
  out.gamma = P.gamma;
  SolverDiagnostics& diag = out.diagnostics;

  double E = energy_at(u);
  diag.energy_history.push_back(E);
  if (map.size() == 0) {
    diag.converged = true;
    diag.energy = energy(P, ScalarField(P.grid, u.array()));
    out.u = ScalarField(P.grid, u.array());
    out.m = recover_density(P, out.u);
    return out;
  }

  Eigen::VectorXd g = grad_at(u);
  refactor();
  Eigen::VectorXd z = ldlt.solve(g);
  Eigen::VectorXd d = -z;
  double gz = g.dot(z);
  double step = 1.0;
  int it = 0;
  for (;; ++it) {
    diag.final_grad_norm = g.cwiseAbs().maxCoeff() / vol;
    if (diag.final_grad_norm <= opts.grad_tol) {
      diag.converged = true;
      break;
    }
    if (it >= opts.max_iters) {
      diag.message = "NonConvergence: iteration limit reached";
      break;
    }
    if (it > 0 && opts.precond_refresh > 0 && it % opts.precond_refresh == 0) {
      refactor();
      z = ldlt.solve(g);
      d = -z;
      gz = g.dot(z);
    }
    double dphi0 = g.dot(d);
    if (!(dphi0 < 0.0)) {
      d = -z;
      dphi0 = -gz;
    }
    // Bracket the zero of phi'(a) = grad E(u + a d) . d, then regula falsi.
    Eigen::VectorXd trial = u;
    auto dphi = [&](double a, Eigen::VectorXd& gout) {
      trial = u;
      scatter(trial, d, a);
      gout = grad_at(trial);
      return gout.dot(d);
    };
    Eigen::VectorXd g_a;
    double lo = 0.0, dlo = dphi0, hi = 0.0, dhi = 0.0;
    double a = std::clamp(step, 1e-6, 1.0);
    double da = dphi(a, g_a);
    bool bracketed = false;
    for (int k = 0; k < 50; ++k) {
      if (da >= 0.0) {
        hi = a;
        dhi = da;
        bracketed = true;
        break;
      }
      lo = a;
      dlo = da;
      a *= 2.0;
      da = dphi(a, g_a);
    }
    if (bracketed) {
      int side = 0;
      for (int k = 0; k < 30 && std::abs(da) > 0.1 * std::abs(dphi0); ++k) {
        double fl = dlo, fh = dhi;
        if (side == -1) fh *= 0.5;
        if (side == 1) fl *= 0.5;
        const double w = hi - lo;
        a = lo - fl * w / (fh - fl);
        a = std::clamp(a, lo + 0.01 * w, hi - 0.01 * w);
        da = dphi(a, g_a);
        if (da >= 0.0) {
          hi = a;
          dhi = da;
          side = side == 1 ? 0 : -1;
        } else {
          lo = a;
          dlo = da;
          side = side == -1 ? 0 : 1;
        }
      }
    }
    // Sufficient decrease, backtracking if needed. Once the predicted change
    // is below the resolution of the energy sum, phi is convex, so any step
    // with phi' <= 0 on [0, a] decreases it; the energy test is skipped.
    const double resolution = 1e-12 * std::max(std::abs(E), std::numeric_limits<double>::min());
    double E_a = energy_at(trial);
    bool ok = E_a <= E + opts.armijo * a * dphi0;
    bool stale_grad = false;
    if (!ok && std::abs(a * dphi0) <= resolution) {
      if (!(da <= 0.0) && lo > 0.0) {
        a = lo;
        trial = u;
        scatter(trial, d, a);
        E_a = energy_at(trial);
        stale_grad = true;
      }
      ok = da <= 0.0 || a == lo;
    }
    for (int back = 0; !ok && back < opts.max_backtracks; ++back) {
      a *= 0.5;
      trial = u;
      scatter(trial, d, a);
      E_a = energy_at(trial);
      stale_grad = true;
      ok = E_a <= E + opts.armijo * a * dphi0;
    }
    if (!ok) {
      diag.message = "NonConvergence: line search could not decrease the energy";
      break;
    }
    if (stale_grad) g_a = grad_at(trial);
    u = trial;
    E = E_a;
    diag.energy_history.push_back(E);
    step = a;
    const Eigen::VectorXd z_new = ldlt.solve(g_a);
    const double beta = std::max(0.0, (g_a - g).dot(z_new) / gz);
    d = -z_new + beta * d;
    g = g_a;
    z = z_new;
    gz = g.dot(z);
  }
  diag.iterations = it;
  for (std::size_t i = 1; i < diag.energy_history.size(); ++i)
    if (diag.energy_history[i] > diag.energy_history[i - 1] * (1.0 + 1e-12)) diag.energy_monotone = false;
  out.u = ScalarField(P.grid, u.array());
  diag.energy = energy(P, out.u);
  out.m = recover_density(P, out.u);
  return out;
}

ScalarField recover_density(const VariationalProblem& P, const ScalarField& u) {
  require_same_grid(P, u);
  const VectorField Du = gradient(u);
  ScalarField::Values m(P.grid.size());
  for (Index k = 0; k < P.grid.size(); ++k) {
    const double v = P.G.dG(P.h0(Du.components().row(k).matrix().norm()));
    m[k] = v > 0.0 ? v : 0.0;
  }
  return ScalarField(P.grid, std::move(m));
}

SolutionPair oracle_radial(double gamma, int d, const GridGeometry& grid) {
  if (grid.dim != d) throw DomainError("grid dimension does not match d");
  if (gamma == static_cast<double>(d)) throw DomainError("radial oracle needs gamma != d");
  bool inside = true;
  for (int a = 0; a < d; ++a) {
    const double first = grid.center_coord(a, 0), last = grid.center_coord(a, grid.shape[a] - 1);
    if (!(first < 0.0 && 0.0 < last)) inside = false;
  }
  if (inside) throw OriginInDomain("the radial oracle is singular at the origin");
  const double kappa = (gamma - d) / (gamma - 1.0);
  const auto u = ScalarField::sample(grid, [kappa](const Point& x) { return std::pow(x.norm(), kappa); });
  VariationalProblem P{grid, gamma, 1.0, Coupling::quadratic(), u};
  SolutionPair out;
  out.u = u;
  out.m = recover_density(P, u);
  out.provenance = Provenance::Oracle;
  out.gamma = gamma;
  out.diagnostics.converged = true;
  return out;
}

HamiltonianModel hamiltonian_of_problem(const VariationalProblem& P) {
  const double alpha = P.gamma / 2.0;
  if (!(alpha > 1.0))
    throw ParamConstraintViolation("alpha > 1 violated (gamma = " + std::to_string(P.gamma) + " gives alpha = " +
                                   std::to_string(alpha) + ")");
  if (P.G.is_quadratic() && P.h0_coeff == 1.0) return HamiltonianModel::separable_gamma(P.gamma);
  const double beta = 1.0 / (P.G.s - 1.0);
  const double delta = beta / alpha;
  const auto params = derive_params(alpha, 0.0, beta, 0.5 * (beta - delta));
  return HamiltonianModel::standard(params, Coefficient(P.h0_coeff * 2.0 / P.gamma));
}

}  // namespace mfg
