#pragma once

// Cell-centred rectangular grids in dimension 1 or 2, discrete calculus,
// ball quadrature and the L^p family used by the regularity diagnostics.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfg_lab/errors.hpp"

namespace mfg {

using Index = Eigen::Index;

template <typename Scalar>
using PointT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
using Point = PointT<double>;

inline Point make_point(double x0) {
  Point p(1);
  p << x0;
  return p;
}

inline Point make_point(double x0, double x1) {
  Point p(2);
  p << x0, x1;
  return p;
}

inline double unit_ball_volume(int dim) { return dim == 1 ? 2.0 : std::numbers::pi; }

/// Uniform cell-centred grid. Values are stored row-major: the last axis
/// varies fastest. In 1-D only the first entries of the arrays are used.
struct GridGeometry {
  int dim = 1;
  std::array<Index, 2> shape{0, 1};
  std::array<double, 2> spacing{1.0, 1.0};
  std::array<double, 2> origin{0.0, 0.0};

  /// Grid whose cells tile the box [lo, hi].
  static GridGeometry from_extent(int dim, std::array<Index, 2> shape, std::array<double, 2> lo,
                                  std::array<double, 2> hi) {
    GridGeometry g;
    g.dim = dim;
    g.shape = {shape[0], dim == 2 ? shape[1] : 1};
    for (int a = 0; a < dim; ++a) {
      g.spacing[a] = (hi[a] - lo[a]) / static_cast<double>(g.shape[a]);
      g.origin[a] = lo[a];
    }
    g.validate();
    return g;
  }

  /// Grid whose first and last cell centres sit at `first` and `last`.
  static GridGeometry node_aligned(int dim, std::array<Index, 2> shape, std::array<double, 2> first,
                                   std::array<double, 2> last) {
    GridGeometry g;
    g.dim = dim;
    g.shape = {shape[0], dim == 2 ? shape[1] : 1};
    for (int a = 0; a < dim; ++a) {
      if (g.shape[a] < 2) throw GridTooSmall("node-aligned grids need at least 2 cells per axis");
      g.spacing[a] = (last[a] - first[a]) / static_cast<double>(g.shape[a] - 1);
      g.origin[a] = first[a] - 0.5 * g.spacing[a];
    }
    g.validate();
    return g;
  }

  void validate() const {
    if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
      if (shape[a] < 1) throw GridTooSmall("empty grid axis");
      if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
        throw DomainError("grid spacing must be positive and finite");
      if (!std::isfinite(origin[a])) throw DomainError("grid origin must be finite");
    }
    if (dim == 1 && shape[1] != 1) throw DomainError("1-D grid must have shape[1] == 1");
  }

  Index size() const { return shape[0] * (dim == 2 ? shape[1] : 1); }
  Index flat(Index i0, Index i1 = 0) const { return dim == 2 ? i0 * shape[1] + i1 : i0; }
  std::array<Index, 2> unflatten(Index k) const {
    if (dim == 1) return {k, 0};
    return {k / shape[1], k % shape[1]};
  }
  double cell_volume() const { return dim == 2 ? spacing[0] * spacing[1] : spacing[0]; }
  double center_coord(int axis, Index i) const {
    return origin[axis] + (static_cast<double>(i) + 0.5) * spacing[axis];
  }
  Point center(Index k) const {
    const auto idx = unflatten(k);
    if (dim == 1) return make_point(center_coord(0, idx[0]));
    return make_point(center_coord(0, idx[0]), center_coord(1, idx[1]));
  }
  double lower(int axis) const { return origin[axis]; }
  double upper(int axis) const {
    return origin[axis] + static_cast<double>(shape[axis]) * spacing[axis];
  }
  double min_extent() const {
    double e = upper(0) - lower(0);
    if (dim == 2) e = std::min(e, upper(1) - lower(1));
    return e;
  }
  double diameter() const {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += std::pow(upper(a) - lower(a), 2);
    return std::sqrt(s);
  }
  /// True for cells in the outermost ring (Dirichlet cells of the solver).
  bool is_boundary_cell(Index k) const {
    const auto idx = unflatten(k);
    for (int a = 0; a < dim; ++a)
      if (idx[a] == 0 || idx[a] == shape[a] - 1) return true;
    return false;
  }

  bool operator==(const GridGeometry&) const = default;
};

template <typename Scalar>
class BasicScalarField {
 public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  BasicScalarField() = default;
  BasicScalarField(GridGeometry geometry, Values values)
      : geometry_(std::move(geometry)), values_(std::move(values)) {
    geometry_.validate();
    if (values_.size() != geometry_.size())
      throw DomainError("field value count does not match grid shape");
    if (!values_.allFinite()) throw DomainError("field values must be finite");
  }

  static BasicScalarField constant(const GridGeometry& g, Scalar c) {
    return BasicScalarField(g, Values::Constant(g.size(), c));
  }

  template <typename Fn>
  static BasicScalarField sample(const GridGeometry& g, Fn&& fn) {
    Values v(g.size());
    for (Index k = 0; k < g.size(); ++k) v[k] = static_cast<Scalar>(fn(g.center(k)));
    return BasicScalarField(g, std::move(v));
  }

  const GridGeometry& geometry() const { return geometry_; }
  const Values& values() const { return values_; }
  Values& values() { return values_; }
  int dim() const { return geometry_.dim; }
  Index size() const { return values_.size(); }
  Scalar operator[](Index k) const { return values_[k]; }
  Scalar operator()(Index i0, Index i1 = 0) const { return values_[geometry_.flat(i0, i1)]; }

 private:
  GridGeometry geometry_;
  Values values_;
};

/// Cell-centred vector field; one row per cell, one column per axis.
template <typename Scalar>
class BasicVectorField {
 public:
  using Components = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicVectorField() = default;
  BasicVectorField(GridGeometry geometry, Components components)
      : geometry_(std::move(geometry)), components_(std::move(components)) {
    geometry_.validate();
    if (components_.rows() != geometry_.size() || components_.cols() != geometry_.dim)
      throw DomainError("vector field must have one component per axis and one row per cell");
    if (!components_.allFinite()) throw DomainError("vector field values must be finite");
  }

  const GridGeometry& geometry() const { return geometry_; }
  const Components& components() const { return components_; }
  int dim() const { return geometry_.dim; }
  Index size() const { return components_.rows(); }
  PointT<Scalar> at(Index k) const { return components_.row(k).transpose().matrix(); }
  BasicScalarField<Scalar> magnitude() const {
    return BasicScalarField<Scalar>(geometry_, components_.matrix().rowwise().norm().array());
  }

 private:
  GridGeometry geometry_;
  Components components_;
};

using ScalarField = BasicScalarField<double>;
using VectorField = BasicVectorField<double>;

struct Ball {
  Point center;
  double radius = 0.0;
};

/// `p` may be any extended real except 0. With `scale_invariant` the value
/// is multiplied by R^{-d/p}.
struct NormSpec {
  double p = 2.0;
  bool scale_invariant = false;
};

namespace detail {

inline void require_gradient_size(const GridGeometry& g) {
  for (int a = 0; a < g.dim; ++a)
    if (g.shape[a] < 3) throw GridTooSmall("difference operators need at least 3 cells per axis");
}

// Calls fn(start, stride, n) once per grid line parallel to `axis`.
template <typename Fn>
void for_each_line(const GridGeometry& g, int axis, Fn&& fn) {
  if (g.dim == 1) {
    fn(Index{0}, Index{1}, g.shape[0]);
    return;
  }
  if (axis == 0) {
    for (Index i1 = 0; i1 < g.shape[1]; ++i1) fn(i1, g.shape[1], g.shape[0]);
  } else {
    for (Index i0 = 0; i0 < g.shape[0]; ++i0) fn(i0 * g.shape[1], Index{1}, g.shape[1]);
  }
}

inline double slack(const GridGeometry& g) { return 1e-12 * std::max(1.0, g.diameter()); }

}  // namespace detail

/// Central differences inside, second-order one-sided differences on the
/// first and last cell of every line.
template <typename Scalar>
BasicVectorField<Scalar> gradient(const BasicScalarField<Scalar>& u) {
  const GridGeometry& g = u.geometry();
  detail::require_gradient_size(g);
  typename BasicVectorField<Scalar>::Components out(g.size(), g.dim);
  const auto& v = u.values();
  for (int a = 0; a < g.dim; ++a) {
    const Scalar inv2h = Scalar(1) / (Scalar(2) * static_cast<Scalar>(g.spacing[a]));
    detail::for_each_line(g, a, [&](Index s, Index st, Index n) {
      auto at = [&](Index i) { return v[s + i * st]; };
      out(s, a) = (-Scalar(3) * at(0) + Scalar(4) * at(1) - at(2)) * inv2h;
      for (Index i = 1; i + 1 < n; ++i) out(s + i * st, a) = (at(i + 1) - at(i - 1)) * inv2h;
      out(s + (n - 1) * st, a) = (Scalar(3) * at(n - 1) - Scalar(4) * at(n - 2) + at(n - 3)) * inv2h;
    });
  }
  return BasicVectorField<Scalar>(g, std::move(out));
}

/// Exact negative adjoint of `gradient` under the cell-sum inner product:
/// sum F . gradient(phi) = -sum divergence(F) * phi for every phi.
template <typename Scalar>
BasicScalarField<Scalar> divergence(const BasicVectorField<Scalar>& F) {
  const GridGeometry& g = F.geometry();
  detail::require_gradient_size(g);
  typename BasicScalarField<Scalar>::Values out = BasicScalarField<Scalar>::Values::Zero(g.size());
  const auto& c = F.components();
  for (int a = 0; a < g.dim; ++a) {
    const Scalar inv2h = Scalar(1) / (Scalar(2) * static_cast<Scalar>(g.spacing[a]));
    detail::for_each_line(g, a, [&](Index s, Index st, Index n) {
      auto f = [&](Index i) { return c(s + i * st, a) * inv2h; };
      auto acc = [&](Index i, Scalar x) { out[s + i * st] -= x; };
      acc(0, -Scalar(3) * f(0));
      acc(1, Scalar(4) * f(0));
      acc(2, -f(0));
      for (Index i = 1; i + 1 < n; ++i) {
        acc(i + 1, f(i));
        acc(i - 1, -f(i));
      }
      acc(n - 1, Scalar(3) * f(n - 1));
      acc(n - 2, -Scalar(4) * f(n - 1));
      acc(n - 3, f(n - 1));
    });
  }
  return BasicScalarField<Scalar>(g, std::move(out));
}

/// Cells meeting a ball. `weights` hold the measure of cell-inside-ball
/// (area fractions from s x s subsampling of boundary cells in 2-D, exact in
/// 1-D). `covered` lists the cells whose centres lie in the closed ball; it
/// is the point set used for oscillations.
struct BallQuadrature {
  std::vector<Index> cells;
  std::vector<double> weights;
  std::vector<Index> covered;

  double measure() const {
    double m = 0.0;
    for (double w : weights) m += w;
    return m;
  }
};

inline BallQuadrature ball_quadrature(const GridGeometry& g, const Ball& ball, int subsamples = 4) {
  if (ball.center.size() != g.dim) throw DomainError("ball centre dimension does not match grid");
  if (!(ball.radius > 0.0)) throw DomainError("ball radius must be positive");
  BallQuadrature q;
  const double r = ball.radius;
  const double r_cover = r * (1.0 + 1e-12) + detail::slack(g);
  std::array<Index, 2> lo{0, 0}, hi{0, 0};
  for (int a = 0; a < g.dim; ++a) {
    const double h = g.spacing[a];
    lo[a] = std::max<Index>(0, static_cast<Index>(std::floor((ball.center[a] - r - g.origin[a]) / h)));
    hi[a] = std::min<Index>(g.shape[a] - 1,
                            static_cast<Index>(std::floor((ball.center[a] + r - g.origin[a]) / h)));
  }
  const double vol = g.cell_volume();
  if (g.dim == 1) {
    const double h = g.spacing[0];
    for (Index i = lo[0]; i <= hi[0]; ++i) {
      const double a0 = g.origin[0] + static_cast<double>(i) * h;
      const double overlap =
          std::min(a0 + h, ball.center[0] + r) - std::max(a0, ball.center[0] - r);
      if (overlap > 0.0) {
        q.cells.push_back(i);
        q.weights.push_back(std::min(overlap, h));
      }
      if (std::abs(g.center_coord(0, i) - ball.center[0]) <= r_cover) q.covered.push_back(i);
    }
    return q;
  }
  const double h0 = g.spacing[0], h1 = g.spacing[1];
  const double cx = ball.center[0], cy = ball.center[1];
  const double r2 = r * r;
  const int s = std::max(1, subsamples);
  for (Index i = lo[0]; i <= hi[0]; ++i) {
    const double x0 = g.origin[0] + static_cast<double>(i) * h0;
    const double dx_near = std::max({x0 - cx, 0.0, cx - (x0 + h0)});
    const double dx_far = std::max(std::abs(x0 - cx), std::abs(x0 + h0 - cx));
    for (Index j = lo[1]; j <= hi[1]; ++j) {
      const double y0 = g.origin[1] + static_cast<double>(j) * h1;
      const double dy_near = std::max({y0 - cy, 0.0, cy - (y0 + h1)});
      const double dy_far = std::max(std::abs(y0 - cy), std::abs(y0 + h1 - cy));
      const Index k = g.flat(i, j);
      const double ex = g.center_coord(0, i) - cx, ey = g.center_coord(1, j) - cy;
      if (std::sqrt(ex * ex + ey * ey) <= r_cover) q.covered.push_back(k);
      if (dx_near * dx_near + dy_near * dy_near >= r2) continue;
      double frac = 1.0;
      if (dx_far * dx_far + dy_far * dy_far > r2) {
        int inside = 0;
        for (int a = 0; a < s; ++a) {
          const double px = x0 + (a + 0.5) * h0 / s - cx;
          for (int b = 0; b < s; ++b) {
            const double py = y0 + (b + 0.5) * h1 / s - cy;
            if (px * px + py * py <= r2) ++inside;
          }
        }
        frac = static_cast<double>(inside) / static_cast<double>(s * s);
      }
      if (frac > 0.0) {
        q.cells.push_back(k);
        q.weights.push_back(frac * vol);
      }
    }
  }
  return q;
}

/// Whether the closed ball lies inside the grid's box.
inline bool ball_inside(const GridGeometry& g, const Ball& ball) {
  const double eps = detail::slack(g);
  for (int a = 0; a < g.dim; ++a) {
    if (ball.center[a] - ball.radius < g.lower(a) - eps) return false;
    if (ball.center[a] + ball.radius > g.upper(a) + eps) return false;
  }
  return true;
}

inline void require_ball_inside(const GridGeometry& g, const Ball& ball) {
  if (!ball_inside(g, ball))
    throw BallEscapesDomain("ball of radius " + std::to_string(ball.radius) + " leaves the grid");
}

/// (sum |v|^p w)^(1/p) for finite p != 0. For p = +-inf the essential sup /
/// inf with respect to the quadrature measure, i.e. over every cell of
/// positive weight, which keeps the family monotone in p. Negative exponents
/// follow ||v||_p = ||1/v||_{-p}^{-1} and require v >= 0.
template <typename Scalar>
Scalar lp_norm(const BasicScalarField<Scalar>& v, const Ball& ball, const NormSpec& spec) {
  using std::abs;
  using std::pow;
  const double p = spec.p;
  if (p == 0.0 || std::isnan(p)) throw DomainError("norm exponent must be non-zero");
  const GridGeometry& g = v.geometry();
  const BallQuadrature q = ball_quadrature(g, ball);
  if (q.cells.empty()) throw BallEscapesDomain("ball does not meet the grid");
  const auto& x = v.values();
  if (p < 0.0) {
    for (Index k : q.cells)
      if (x[k] < Scalar(0)) throw NegativePNonNonnegativeField("negative value inside the ball");
    for (Index k : q.covered)
      if (x[k] < Scalar(0)) throw NegativePNonNonnegativeField("negative value inside the ball");
  }
  Scalar result;
  if (std::isinf(p)) {
    if (p > 0) {
      result = Scalar(0);
      for (Index k : q.cells) result = std::max<Scalar>(result, abs(x[k]));
    } else {
      result = std::numeric_limits<Scalar>::infinity();
      for (Index k : q.cells) result = std::min<Scalar>(result, x[k]);
    }
  } else if (p > 0.0) {
    Scalar scale(0);
    for (Index k : q.cells) scale = std::max<Scalar>(scale, abs(x[k]));
    if (scale == Scalar(0)) {
      result = Scalar(0);
    } else {
      Scalar sum(0);
      for (std::size_t i = 0; i < q.cells.size(); ++i)
        sum += static_cast<Scalar>(q.weights[i]) * pow(abs(x[q.cells[i]]) / scale, Scalar(p));
      result = scale * pow(sum, Scalar(1.0 / p));
    }
  } else {
    Scalar scale = std::numeric_limits<Scalar>::infinity();
    for (Index k : q.cells) scale = std::min<Scalar>(scale, x[k]);
    if (scale == Scalar(0)) {
      result = Scalar(0);
    } else {
      Scalar sum(0);
      for (std::size_t i = 0; i < q.cells.size(); ++i)
        sum += static_cast<Scalar>(q.weights[i]) * pow(x[q.cells[i]] / scale, Scalar(p));
      result = scale * pow(sum, Scalar(1.0 / p));
    }
  }
  if (spec.scale_invariant && std::isfinite(p))
    result *= static_cast<Scalar>(std::pow(ball.radius, -static_cast<double>(g.dim) / p));
  return result;
}

/// Ball-averaged power mean (avg_B |v|^p)^(1/p), the scale-invariant norm
/// R^{-d/p}||v||_p with the measure of the discrete ball divided out. It is
/// non-decreasing in p and equals c for v == c.
template <typename Scalar>
Scalar scale_invariant_norm(const BasicScalarField<Scalar>& v, const Ball& ball, double p) {
  const Scalar raw = lp_norm(v, ball, NormSpec{p, false});
  if (std::isinf(p)) return raw;
  const double measure = ball_quadrature(v.geometry(), ball).measure();
  return raw * static_cast<Scalar>(std::pow(measure, -1.0 / p));
}

/// Integral average over the ball, normalised by the discrete ball measure.
template <typename Scalar>
Scalar integral_average(const BasicScalarField<Scalar>& v, const Ball& ball) {
  const BallQuadrature q = ball_quadrature(v.geometry(), ball);
  if (q.cells.empty()) throw BallEscapesDomain("ball does not meet the grid");
  Scalar sum(0);
  for (std::size_t i = 0; i < q.cells.size(); ++i)
    sum += static_cast<Scalar>(q.weights[i]) * v[q.cells[i]];
  return sum / static_cast<Scalar>(q.measure());
}

/// Essential oscillation (max - min over covered cells) on the part of the
/// ball inside the grid.
template <typename Scalar>
Scalar oscillation(const BasicScalarField<Scalar>& u, const Ball& ball) {
  const BallQuadrature q = ball_quadrature(u.geometry(), ball);
  if (q.covered.empty()) throw DomainError("ball covers no cell centre");
  Scalar lo = std::numeric_limits<Scalar>::infinity();
  Scalar hi = -std::numeric_limits<Scalar>::infinity();
  for (Index k : q.covered) {
    lo = std::min<Scalar>(lo, u[k]);
    hi = std::max<Scalar>(hi, u[k]);
  }
  return hi - lo;
}

/// a_{R,k}(theta) = R^{-d/theta} || |u| + R ||_{L^theta(B_{R(1+k/|theta|)})}.
/// theta = +-inf gives the sup / inf of |u| + R over B_R.
template <typename Scalar>
Scalar a_rk(const BasicScalarField<Scalar>& u, const Point& center, double R, double k, double theta) {
  if (theta == 0.0 || std::isnan(theta)) throw DomainError("theta must be non-zero");
  if (!(R > 0.0) || !(k > 0.0)) throw DomainError("R and k must be positive");
  const double radius = std::isinf(theta) ? R : R * (1.0 + k / std::abs(theta));
  const Ball ball{center, radius};
  require_ball_inside(u.geometry(), ball);
  const BasicScalarField<Scalar> shifted(
      u.geometry(), (u.values().abs() + static_cast<Scalar>(R)).eval());
  const Scalar norm = lp_norm(shifted, ball, NormSpec{theta, false});
  if (std::isinf(theta)) return norm;
  return norm * static_cast<Scalar>(std::pow(R, -static_cast<double>(u.geometry().dim) / theta));
}

/// Radial piecewise-linear cutoff: 1 on the inner ball, 0 outside the outer
/// ball, slope 1/(r' - r) in between.
inline ScalarField cutoff(const GridGeometry& g, const Ball& inner, const Ball& outer) {
  if (inner.center.size() != g.dim || outer.center.size() != g.dim)
    throw DomainError("cutoff balls must match the grid dimension");
  if ((inner.center - outer.center).norm() > 1e-12 * std::max(1.0, outer.radius))
    throw DomainError("cutoff balls must be concentric");
  if (!(inner.radius < outer.radius) || !(inner.radius > 0.0))
    throw DomainError("cutoff needs 0 < r < r'");
  const double r = inner.radius, rp = outer.radius;
  return ScalarField::sample(g, [&](const Point& x) {
    const double d = (x - inner.center).norm();
    return std::clamp((rp - d) / (rp - r), 0.0, 1.0);
  });
}

/// F^q_{R,M}: (z+R)^q up to z = M, then the tangent line at M.
template <typename Scalar>
Scalar truncated_power(Scalar z, double q, double R, double M) {
  using std::pow;
  if (!(q > 0.0 && R > 0.0 && M > 0.0)) throw DomainError("truncated_power needs q, R, M > 0");
  if (z < Scalar(0)) throw DomainError("truncated_power is defined for z >= 0");
  if (z <= Scalar(M)) return pow(z + Scalar(R), Scalar(q));
  const Scalar base = Scalar(M + R);
  return pow(base, Scalar(q)) + Scalar(q) * pow(base, Scalar(q - 1.0)) * (z - Scalar(M));
}

template <typename Scalar>
Scalar truncated_power_derivative(Scalar z, double q, double R, double M) {
  using std::pow;
  if (!(q > 0.0 && R > 0.0 && M > 0.0)) throw DomainError("truncated_power needs q, R, M > 0");
  if (z < Scalar(0)) throw DomainError("truncated_power is defined for z >= 0");
  const Scalar zc = std::min<Scalar>(z, Scalar(M));
  return Scalar(q) * pow(zc + Scalar(R), Scalar(q - 1.0));
}

/// Compactly supported polynomial bump (1 - |x-c|^2/s^2)^4 with its exact
/// gradient.
struct TestFunction {
  Point center;
  double scale = 0.0;
  ScalarField value;
  VectorField exact_gradient;
};

/// SplitMix64; used wherever sampling must be reproducible across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

/// count * |scales| bumps. Centres are drawn with a seeded generator in
/// physical coordinates, so the family is identical on every refinement of
/// the same box. Supports keep `margin` (at least three cells) away from the
/// box boundary.
inline std::vector<TestFunction> bump_test_family(const GridGeometry& g, int count,
                                                  const std::vector<double>& scales,
                                                  std::uint64_t seed = 0, double margin = -1.0) {
  if (margin < 0.0) margin = 0.05 * g.min_extent();
  double hmax = g.spacing[0];
  if (g.dim == 2) hmax = std::max(hmax, g.spacing[1]);
  if (margin < 3.0 * hmax) margin = 3.0 * hmax;
  SplitMix64 rng(seed);
  std::vector<TestFunction> family;
  family.reserve(static_cast<std::size_t>(count) * scales.size());
  for (double s : scales) {
    if (!(s > 0.0)) throw DomainError("bump scale must be positive");
    for (int n = 0; n < count; ++n) {
      Point c(g.dim);
      for (int a = 0; a < g.dim; ++a) {
        const double lo = g.lower(a) + s + margin, hi = g.upper(a) - s - margin;
        if (!(hi >= lo)) throw GridTooSmall("bump scale does not fit inside the grid");
        c[a] = rng.uniform(lo, hi);
      }
      ScalarField::Values vals(g.size());
      VectorField::Components grad(g.size(), g.dim);
      for (Index k = 0; k < g.size(); ++k) {
        const Point d = g.center(k) - c;
        const double rho2 = d.squaredNorm() / (s * s);
        if (rho2 >= 1.0) {
          vals[k] = 0.0;
          grad.row(k).setZero();
          continue;
        }
        const double t = 1.0 - rho2;
        vals[k] = t * t * t * t;
        for (int a = 0; a < g.dim; ++a) grad(k, a) = -8.0 * t * t * t * d[a] / (s * s);
      }
      family.push_back({c, s, ScalarField(g, std::move(vals)), VectorField(g, std::move(grad))});
    }
  }
  return family;
}

}  // namespace mfg
