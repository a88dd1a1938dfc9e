#pragma once

// Tensor-product quadrature over boxes and (masked) balls, with principal-value
// exclusion of a neighbourhood of the singular point.

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <vector>

#include "nonlocal/errors.hpp"
#include "nonlocal/geometry.hpp"

namespace nonlocal {

inline constexpr double kDefaultNodeBudget = 1e7;

enum class QuadratureScheme { TensorGaussLegendre, TensorMidpoint };

/// Neumaier-compensated accumulator. Summation order is the insertion order, so results
/// are reproducible for a fixed node ordering.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// One-dimensional rule on [-1, 1].
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline Rule1D compute_gauss_legendre(int m) {
  Rule1D r;
  r.nodes.resize(m);
  r.weights.resize(m);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= m; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = m * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    // Recompute the derivative at the converged root.
    double p1 = 1.0, p2 = 0.0;
    for (int j = 1; j <= m; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
    }
    pp = m * (z * p1 - p2) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    r.nodes[i] = -z;
    r.nodes[m - 1 - i] = z;
    r.weights[i] = w;
    r.weights[m - 1 - i] = w;
  }
  if (m % 2 == 1) r.nodes[m / 2] = 0.0;
  return r;
}

}  // namespace detail

/// Gauss-Legendre rule with m nodes on [-1, 1]; cached per m, thread safe.
inline const Rule1D& gauss_legendre_rule(int m) {
  if (m < 1) throw InvalidArgument("Gauss-Legendre rule needs at least one node");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Rule1D>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[m];
  if (!slot) slot = std::make_unique<Rule1D>(detail::compute_gauss_legendre(m));
  return *slot;
}

inline Rule1D midpoint_rule(int m) {
  Rule1D r;
  r.nodes.resize(m);
  r.weights.assign(m, 2.0 / m);
  for (int i = 0; i < m; ++i) r.nodes[i] = -1.0 + (2.0 * i + 1.0) / m;
  return r;
}

/// Nodes and weights over a region, immutable once built.
struct QuadratureGrid {
  std::vector<Point> nodes;
  std::vector<double> weights;
  QuadratureScheme scheme = QuadratureScheme::TensorGaussLegendre;
  int resolution = 0;
  /// Smallest distance between neighbouring nodes along any axis.
  double min_spacing = 0.0;

  std::size_t size() const noexcept { return nodes.size(); }
  double weight_sum() const {
    CompensatedSum s;
    for (double w : weights) s.add(w);
    return s.value();
  }
};

namespace detail {

inline void check_budget(int resolution, std::size_t dim, double budget) {
  if (resolution < 2) throw InvalidArgument("quadrature resolution must be >= 2");
  const double count = std::pow(static_cast<double>(resolution), static_cast<double>(dim));
  if (count > budget) throw BudgetExceeded(count, budget);
}

/// Tensor grid over `box`, optionally keeping only nodes for which keep(node) holds.
template <class Keep>
QuadratureGrid tensor_grid(const BoxDomain& box, int resolution, QuadratureScheme scheme,
                           double budget, Keep keep) {
  const std::size_t dim = box.dim();
  check_budget(resolution, dim, budget);
  const Rule1D rule = scheme == QuadratureScheme::TensorGaussLegendre
                          ? gauss_legendre_rule(resolution)
                          : midpoint_rule(resolution);
  std::vector<std::vector<double>> ax_nodes(dim), ax_weights(dim);
  double min_spacing = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < dim; ++d) {
    const double lo = box.lower()[d], hi = box.upper()[d];
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    ax_nodes[d].resize(resolution);
    ax_weights[d].resize(resolution);
    for (int i = 0; i < resolution; ++i) {
      ax_nodes[d][i] = mid + half * rule.nodes[i];
      ax_weights[d][i] = half * rule.weights[i];
      if (i > 0) min_spacing = std::min(min_spacing, ax_nodes[d][i] - ax_nodes[d][i - 1]);
    }
  }
  QuadratureGrid grid;
  grid.scheme = scheme;
  grid.resolution = resolution;
  grid.min_spacing = min_spacing;
  const std::size_t total =
      static_cast<std::size_t>(std::llround(std::pow(resolution, static_cast<double>(dim))));
  grid.nodes.reserve(total);
  grid.weights.reserve(total);
  std::vector<int> idx(dim, 0);
  Point p(static_cast<Eigen::Index>(dim));
  for (std::size_t flat = 0; flat < total; ++flat) {
    double w = 1.0;
    for (std::size_t d = 0; d < dim; ++d) {
      p[d] = ax_nodes[d][idx[d]];
      w *= ax_weights[d][idx[d]];
    }
    if (keep(p)) {
      grid.nodes.push_back(p);
      grid.weights.push_back(w);
    }
    for (std::size_t d = 0; d < dim; ++d) {
      if (++idx[d] < resolution) break;
      idx[d] = 0;
    }
  }
  return grid;
}

}  // namespace detail

/// Tensor-product grid over the box with `resolution` nodes per axis.
inline QuadratureGrid build_box_grid(const BoxDomain& domain, int resolution,
                                     QuadratureScheme scheme = QuadratureScheme::TensorGaussLegendre,
                                     double node_budget = kDefaultNodeBudget) {
  return detail::tensor_grid(domain, resolution, scheme, node_budget,
                             [](const Point&) { return true; });
}

/// Grid covering B_radius(center) ∩ domain: a tensor grid on the clipped bounding box with
/// nodes outside the ball masked out. Masking makes this rule low order near the sphere;
/// uniform midpoint nodes do better there than Gauss-Legendre clustering.
inline QuadratureGrid build_ball_grid(const Point& center, double radius, const BoxDomain& domain,
                                      int resolution,
                                      QuadratureScheme scheme = QuadratureScheme::TensorMidpoint,
                                      double node_budget = kDefaultNodeBudget) {
  if (!(radius > 0.0)) throw InvalidArgument("ball radius must be positive");
  auto box = clipped_cube(center, radius, domain);
  if (!box) {
    detail::check_budget(resolution, domain.dim(), node_budget);
    QuadratureGrid empty;
    empty.scheme = scheme;
    empty.resolution = resolution;
    return empty;
  }
  const double r2 = radius * radius;
  return detail::tensor_grid(*box, resolution, scheme, node_budget,
                             [&](const Point& p) { return (p - center).squaredNorm() < r2; });
}

/// Polar rule on the full ball B_radius(center), D <= 3: Gauss-Legendre in the radius, a
/// periodic trapezoid in the azimuth and Gauss-Legendre in the polar cosine. The Jacobian
/// r^{D-1} sits in the weights, so integrands with a direction-dependent limit at the
/// center are integrated to spectral accuracy. Nodes may leave any domain.
inline QuadratureGrid build_polar_grid(const Point& center, double radius, int resolution,
                                       double node_budget = kDefaultNodeBudget) {
  const auto dim = static_cast<std::size_t>(center.size());
  if (dim == 0 || dim > 3) throw InvalidArgument("polar grids support 1 <= D <= 3");
  if (!(radius > 0.0)) throw InvalidArgument("ball radius must be positive");
  detail::check_budget(resolution, dim, node_budget);
  const Rule1D& radial = gauss_legendre_rule(resolution);
  std::vector<Vector> dirs;
  std::vector<double> dir_w;
  if (dim == 1) {
    dirs = {Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
    dir_w = {1.0, 1.0};
  } else if (dim == 2) {
    for (int k = 0; k < resolution; ++k) {
      const double phi = 2.0 * std::numbers::pi * (k + 0.5) / resolution;
      Vector d(2);
      d << std::cos(phi), std::sin(phi);
      dirs.push_back(d);
      dir_w.push_back(2.0 * std::numbers::pi / resolution);
    }
  } else {
    const int m = std::max(2, resolution / 2);
    const Rule1D& polar = gauss_legendre_rule(m);
    for (int a = 0; a < m; ++a) {
      const double c = polar.nodes[a];
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (int k = 0; k < resolution; ++k) {
        const double phi = 2.0 * std::numbers::pi * (k + 0.5) / resolution;
        Vector d(3);
        d << s * std::cos(phi), s * std::sin(phi), c;
        dirs.push_back(d);
        dir_w.push_back(polar.weights[a] * 2.0 * std::numbers::pi / resolution);
      }
    }
  }
  QuadratureGrid grid;
  grid.scheme = QuadratureScheme::TensorGaussLegendre;
  grid.resolution = resolution;
  grid.nodes.reserve(dirs.size() * static_cast<std::size_t>(resolution));
  grid.weights.reserve(grid.nodes.capacity());
  const double half = 0.5 * radius;
  grid.min_spacing = half * (radial.nodes[0] + 1.0);
  for (int i = 0; i < resolution; ++i) {
    const double r = half * (radial.nodes[i] + 1.0);
    const double wr = half * radial.weights[i] * std::pow(r, static_cast<double>(dim) - 1.0);
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      grid.nodes.push_back(center + r * dirs[k]);
      grid.weights.push_back(wr * dir_w[k]);
    }
  }
  return grid;
}

/// Sum of weight * integrand(node). Throws NonFiniteValue naming the node on NaN/Inf.
template <class F>
double integrate(const QuadratureGrid& grid, F&& integrand) {
  CompensatedSum s;
  for (std::size_t k = 0; k < grid.nodes.size(); ++k) {
    const double v = integrand(grid.nodes[k]);
    if (!std::isfinite(v)) throw NonFiniteValue("non-finite integrand value", grid.nodes[k]);
    s.add(grid.weights[k] * v);
  }
  return s.value();
}

enum class PvMode { DropNodes, LimitSequence };

/// Principal-value exclusion: nodes with ||node - x|| <= exclusion_radius are dropped
/// (with radius 0 only exact coincidence is dropped).
struct PvPolicy {
  double exclusion_radius = 0.0;
  PvMode mode = PvMode::DropNodes;
};

/// Drop nodes within half the minimal node spacing of x.
inline PvPolicy default_pv_policy(const QuadratureGrid& grid) {
  const double eps = std::isfinite(grid.min_spacing) ? 0.5 * grid.min_spacing : 0.0;
  return PvPolicy{eps, PvMode::DropNodes};
}

namespace detail {

template <class F>
Vector pv_drop_sum(const QuadratureGrid& grid, const Point& x, double eps, Eigen::Index out_dim,
                   F& integrand) {
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(out_dim));
  const double eps2 = eps * eps;
  for (std::size_t k = 0; k < grid.nodes.size(); ++k) {
    const double d2 = (grid.nodes[k] - x).squaredNorm();
    if (d2 == 0.0 || d2 <= eps2) continue;
    const Vector v = integrand(k, grid.nodes[k]);
    for (Eigen::Index c = 0; c < out_dim; ++c) {
      if (!std::isfinite(v[c])) throw NonFiniteValue("non-finite integrand value", grid.nodes[k]);
      acc[static_cast<std::size_t>(c)].add(grid.weights[k] * v[c]);
    }
  }
  Vector out(out_dim);
  for (Eigen::Index c = 0; c < out_dim; ++c) out[c] = acc[static_cast<std::size_t>(c)].value();
  return out;
}

}  // namespace detail

/// Like pv_integrate_vector, with integrand(node_index, node).
template <class F>
Vector pv_integrate_indexed(const QuadratureGrid& grid, const Point& x, const PvPolicy& policy,
                            Eigen::Index out_dim, F&& integrand) {
  if (policy.exclusion_radius < 0.0) throw InvalidArgument("exclusion radius must be >= 0");
  if (policy.mode == PvMode::DropNodes)
    return detail::pv_drop_sum(grid, x, policy.exclusion_radius, out_dim, integrand);

  const double eps = policy.exclusion_radius;
  const Vector i0 = detail::pv_drop_sum(grid, x, eps, out_dim, integrand);
  const Vector i1 = detail::pv_drop_sum(grid, x, 0.5 * eps, out_dim, integrand);
  const Vector i2 = detail::pv_drop_sum(grid, x, 0.25 * eps, out_dim, integrand);
  Vector out = i2;
  for (Eigen::Index c = 0; c < out_dim; ++c) {
    const double d1 = i1[c] - i0[c];
    const double d2 = i2[c] - i1[c];
    const double scale = std::max({std::abs(i0[c]), std::abs(i1[c]), std::abs(i2[c]), 1e-300});
    if (std::abs(d2) > std::abs(d1) + 1e-13 * scale)
      throw DivergenceError("principal-value limit sequence is not converging");
    if (d1 != 0.0) {
      const double ratio = d2 / d1;
      if (ratio >= 0.0 && ratio < 1.0) out[c] = i2[c] + d2 * ratio / (1.0 - ratio);
    }
  }
  return out;
}

/// Vector-valued principal-value integral of integrand(y) over the grid, singular at x.
/// LimitSequence evaluates the exclusion at eps, eps/2, eps/4 and extrapolates the
/// geometric tail (Aitken); growing level-to-level changes raise DivergenceError.
template <class F>
Vector pv_integrate_vector(const QuadratureGrid& grid, const Point& x, const PvPolicy& policy,
                           Eigen::Index out_dim, F&& integrand) {
  return pv_integrate_indexed(grid, x, policy, out_dim,
                              [&](std::size_t, const Point& y) { return integrand(y); });
}

/// Scalar principal-value integral; see pv_integrate_vector.
template <class F>
double pv_integrate(const QuadratureGrid& grid, const Point& x, const PvPolicy& policy,
                    F&& integrand) {
  auto wrapped = [&](const Point& y) { return Vector::Constant(1, integrand(y)); };
  return pv_integrate_vector(grid, x, policy, 1, wrapped)[0];
}

}  // namespace nonlocal
