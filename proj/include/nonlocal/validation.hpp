#pragma once

// Independent oracles (finite differences, Monte Carlo, brute force), the test-field
// catalog and the convergence-sweep harness.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nonlocal/errors.hpp"
#include "nonlocal/geometry.hpp"
#include "nonlocal/kernels.hpp"
#include "nonlocal/operators.hpp"
#include "nonlocal/optimizers.hpp"
#include "nonlocal/parallel.hpp"

namespace nonlocal {

/// Central differences per axis. With a domain, x must keep a margin of `step` to the boundary.
inline Vector fd_gradient(const ScalarField& field, const Point& x, double step,
                          const std::optional<BoxDomain>& domain = std::nullopt) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  if (domain && domain->interior_margin(x) < step)
    throw DomainError("finite-difference stencil needs an interior margin >= step");
  return detail::central_fd_gradient(field, x, step);
}

struct McEstimate {
  Vector mean;
  Vector stderr_;
};

/// D * mean of k_u(x, x - h_i), h_i ~ rho, rejecting samples with x - h_i outside the domain.
inline McEstimate mc_nonlocal_gradient(const ScalarField& field, const Point& x,
                                       const RadialKernel& kernel, const BoxDomain& domain,
                                       std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw InvalidArgument("Monte Carlo needs at least two samples");
  domain.check_dim(x);
  Rng rng(seed);
  const auto D = x.size();
  const double ux = field(x);
  Vector mean = Vector::Zero(D), m2 = Vector::Zero(D);
  for (std::size_t s = 1; s <= samples; ++s) {
    const Point y = sample_neighbour(kernel, domain, x, rng);
    const Vector d = x - y;
    const Vector g = static_cast<double>(D) * (ux - field(y)) / d.squaredNorm() * d;
    const Vector delta = g - mean;
    mean += delta / static_cast<double>(s);
    m2 += delta.cwiseProduct(g - mean);
  }
  const double n = static_cast<double>(samples);
  return {mean, (m2 / (n - 1.0) / n).cwiseSqrt()};
}

struct BruteForceResult {
  Point point;
  double value = 0.0;
};

/// Grid argmin over cell midpoints (first index wins ties), then coordinate-wise
/// golden-section polishing inside the winning cell.
inline BruteForceResult brute_force_min(const ScalarField& field, const BoxDomain& domain,
                                        int resolution, double budget = kDefaultNodeBudget) {
  const QuadratureGrid grid =
      build_box_grid(domain, resolution, QuadratureScheme::TensorMidpoint, budget);
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = field(grid.nodes[k]);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  Point x = grid.nodes[best];
  const Vector half = 0.5 * domain.extent() / resolution;
  for (int sweep = 0; sweep < 4; ++sweep) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double lo = grid.nodes[best][i] - half[i];
      const double span = 2.0 * half[i];
      auto phi = [&](double t) {
        Point p = x;
        p[i] = lo + t;
        return field(p);
      };
      const auto r = grid_golden_search(phi, span, 16, 1e-12 * std::max(1.0, span));
      if (r.value < best_val) {
        best_val = r.value;
        x[i] = lo + r.alpha;
      }
    }
  }
  return {x, best_val};
}

enum class Regularity { C0, Lipschitz, C1, C2, C2c, Smooth };

inline std::string to_string(Regularity r) {
  switch (r) {
    case Regularity::C0: return "C0";
    case Regularity::Lipschitz: return "Lipschitz";
    case Regularity::C1: return "C1";
    case Regularity::C2: return "C2";
    case Regularity::C2c: return "C2c";
    case Regularity::Smooth: return "Cinf";
  }
  return "?";
}

struct CatalogEntry {
  std::string name;
  ScalarField field;
  Regularity regularity = Regularity::Smooth;
  std::optional<Point> minimizer;
  BoxDomain domain = BoxDomain::unit(1);
};

namespace detail {

inline Vector head(std::initializer_list<double> values, std::size_t dim) {
  std::vector<double> v(values);
  if (dim > v.size()) throw InvalidArgument("catalog fields support D <= " + std::to_string(v.size()));
  Vector out(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

inline Matrix spd_matrix(std::size_t dim) {
  Matrix A = Matrix::Constant(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim), 0.3);
  for (std::size_t i = 0; i < dim; ++i) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0 + i;
  return A;
}

inline ScalarField quadratic_about(const Matrix& A, const Vector& c, double scale) {
  ScalarField f;
  f.eval = [A, c, scale](const Point& x) { return scale * (x - c).dot(A * (x - c)); };
  f.analytic_gradient = [A, c, scale](const Point& x) -> Vector { return 2.0 * scale * A * (x - c); };
  f.analytic_hessian = [A, scale](const Point&) -> Matrix { return 2.0 * scale * A; };
  return f;
}

}  // namespace detail

inline std::vector<std::string> catalog_names() {
  return {"constant",   "linear",         "norm-squared",      "half-square",
          "quadratic-spd", "quadratic-indefinite", "sin-product", "quartic-quadratic",
          "ridge",      "bump-field"};
}

/// Built-in test fields on the unit box [0, 1]^D (D <= 3).
inline CatalogEntry catalog_field(const std::string& requested, std::size_t dim) {
  std::string name = requested;
  if (name == "quadratic") name = "quadratic-spd";
  if (name == "sin") name = "sin-product";
  if (dim == 0 || dim > 3) throw InvalidArgument("catalog fields support 1 <= D <= 3");
  const auto D = static_cast<Eigen::Index>(dim);
  CatalogEntry e;
  e.name = name;
  e.domain = BoxDomain::unit(dim);
  ScalarField& f = e.field;
  if (name == "constant") {
    f.eval = [](const Point&) { return 1.0; };
    f.analytic_gradient = [D](const Point&) -> Vector { return Vector::Zero(D); };
    f.analytic_hessian = [D](const Point&) -> Matrix { return Matrix::Zero(D, D); };
    f.lipschitz_hint = 0.0;
    e.regularity = Regularity::Smooth;
  } else if (name == "linear") {
    const Vector w = detail::head({1.0, -2.0, 0.5}, dim);
    f.eval = [w](const Point& x) { return w.dot(x) + 0.25; };
    f.analytic_gradient = [w](const Point&) -> Vector { return w; };
    f.analytic_hessian = [D](const Point&) -> Matrix { return Matrix::Zero(D, D); };
    f.lipschitz_hint = w.norm();
    e.regularity = Regularity::Smooth;
  } else if (name == "norm-squared" || name == "half-square") {
    const double s = name == "norm-squared" ? 1.0 : 0.5;
    f = detail::quadratic_about(Matrix::Identity(D, D), Vector::Zero(D), s);
    f.lipschitz_hint = 2.0 * s * std::sqrt(static_cast<double>(dim));
    e.minimizer = Vector::Zero(D);
    e.regularity = Regularity::Smooth;
  } else if (name == "quadratic-spd") {
    const Vector c = detail::head({0.5, 0.4, 0.6}, dim);
    f = detail::quadratic_about(detail::spd_matrix(dim), c, 0.5);
    e.minimizer = c;
    e.regularity = Regularity::Smooth;
  } else if (name == "quadratic-indefinite") {
    Matrix S = Matrix::Constant(D, D, 0.2);
    const Vector diag = detail::head({1.0, -1.0, 2.0}, dim);
    for (Eigen::Index i = 0; i < D; ++i) S(i, i) = diag[i];
    f = detail::quadratic_about(S, Vector::Constant(D, 0.5), 0.5);
    e.regularity = Regularity::Smooth;
  } else if (name == "sin-product") {
    constexpr double w = 2.0 * std::numbers::pi;
    f.eval = [](const Point& x) {
      double p = 1.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) p *= std::sin(w * x[i]);
      return p;
    };
    f.analytic_gradient = [](const Point& x) -> Vector {
      Vector g(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        double p = w * std::cos(w * x[i]);
        for (Eigen::Index j = 0; j < x.size(); ++j)
          if (j != i) p *= std::sin(w * x[j]);
        g[i] = p;
      }
      return g;
    };
    f.analytic_hessian = [](const Point& x) -> Matrix {
      const auto n = x.size();
      Matrix H(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          double p = 1.0;
          for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i && k == j)
              p *= -w * w * std::sin(w * x[k]);
            else if (k == i || k == j)
              p *= w * std::cos(w * x[k]);
            else
              p *= std::sin(w * x[k]);
          }
          H(i, j) = p;
        }
      return H;
    };
    f.lipschitz_hint = w * std::sqrt(static_cast<double>(dim));
    Point m = Point::Constant(D, 0.25);
    m[0] = 0.75;
    e.minimizer = m;
    e.regularity = Regularity::Smooth;
  } else if (name == "quartic-quadratic") {
    const Vector c = detail::head({0.6, 0.4, 0.55}, dim);
    const Matrix A = detail::spd_matrix(dim);
    constexpr double gamma = 2.0;
    f.eval = [A, c](const Point& x) {
      return 0.5 * (x - c).dot(A * (x - c)) + gamma * (x.array() - 0.5).pow(4).sum();
    };
    f.analytic_gradient = [A, c](const Point& x) -> Vector {
      return A * (x - c) + (4.0 * gamma * (x.array() - 0.5).pow(3)).matrix();
    };
    f.analytic_hessian = [A](const Point& x) -> Matrix {
      Matrix H = A;
      for (Eigen::Index i = 0; i < x.size(); ++i) H(i, i) += 12.0 * gamma * std::pow(x[i] - 0.5, 2);
      return H;
    };
    Point x = c;
    for (int it = 0; it < 50; ++it) x -= (*f.analytic_hessian)(x).lu().solve((*f.analytic_gradient)(x));
    e.minimizer = x;
    e.regularity = Regularity::Smooth;
  } else if (name == "ridge") {
    constexpr double M = 1.5, c = 0.4;
    f.eval = [](const Point& x) { return M * std::abs(x[0] - c); };
    f.lipschitz_hint = M;
    Point m = Point::Constant(D, 0.5);
    m[0] = c;
    e.minimizer = m;
    e.regularity = Regularity::Lipschitz;
  } else if (name == "bump-field") {
    constexpr double r = 0.3;
    const Vector c = Vector::Constant(D, 0.5);
    f.eval = [c](const Point& x) {
      const double s = (x - c).squaredNorm() / (r * r);
      return s < 1.0 ? -std::pow(1.0 - s, 3) : 0.0;
    };
    f.analytic_gradient = [c](const Point& x) -> Vector {
      const double s = (x - c).squaredNorm() / (r * r);
      if (s >= 1.0) return Vector::Zero(x.size());
      return 6.0 * std::pow(1.0 - s, 2) / (r * r) * (x - c);
    };
    f.analytic_hessian = [c](const Point& x) -> Matrix {
      const auto n = x.size();
      const double s = (x - c).squaredNorm() / (r * r);
      if (s >= 1.0) return Matrix::Zero(n, n);
      const Vector d = x - c;
      return 6.0 / (r * r) *
             (std::pow(1.0 - s, 2) * Matrix::Identity(n, n) - 4.0 * (1.0 - s) / (r * r) * d * d.transpose());
    };
    // max of 6 (1 - s)^2 sqrt(s) / r, attained at s = 1/5.
    f.lipschitz_hint = 6.0 / r * 0.64 * std::sqrt(0.2);
    f.compact_support = BoxDomain::cube(dim, 0.5 - r, 0.5 + r);
    e.minimizer = c;
    e.regularity = Regularity::C2c;
  } else {
    throw InvalidArgument("unknown catalog field '" + requested + "'");
  }
  return e;
}

/// Deterministic probe points, uniform in [lower + margin, upper - margin].
inline std::vector<Point> probe_points(const BoxDomain& domain, double margin, std::size_t count,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Point p(static_cast<Eigen::Index>(domain.dim()));
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      std::uniform_real_distribution<double> u(domain.lower()[i] + margin, domain.upper()[i] - margin);
      p[i] = u(rng);
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct GradientCheck {
  double max_error = 0.0;
  Point location;
};

/// max over probes of ||∇_n u - ∇u|| with probes kept one kernel reach away from the boundary.
inline GradientCheck gradient_check(const ScalarField& field, const NonlocalGradientConfig& cfg,
                                    std::size_t probes, std::uint64_t seed) {
  if (!field.analytic_gradient) throw MissingDerivative("gradient check needs an analytic gradient");
  const double margin = std::min(cfg.kernel.effective_radius(), 0.49 * cfg.domain.extent().minCoeff());
  GradientCheck r;
  for (const auto& x : probe_points(cfg.domain, margin, probes, seed)) {
    const double err = (nonlocal_gradient(field, x, cfg) - (*field.analytic_gradient)(x)).norm();
    if (err >= r.max_error) {
      r.max_error = err;
      r.location = x;
    }
  }
  return r;
}

struct SweepReport {
  std::string check;
  std::vector<double> params;
  std::vector<double> errors;
  std::vector<Point> locations;
  std::vector<std::string> notes;
  /// Standard error per entry for Monte Carlo checks, 0 otherwise.
  std::vector<double> stderrs;
  bool strictly_decreasing = false;
  /// Decreasing up to a single inversion below the 1e-9 quadrature noise floor.
  bool monotone = false;

  void finalize() {
    strictly_decreasing = true;
    int inversions = 0;
    bool small = true;
    for (std::size_t i = 1; i < errors.size(); ++i) {
      if (!(errors[i] < errors[i - 1])) {
        strictly_decreasing = false;
        ++inversions;
        if (!(errors[i] - errors[i - 1] < 1e-9)) small = false;
      }
    }
    monotone = inversions == 0 || (inversions == 1 && small);
  }
};

struct SweepSettings {
  std::string field;  // empty: the check's default field
  std::size_t dim = 1;
  KernelFamily family = KernelFamily::Gaussian;
  double base_scale = 0.1;
  int resolution = 512;
  std::size_t probes = 50;
  std::uint64_t seed = 1;
  int workers = 1;
  // iterate-tracking
  double tracking_x0 = 0.01;
  double tracking_alpha0 = 0.3;
  double tracking_q = 0.6;
  std::size_t tracking_steps = 20;
  // sgd-bound
  std::size_t sgd_seeds = 400;
  std::size_t sgd_K = 100;
  double sgd_B = 1.0;
  double sgd_M = 2.0;
  double sgd_epsilon = 0.02;
  // newton-floor
  std::size_t newton_steps = 12;
  double newton_offset = 0.12;
};

inline std::vector<std::string> sweep_check_names() {
  return {"gradient-localization", "hessian-localization", "taylor-remainder", "iterate-tracking",
          "sgd-bound",             "newton-floor",         "moment-c"};
}

inline RadialKernel make_kernel(KernelFamily family, std::size_t dim, int n, double base_scale) {
  switch (family) {
    case KernelFamily::Gaussian: return RadialKernel::gaussian(dim, n, base_scale);
    case KernelFamily::Bump: return RadialKernel::bump(dim, n, base_scale);
    case KernelFamily::Custom: break;
  }
  throw InvalidArgument("sweeps support the gaussian and bump families");
}

namespace detail {

struct SweepPoint {
  double error = 0.0;
  Point location;
  std::string note;
  double stderr_ = 0.0;
};

inline double max_reach(const SweepSettings& s, const std::vector<int>& ns) {
  const int n_min = *std::min_element(ns.begin(), ns.end());
  return make_kernel(s.family, s.dim, n_min, s.base_scale).effective_radius();
}

inline SweepPoint sweep_gradient_localization(const SweepSettings& s, int n, double margin) {
  const auto entry = catalog_field(s.field.empty() ? "sin-product" : s.field, s.dim);
  const NonlocalGradientConfig cfg(entry.domain, make_kernel(s.family, s.dim, n, s.base_scale),
                                   s.resolution);
  SweepPoint r;
  for (const auto& x : probe_points(entry.domain, margin, s.probes, s.seed)) {
    const double err = (nonlocal_gradient(entry.field, x, cfg) - (*entry.field.analytic_gradient)(x)).norm();
    if (err >= r.error) {
      r.error = err;
      r.location = x;
    }
  }
  return r;
}

inline SweepPoint sweep_hessian_localization(const SweepSettings& s, int n) {
  const auto entry = catalog_field(s.field.empty() ? "bump-field" : s.field, s.dim);
  const NonlocalGradientConfig cfg(entry.domain, make_kernel(s.family, s.dim, n, s.base_scale),
                                   s.resolution);
  SweepPoint r;
  for (const auto& x : probe_points(entry.domain, 0.05, s.probes, s.seed)) {
    const Matrix H = nonlocal_hessian(entry.field, x, HessianVariant::H4(n), cfg);
    const double err = (H - (*entry.field.analytic_hessian)(x)).cwiseAbs().maxCoeff();
    if (err >= r.error) {
      r.error = err;
      r.location = x;
    }
  }
  return r;
}

inline SweepPoint sweep_taylor(const SweepSettings& s, int n, double margin) {
  const auto entry = catalog_field(s.field.empty() ? "bump-field" : s.field, s.dim);
  const NonlocalGradientConfig cfg(entry.domain, make_kernel(s.family, s.dim, n, s.base_scale),
                                   s.resolution);
  const auto& grad = *entry.field.analytic_gradient;
  const auto bases = probe_points(entry.domain, margin, 200, s.seed);
  const auto targets = probe_points(entry.domain, margin, 200, s.seed + 1);
  SweepPoint r;
  for (std::size_t k = 0; k < bases.size(); ++k) {
    const TaylorData t = taylor_affine(entry.field, bases[k], cfg);
    const Point& x = targets[k];
    const double r_local = entry.field(x) - entry.field(bases[k]) - (x - bases[k]).dot(grad(bases[k]));
    const double err = std::abs(t.remainder(x) - r_local);
    if (err >= r.error) {
      r.error = err;
      r.location = bases[k];
    }
  }
  return r;
}

inline SweepPoint sweep_iterate_tracking(const SweepSettings& s, int n) {
  const auto entry = catalog_field(s.field.empty() ? "quadratic-spd" : s.field, s.dim);
  const NonlocalGradientConfig cfg(entry.domain, make_kernel(s.family, s.dim, n, s.base_scale),
                                   s.resolution);
  const auto schedule = StepSchedule::summable_geometric(s.tracking_alpha0, s.tracking_q);
  const Point x0 = Point::Constant(static_cast<Eigen::Index>(s.dim), s.tracking_x0);
  const auto nl = nlgd_fixed(entry.field, x0, cfg, schedule, s.tracking_steps, 0.0);
  LocalOptions lo;
  lo.schedule = schedule;
  const auto cl = local_counterpart(entry.field, x0, LocalMethod::GD, lo, s.tracking_steps, 0.0);
  SweepPoint r;
  const std::size_t m = std::min(nl.size(), cl.size());
  for (std::size_t k = 0; k < m; ++k) {
    const double gap = (nl.iterates[k] - cl.iterates[k]).norm();
    if (gap >= r.error) {
      r.error = gap;
      r.location = nl.iterates[k];
    }
  }
  r.note = "steps=" + std::to_string(m - 1) + " termination=" + to_string(nl.termination);
  return r;
}

inline SweepPoint sweep_sgd_bound(const SweepSettings& s, int n) {
  const BoxDomain domain = BoxDomain::cube(s.dim, -1.0, 1.0);
  ScalarField u;
  u.eval = [](const Point& x) { return x.squaredNorm(); };
  const auto kernel = make_kernel(s.family, s.dim, n, s.base_scale);
  std::vector<double> gaps(s.sgd_seeds);
  parallel_for(s.sgd_seeds, s.workers, [&](std::size_t i) {
    SgdConfig c{s.sgd_B, s.sgd_M, s.sgd_K, s.sgd_epsilon, s.seed + i};
    gaps[i] = u(epsilon_sgd(u, c, kernel, domain).x_bar);
  });
  double mean = 0.0;
  for (double g : gaps) mean += g;
  mean /= static_cast<double>(gaps.size());
  double var = 0.0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  const double se = std::sqrt(var / (gaps.size() - 1.0) / gaps.size());
  SweepPoint r;
  r.error = mean;
  r.stderr_ = se;
  r.location = domain.center();
  const SgdConfig c{s.sgd_B, s.sgd_M, s.sgd_K, s.sgd_epsilon, 0};
  char buf[160];
  std::snprintf(buf, sizeof buf, "stderr=%.6g bound=%.6g", se, c.bound());
  r.note = buf;
  return r;
}

inline SweepPoint sweep_newton_floor(const SweepSettings& s, int n) {
  const auto entry = catalog_field(s.field.empty() ? "quartic-quadratic" : s.field, s.dim);
  if (!entry.minimizer) throw InvalidArgument("newton-floor needs a field with a known minimizer");
  const NonlocalGradientConfig cfg(entry.domain, make_kernel(s.family, s.dim, n, s.base_scale),
                                   s.resolution);
  Point x0 = *entry.minimizer;
  x0[0] += s.newton_offset;
  if (x0.size() > 1) x0[1] -= 0.6 * s.newton_offset;
  const auto tr = nonlocal_newton(entry.field, x0, cfg, {}, s.newton_steps, 0.0);
  SweepPoint r;
  r.error = (tr.last() - *entry.minimizer).norm();
  r.location = tr.last();
  r.note = "iterations=" + std::to_string(tr.size() - 1);
  return r;
}

inline SweepPoint sweep_moment_c(const SweepSettings& s, int n) {
  const BoxDomain domain = BoxDomain::unit(s.dim);
  const auto kernel = make_kernel(s.family, s.dim, n, s.base_scale);
  const Point x = domain.center();
  const auto d = moment_diagnostics(kernel, domain, x, std::min(s.resolution, s.dim == 1 ? 512 : 128));
  SweepPoint r;
  r.error = (static_cast<double>(s.dim) * d.c_values.array() - 1.0).abs().maxCoeff();
  r.location = x;
  return r;
}

}  // namespace detail

/// Runs a named check for every n and records one error per n.
inline SweepReport convergence_sweep(const std::string& check, const std::vector<int>& n_values,
                                     const SweepSettings& settings) {
  const auto names = sweep_check_names();
  if (std::find(names.begin(), names.end(), check) == names.end())
    throw InvalidArgument("unknown sweep check '" + check + "'");
  if (n_values.empty()) throw InvalidArgument("sweep needs at least one n");
  const double margin = std::min(detail::max_reach(settings, n_values), 0.49);
  std::vector<detail::SweepPoint> pts(n_values.size());
  // sgd-bound parallelizes over seeds instead.
  const int outer_workers = check == "sgd-bound" ? 1 : settings.workers;
  parallel_for(n_values.size(), outer_workers, [&](std::size_t i) {
    const int n = n_values[i];
    if (check == "gradient-localization") pts[i] = detail::sweep_gradient_localization(settings, n, margin);
    else if (check == "hessian-localization") pts[i] = detail::sweep_hessian_localization(settings, n);
    else if (check == "taylor-remainder") pts[i] = detail::sweep_taylor(settings, n, margin);
    else if (check == "iterate-tracking") pts[i] = detail::sweep_iterate_tracking(settings, n);
    else if (check == "sgd-bound") pts[i] = detail::sweep_sgd_bound(settings, n);
    else if (check == "newton-floor") pts[i] = detail::sweep_newton_floor(settings, n);
    else pts[i] = detail::sweep_moment_c(settings, n);
  });
  SweepReport rep;
  rep.check = check;
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    rep.params.push_back(n_values[i]);
    rep.errors.push_back(pts[i].error);
    rep.locations.push_back(pts[i].location);
    rep.notes.push_back(pts[i].note);
    rep.stderrs.push_back(pts[i].stderr_);
  }
  rep.finalize();
  return rep;
}

}  // namespace nonlocal
