#pragma once

// Nonlocal gradient, restricted gradient, the four nonlocal Hessians and the
// nonlocal Taylor approximant.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nonlocal/errors.hpp"
#include "nonlocal/geometry.hpp"
#include "nonlocal/kernels.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

struct NonlocalGradientConfig {
  BoxDomain domain;
  RadialKernel kernel;
  int resolution = 256;
  QuadratureScheme scheme = QuadratureScheme::TensorGaussLegendre;
  std::optional<PvPolicy> pv;
  double node_budget = kDefaultNodeBudget;

  NonlocalGradientConfig(BoxDomain d, RadialKernel k, int res = 256)
      : domain(std::move(d)), kernel(std::move(k)), resolution(res) {
    validate();
  }

  void validate() const {
    if (kernel.dim() != domain.dim()) throw DimensionMismatch(domain.dim(), kernel.dim());
    if (resolution < 2) throw InvalidArgument("quadrature resolution must be >= 2");
  }

  NonlocalGradientConfig with_kernel(RadialKernel k) const {
    NonlocalGradientConfig c = *this;
    c.kernel = std::move(k);
    c.validate();
    return c;
  }
  NonlocalGradientConfig with_n(int n) const { return with_kernel(kernel.with_scale_index(n)); }
};

/// k_u(x, y) = (u(x) - u(y)) / ||x - y||^2 * (x - y). No factor D.
inline Vector difference_quotient(const ScalarField& field, const Point& x, const Point& y) {
  if (x.size() != y.size())
    throw DimensionMismatch(static_cast<std::size_t>(x.size()), static_cast<std::size_t>(y.size()));
  const Vector d = x - y;
  const double r2 = d.squaredNorm();
  if (r2 == 0.0) throw CoincidentPoints();
  return (field(x) - field(y)) / r2 * d;
}

namespace detail {

inline double checked_eval(const ScalarField& field, const Point& x) {
  const double v = field(x);
  if (!std::isfinite(v)) throw NonFiniteValue("field value is not finite", x);
  return v;
}

inline void require_closed_point(const BoxDomain& domain, const Point& x) {
  domain.check_dim(x);
  if (!domain.contains_closed(x)) throw DomainError("point lies outside the domain");
}

/// D * PV-∫_box (v(x) - v(y)) ⊗ (x - y) / ||x - y||^2 * rho(x - y) dy, flattened row-major
/// over (component of v, axis). v_at(k, y) gives v at grid node k.
template <class VAt>
Vector kernel_difference_integral(const QuadratureGrid& grid, const Point& x, const Vector& vx,
                                  const RadialKernel& kernel,
                                  const std::optional<PvPolicy>& pv, VAt&& v_at) {
  const Eigen::Index dim = x.size();
  const Eigen::Index comps = vx.size();
  const PvPolicy policy = pv ? *pv : default_pv_policy(grid);
  Vector out = pv_integrate_indexed(grid, x, policy, comps * dim, [&](std::size_t k, const Point& y) {
    const Vector d = x - y;
    const double r2 = d.squaredNorm();
    const double w = kernel.radial(std::sqrt(r2)) / r2;
    const Vector vy = v_at(k, y);
    Vector r(comps * dim);
    for (Eigen::Index c = 0; c < comps; ++c)
      for (Eigen::Index j = 0; j < dim; ++j) r[c * dim + j] = (vx[c] - vy[c]) * d[j] * w;
    return r;
  });
  return static_cast<double>(dim) * out;
}

inline std::optional<QuadratureGrid> support_grid(const NonlocalGradientConfig& cfg,
                                                  const Point& x, const RadialKernel& kernel) {
  auto box = clipped_cube(x, kernel.effective_radius(), cfg.domain);
  if (!box) return std::nullopt;
  return build_box_grid(*box, cfg.resolution, cfg.scheme, cfg.node_budget);
}

}  // namespace detail

/// ∇_n u(x) = D ∫_Ω k_u(x, y) rho_n(x - y) dy, integrated over the kernel's support box ∩ Ω.
inline Vector nonlocal_gradient(const ScalarField& field, const Point& x,
                                const NonlocalGradientConfig& cfg) {
  cfg.validate();
  detail::require_closed_point(cfg.domain, x);
  const auto grid = detail::support_grid(cfg, x, cfg.kernel);
  if (!grid) return Vector::Zero(x.size());
  const Vector ux = Vector::Constant(1, detail::checked_eval(field, x));
  return detail::kernel_difference_integral(*grid, x, ux, cfg.kernel, cfg.pv,
                                            [&](std::size_t, const Point& y) {
                                              return Vector::Constant(1, field(y));
                                            });
}

/// Nonlocal gradient with the integral taken over subset ∩ Ω only.
inline Vector restricted_nonlocal_gradient(const ScalarField& field, const Point& x,
                                           const NonlocalGradientConfig& cfg,
                                           const SubsetIndicator& subset) {
  cfg.validate();
  detail::require_closed_point(cfg.domain, x);
  if (subset.dim() != cfg.domain.dim()) throw DimensionMismatch(cfg.domain.dim(), subset.dim());
  Vector total = Vector::Zero(x.size());
  if (subset.is_empty()) return total;
  auto support = clipped_cube(x, cfg.kernel.effective_radius(), cfg.domain);
  if (!support) return total;
  const Vector ux = Vector::Constant(1, detail::checked_eval(field, x));
  for (const auto& box : subset.boxes()) {
    auto part = support->intersect(box);
    if (!part) continue;
    const QuadratureGrid grid = build_box_grid(*part, cfg.resolution, cfg.scheme, cfg.node_budget);
    total += detail::kernel_difference_integral(grid, x, ux, cfg.kernel, cfg.pv,
                                                [&](std::size_t, const Point& y) {
                                                  return Vector::Constant(1, field(y));
                                                });
  }
  return total;
}

/// 1-D vanishing subset: returns Ω* = [x - b, x] ∪ [x, x + a]
/// with restricted gradient ≈ 0, found by shrinking the side whose contribution is in excess.
inline SubsetIndicator find_vanishing_subset_1d(const ScalarField& field, const Point& x_star,
                                                const NonlocalGradientConfig& cfg,
                                                double tolerance = 1e-12) {
  if (cfg.domain.dim() != 1) throw InvalidArgument("find_vanishing_subset_1d requires D = 1");
  detail::require_closed_point(cfg.domain, x_star);
  const double x = x_star[0];
  const double reach = cfg.kernel.effective_radius();
  const double a_max = std::min(reach, cfg.domain.upper()[0] - x);
  const double b_max = std::min(reach, x - cfg.domain.lower()[0]);
  if (!(a_max > 0.0) || !(b_max > 0.0)) throw NoBracket("x_star has no interior neighbourhood");

  auto side = [&](double lo, double hi) {
    return restricted_nonlocal_gradient(field, x_star, cfg,
                                        SubsetIndicator::intervals({{lo, hi}}))[0];
  };
  const double g_plus = side(x, x + a_max);
  const double g_minus = side(x - b_max, x);
  if (!(g_plus > 0.0) || !(g_minus < 0.0))
    throw NoBracket("restricted gradient has no sign change around x_star; not a local minimizer");

  const double excess = g_plus + g_minus;
  if (std::abs(excess) <= tolerance)
    return SubsetIndicator::intervals({{x - b_max, x}, {x, x + a_max}});

  const bool shrink_plus = excess > 0.0;
  const double fixed = shrink_plus ? g_minus : g_plus;
  double lo = 0.0, hi = shrink_plus ? a_max : b_max;
  double best = hi, best_res = excess;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double part = shrink_plus ? side(x, x + mid) : side(x - mid, x);
    const double res = part + fixed;
    if (std::abs(res) < std::abs(best_res)) {
      best = mid;
      best_res = res;
    }
    if (std::abs(res) <= tolerance) break;
    // |part| grows with the interval length.
    if ((res > 0.0) == shrink_plus)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
  }
  if (shrink_plus) return SubsetIndicator::intervals({{x - b_max, x}, {x, x + best}});
  return SubsetIndicator::intervals({{x - best, x}, {x, x + a_max}});
}

enum class HessianKind { H1, H2, H3, H4 };
enum class HessianConstant { PaperConstant, MomentConstant };

inline std::string to_string(HessianKind k) {
  switch (k) {
    case HessianKind::H1: return "H1";
    case HessianKind::H2: return "H2";
    case HessianKind::H3: return "H3";
    case HessianKind::H4: return "H4";
  }
  return "?";
}

struct HessianVariant {
  HessianKind kind = HessianKind::H4;
  int n = 1;
  int m = 1;  // outer scale, H1 only
  std::optional<double> fd_step;
  HessianConstant constant = HessianConstant::MomentConstant;

  static HessianVariant H1(int n, int m) { return {HessianKind::H1, n, m, std::nullopt, {}}; }
  static HessianVariant H2(int n, std::optional<double> fd_step = std::nullopt) {
    return {HessianKind::H2, n, n, fd_step, {}};
  }
  static HessianVariant H3(int n, double fd_step = 1e-5) {
    return {HessianKind::H3, n, n, fd_step, {}};
  }
  static HessianVariant H4(int n, HessianConstant c = HessianConstant::MomentConstant) {
    return {HessianKind::H4, n, n, std::nullopt, c};
  }
};

/// Prefactor of H4: D(D+1)/2 as printed, D(D+2)/2 from the radial moment identity.
inline double h4_prefactor(std::size_t dim, HessianConstant c) {
  const double d = static_cast<double>(dim);
  return c == HessianConstant::PaperConstant ? d * (d + 1.0) / 2.0 : d * (d + 2.0) / 2.0;
}

namespace detail {

inline Vector central_fd_gradient(const ScalarField& field, const Point& x, double step) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Point p = x, m = x;
    p[i] += step;
    m[i] -= step;
    g[i] = (field(p) - field(m)) / (2.0 * step);
  }
  return g;
}

inline Matrix unflatten(const Vector& flat, Eigen::Index dim) {
  Matrix h(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) h(i, j) = flat[i * dim + j];
  return h;
}

inline Matrix hessian_h1(const ScalarField& field, const Point& x, const HessianVariant& v,
                         const NonlocalGradientConfig& cfg) {
  const auto inner_cfg = cfg.with_n(v.n);
  const RadialKernel outer = cfg.kernel.with_scale_index(v.m);
  const Eigen::Index dim = x.size();
  const auto grid = support_grid(cfg, x, outer);
  if (!grid) return Matrix::Zero(dim, dim);
  const double nested = static_cast<double>(grid->size()) *
                        std::pow(static_cast<double>(cfg.resolution), static_cast<double>(dim));
  if (nested > cfg.node_budget) throw BudgetExceeded(nested, cfg.node_budget);
  std::vector<std::optional<Vector>> cache(grid->size());
  const Vector gx = nonlocal_gradient(field, x, inner_cfg);
  const Vector flat = kernel_difference_integral(
      *grid, x, gx, outer, cfg.pv, [&](std::size_t k, const Point& y) -> Vector {
        if (!cache[k]) cache[k] = nonlocal_gradient(field, y, inner_cfg);
        return *cache[k];
      });
  return unflatten(flat, dim);
}

inline Matrix hessian_h2(const ScalarField& field, const Point& x, const HessianVariant& v,
                         const NonlocalGradientConfig& cfg) {
  GradientFn grad;
  if (field.analytic_gradient) {
    grad = *field.analytic_gradient;
  } else if (v.fd_step) {
    const double s = *v.fd_step;
    grad = [&field, s](const Point& p) { return central_fd_gradient(field, p, s); };
  } else {
    throw MissingDerivative("H2 needs an analytic gradient or an fd_step");
  }
  const RadialKernel kernel = cfg.kernel.with_scale_index(v.n);
  const Eigen::Index dim = x.size();
  const auto grid = support_grid(cfg, x, kernel);
  if (!grid) return Matrix::Zero(dim, dim);
  const Vector gx = grad(x);
  const Vector flat = kernel_difference_integral(
      *grid, x, gx, kernel, cfg.pv, [&](std::size_t, const Point& y) { return grad(y); });
  return unflatten(flat, dim);
}

inline Matrix hessian_h3(const ScalarField& field, const Point& x, const HessianVariant& v,
                         const NonlocalGradientConfig& cfg) {
  if (!v.fd_step || !(*v.fd_step > 0.0)) throw MissingDerivative("H3 needs a positive fd_step");
  const double s = *v.fd_step;
  const auto inner = cfg.with_n(v.n);
  const Eigen::Index dim = x.size();
  Matrix h(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    Point p = x, m = x;
    p[j] += s;
    m[j] -= s;
    if (!cfg.domain.contains_closed(p) || !cfg.domain.contains_closed(m))
      throw DomainError("H3 finite-difference stencil leaves the domain");
    h.col(j) = (nonlocal_gradient(field, p, inner) - nonlocal_gradient(field, m, inner)) / (2.0 * s);
  }
  return h;
}

inline Matrix hessian_h4(const ScalarField& field, const Point& x, const HessianVariant& v,
                         const NonlocalGradientConfig& cfg) {
  const RadialKernel kernel = cfg.kernel.with_scale_index(v.n);
  const Eigen::Index dim = x.size();
  const double reach = kernel.effective_radius();
  const Vector r = Vector::Constant(dim, reach);
  ScalarField u = field;
  if (!(cfg.domain.contains_closed(x - r) && cfg.domain.contains_closed(x + r))) {
    if (!field.compact_support)
      throw DomainError(
          "H4 kernel ball leaves the domain and the field declares no compact support to "
          "extend by zero");
    u = extend_by_zero(field);
  }
  // Polar nodes never hit h = 0, and the direction-dependent factor stays smooth.
  const QuadratureGrid grid =
      dim <= 3 ? build_polar_grid(x, reach, cfg.resolution, cfg.node_budget)
               : build_box_grid(BoxDomain(x - r, x + r), cfg.resolution, cfg.scheme,
                                cfg.node_budget);
  const PvPolicy policy = cfg.pv ? *cfg.pv : PvPolicy{0.0, PvMode::DropNodes};
  const double ux2 = 2.0 * checked_eval(u, x);
  const Eigen::Index packed = dim * (dim + 1) / 2;
  const double trace_share = 1.0 / static_cast<double>(dim + 2);
  const Vector flat = pv_integrate_vector(grid, x, policy, packed, [&](const Point& y) {
    const Vector hv = y - x;
    const double r2 = hv.squaredNorm();
    const double second = u(y) - ux2 + u(x - hv);
    const double w = second / (r2 * r2) * kernel.radial(std::sqrt(r2));
    Vector out(packed);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = i; j < dim; ++j)
        out[k++] = w * (hv[i] * hv[j] - (i == j ? r2 * trace_share : 0.0));
    return out;
  });
  const double pref = h4_prefactor(static_cast<std::size_t>(dim), v.constant);
  Matrix h(dim, dim);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i; j < dim; ++j) {
      h(i, j) = pref * flat[k++];
      h(j, i) = h(i, j);
    }
  return h;
}

}  // namespace detail

/// One of the four nonlocal Hessians at x. cfg supplies domain, kernel family/base scale and
/// quadrature; the variant's n (and m for H1) select the scales.
inline Matrix nonlocal_hessian(const ScalarField& field, const Point& x,
                               const HessianVariant& variant, const NonlocalGradientConfig& cfg) {
  cfg.validate();
  if (variant.n < 1 || variant.m < 1) throw InvalidArgument("Hessian scale indices must be >= 1");
  detail::require_closed_point(cfg.domain, x);
  switch (variant.kind) {
    case HessianKind::H1: return detail::hessian_h1(field, x, variant, cfg);
    case HessianKind::H2: return detail::hessian_h2(field, x, variant, cfg);
    case HessianKind::H3: return detail::hessian_h3(field, x, variant, cfg);
    case HessianKind::H4: return detail::hessian_h4(field, x, variant, cfg);
  }
  throw InvalidArgument("unknown Hessian variant");
}

/// A_n(x0, x) = u(x0) + (x - x0)^T ∇_n u(x0) and r_n = u - A_n.
struct TaylorData {
  Point base;
  double value = 0.0;
  Vector gradient;
  ScalarField field;

  double affine(const Point& x) const { return value + (x - base).dot(gradient); }
  double remainder(const Point& x) const {
    if (x == base) return 0.0;
    return field(x) - affine(x);
  }
};

inline TaylorData taylor_affine(const ScalarField& field, const Point& x0,
                                const NonlocalGradientConfig& cfg) {
  detail::require_closed_point(cfg.domain, x0);
  TaylorData t;
  t.base = x0;
  t.value = detail::checked_eval(field, x0);
  t.gradient = nonlocal_gradient(field, x0, cfg);
  t.field = field;
  return t;
}

}  // namespace nonlocal
