#pragma once

// Radial densities rho_n approximating the Dirac mass: nonnegative, unit mass,
// concentrating at the origin as the scale index n grows (width = base_scale / n).

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "nonlocal/errors.hpp"
#include "nonlocal/geometry.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

enum class KernelFamily { Gaussian, Bump, Custom };

inline std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Bump: return "bump";
    case KernelFamily::Custom: return "custom";
  }
  return "unknown";
}

/// Radial profile psi(t), t = ||h|| / scale, vanishing for t >= effective_radius.
struct CustomProfile {
  std::function<double(double)> profile;
  double effective_radius = 1.0;
};

using Rng = std::mt19937_64;

/// Surface area of the unit sphere S^{D-1} in R^D.
inline double unit_sphere_area(std::size_t dim) {
  const double d = static_cast<double>(dim);
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

/// Composite Gauss-Legendre integral of f over [a, b].
template <class F>
double composite_gauss(F&& f, double a, double b, int panels = 64, int order = 20) {
  if (!(b > a)) return 0.0;
  const Rule1D& rule = gauss_legendre_rule(order);
  const double h = (b - a) / panels;
  CompensatedSum s;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (int i = 0; i < order; ++i) {
      const double t = lo + 0.5 * h * (rule.nodes[i] + 1.0);
      s.add(0.5 * h * rule.weights[i] * f(t));
    }
  }
  return s.value();
}

namespace detail {

inline double bump_profile(double t) {
  if (t >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - t * t));
}

/// ∫_{B_R} psi(||h||) dh for the unit-scale profile.
template <class Profile>
double unit_profile_mass(std::size_t dim, double radius, Profile&& psi) {
  const double d = static_cast<double>(dim);
  return unit_sphere_area(dim) *
         composite_gauss([&](double t) { return psi(t) * std::pow(t, d - 1.0); }, 0.0, radius,
                         128, 20);
}

/// Bump mass per dimension, computed once and cached.
inline double bump_unit_mass(std::size_t dim) {
  static std::mutex mu;
  static std::map<std::size_t, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;
  const double m = unit_profile_mass(dim, 1.0, bump_profile);
  cache.emplace(dim, m);
  return m;
}

}  // namespace detail

/// One member rho_n of a radial Dirac-approximating family.
class RadialKernel {
 public:
  static constexpr double kGaussianCutoff = 6.0;  // effective radius in standard deviations
  static constexpr double kGaussianTailCutoff = 40.0;

  static RadialKernel gaussian(std::size_t dim, int n, double base_scale = 0.1) {
    return RadialKernel(KernelFamily::Gaussian, dim, n, base_scale, nullptr);
  }
  static RadialKernel bump(std::size_t dim, int n, double base_scale = 0.2) {
    return RadialKernel(KernelFamily::Bump, dim, n, base_scale, nullptr);
  }
  /// Custom profile; validated for nonnegativity and positive finite mass.
  static RadialKernel custom(std::size_t dim, int n, double base_scale, CustomProfile profile) {
    if (!profile.profile) throw InvalidArgument("custom kernel needs a profile function");
    if (!(profile.effective_radius > 0.0))
      throw InvalidArgument("custom kernel effective radius must be positive");
    auto shared = std::make_shared<CustomState>();
    shared->profile = std::move(profile);
    double peak = 0.0;
    for (int i = 0; i <= 4096; ++i) {
      const double t = shared->profile.effective_radius * i / 4096.0;
      const double v = shared->profile.profile(t);
      if (!std::isfinite(v) || v < 0.0)
        throw InvalidArgument("custom kernel profile must be finite and nonnegative");
      peak = std::max(peak, v);
    }
    shared->peak = 1.05 * peak;
    shared->unit_mass =
        detail::unit_profile_mass(dim, shared->profile.effective_radius, shared->profile.profile);
    if (!(shared->unit_mass > 0.0) || !std::isfinite(shared->unit_mass))
      throw InvalidArgument("custom kernel profile must have positive finite mass");
    return RadialKernel(KernelFamily::Custom, dim, n, base_scale, std::move(shared));
  }

  KernelFamily family() const noexcept { return family_; }
  std::size_t dim() const noexcept { return dim_; }
  int n() const noexcept { return n_; }
  double base_scale() const noexcept { return base_scale_; }
  /// sigma_n (Gaussian) or r_n (bump, custom unit) = base_scale / n.
  double scale() const noexcept { return base_scale_ / n_; }
  double normalization() const noexcept { return normalization_; }

  /// Radius of the ball that carries the kernel for integration purposes:
  /// r_n for compact kernels, 6 sigma_n for the Gaussian.
  double effective_radius() const noexcept {
    switch (family_) {
      case KernelFamily::Gaussian: return kGaussianCutoff * scale();
      case KernelFamily::Bump: return scale();
      case KernelFamily::Custom: return custom_->profile.effective_radius * scale();
    }
    return scale();
  }

  /// Exact support radius; nullopt for the Gaussian.
  std::optional<double> support_radius() const noexcept {
    if (family_ == KernelFamily::Gaussian) return std::nullopt;
    return effective_radius();
  }

  /// The radial profile: rho_n(h) = radial(||h||).
  double radial(double r) const {
    const double t = r / scale();
    switch (family_) {
      case KernelFamily::Gaussian: return normalization_ * std::exp(-0.5 * t * t);
      case KernelFamily::Bump: return normalization_ * detail::bump_profile(t);
      case KernelFamily::Custom:
        return t >= custom_->profile.effective_radius ? 0.0
                                                      : normalization_ * custom_->profile.profile(t);
    }
    return 0.0;
  }

  double operator()(const Vector& h) const {
    if (static_cast<std::size_t>(h.size()) != dim_)
      throw DimensionMismatch(dim_, static_cast<std::size_t>(h.size()));
    return radial(h.norm());
  }

  /// Same family and base scale at another scale index.
  RadialKernel with_scale_index(int n) const {
    return RadialKernel(family_, dim_, n, base_scale_, custom_);
  }
  RadialKernel with_dim(std::size_t dim) const {
    if (family_ == KernelFamily::Custom)
      return custom(dim, n_, base_scale_, custom_->profile);
    return RadialKernel(family_, dim, n_, base_scale_, nullptr);
  }

  /// Maximum of the unnormalized unit profile (rejection envelope).
  double profile_peak() const {
    switch (family_) {
      case KernelFamily::Gaussian: return 1.0;
      case KernelFamily::Bump: return std::exp(-1.0);
      case KernelFamily::Custom: return custom_->peak;
    }
    return 1.0;
  }
  double unit_profile(double t) const {
    switch (family_) {
      case KernelFamily::Gaussian: return std::exp(-0.5 * t * t);
      case KernelFamily::Bump: return detail::bump_profile(t);
      case KernelFamily::Custom:
        return t >= custom_->profile.effective_radius ? 0.0 : custom_->profile.profile(t);
    }
    return 0.0;
  }

 private:
  struct CustomState {
    CustomProfile profile;
    double peak = 0.0;
    double unit_mass = 0.0;
  };

  RadialKernel(KernelFamily family, std::size_t dim, int n, double base_scale,
               std::shared_ptr<const CustomState> custom)
      : family_(family), dim_(dim), n_(n), base_scale_(base_scale), custom_(std::move(custom)) {
    if (dim_ == 0) throw InvalidArgument("kernel dimension must be positive");
    if (n_ < 1) throw InvalidArgument("kernel scale index n must be a positive integer");
    if (!(base_scale_ > 0.0) || !std::isfinite(base_scale_))
      throw InvalidArgument("kernel base scale must be positive");
    const double s = scale();
    const double d = static_cast<double>(dim_);
    switch (family_) {
      case KernelFamily::Gaussian:
        normalization_ = std::pow(2.0 * std::numbers::pi * s * s, -0.5 * d);
        break;
      case KernelFamily::Bump:
        normalization_ = 1.0 / (detail::bump_unit_mass(dim_) * std::pow(s, d));
        break;
      case KernelFamily::Custom:
        normalization_ = 1.0 / (custom_->unit_mass * std::pow(s, d));
        break;
    }
  }

  KernelFamily family_;
  std::size_t dim_;
  int n_;
  double base_scale_;
  std::shared_ptr<const CustomState> custom_;
  double normalization_ = 1.0;
};

inline double eval_density(const RadialKernel& kernel, const Vector& h) { return kernel(h); }

/// Mass of the kernel on the spherical shell a <= ||h|| <= b, by radial quadrature.
inline double shell_mass(const RadialKernel& kernel, double a, double b) {
  const double d = static_cast<double>(kernel.dim());
  return unit_sphere_area(kernel.dim()) *
         composite_gauss([&](double r) { return kernel.radial(r) * std::pow(r, d - 1.0); },
                         std::max(a, 0.0), b, 64, 20);
}

/// Outer radius beyond which the kernel carries no (representable) mass.
inline double mass_horizon(const RadialKernel& kernel) {
  if (auto r = kernel.support_radius()) return *r;
  return RadialKernel::kGaussianTailCutoff * kernel.scale();
}

/// Total mass by radial quadrature (independent of the normalization formula).
inline double total_mass(const RadialKernel& kernel) {
  return shell_mass(kernel, 0.0, mass_horizon(kernel));
}

/// ∫_{||h|| > delta} rho_n(h) dh.
inline double tail_mass(const RadialKernel& kernel, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("tail_mass requires delta > 0");
  const double horizon = mass_horizon(kernel);
  if (delta >= horizon) return 0.0;
  const double t = shell_mass(kernel, delta, horizon);
  return std::clamp(t, 0.0, 1.0);
}

/// Draws an offset h ~ rho_n. Gaussian by direct transform, compact families by rejection
/// against the uniform density on the support ball.
inline Vector sample_offset(const RadialKernel& kernel, Rng& rng) {
  const auto dim = static_cast<Eigen::Index>(kernel.dim());
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector h(dim);
  if (kernel.family() == KernelFamily::Gaussian) {
    for (Eigen::Index i = 0; i < dim; ++i) h[i] = kernel.scale() * normal(rng);
    return h;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double radius = kernel.effective_radius();
  const double unit_radius = radius / kernel.scale();
  const double peak = kernel.profile_peak();
  constexpr long kMaxAttempts = 1000000;
  for (long attempt = 0; attempt < kMaxAttempts; ++attempt) {
    double norm2 = 0.0;
    do {
      for (Eigen::Index i = 0; i < dim; ++i) h[i] = normal(rng);
      norm2 = h.squaredNorm();
    } while (norm2 == 0.0);
    const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
    h *= r / std::sqrt(norm2);
    const double t = r / kernel.scale();
    if (t < unit_radius && unif(rng) * peak <= kernel.unit_profile(t)) return h;
  }
  throw SamplingFailure("rejection sampler exceeded 1e6 attempts; kernel profile malformed?");
}

/// c_n^i(x) = ∫_Ω (x_i - y_i)^2 / ||x - y||^2 rho_n(x - y) dy. D * c -> 1 in the interior.
inline double moment_c(const RadialKernel& kernel, const BoxDomain& domain, const Point& x,
                       std::size_t axis, int resolution = 128) {
  if (kernel.dim() != domain.dim()) throw DimensionMismatch(domain.dim(), kernel.dim());
  domain.check_dim(x);
  if (axis >= domain.dim()) throw InvalidArgument("moment axis out of range");
  if (!domain.contains(x)) throw DomainError("moment_c requires an interior point");
  auto box = clipped_cube(x, kernel.effective_radius(), domain);
  if (!box) return 0.0;
  const QuadratureGrid grid = build_box_grid(*box, resolution);
  const auto i = static_cast<Eigen::Index>(axis);
  return pv_integrate(grid, x, default_pv_policy(grid), [&](const Point& y) {
    const Vector h = x - y;
    const double r2 = h.squaredNorm();
    return h[i] * h[i] / r2 * kernel.radial(std::sqrt(r2));
  });
}

/// Diagnostics bundle: c_n^i(x) for every axis.
struct MomentDiagnostics {
  Vector c_values;
  Point point;
  KernelFamily family = KernelFamily::Gaussian;
  int n = 1;
};

inline MomentDiagnostics moment_diagnostics(const RadialKernel& kernel, const BoxDomain& domain,
                                            const Point& x, int resolution = 128) {
  MomentDiagnostics d;
  d.point = x;
  d.family = kernel.family();
  d.n = kernel.n();
  d.c_values.resize(static_cast<Eigen::Index>(domain.dim()));
  for (std::size_t i = 0; i < domain.dim(); ++i)
    d.c_values[static_cast<Eigen::Index>(i)] = moment_c(kernel, domain, x, i, resolution);
  return d;
}

}  // namespace nonlocal
