#pragma once

// Pulse-translation estimation: recover the offset of a shifted rectangular pulse by
// nonlocal gradient descent on the (non-differentiable) L2 misfit.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nonlocal/errors.hpp"
#include "nonlocal/geometry.hpp"
#include "nonlocal/kernels.hpp"
#include "nonlocal/operators.hpp"
#include "nonlocal/optimizers.hpp"
#include "nonlocal/parallel.hpp"

namespace nonlocal {

struct PulseManifold {
  double pulse_width = 0.125;
  int signal_grid = 4096;
  double template_theta = 0.5;

  void validate() const {
    if (!(pulse_width > 0.0) || pulse_width > 1.0)
      throw InvalidArgument("pulse width must lie in (0, 1]");
    if (signal_grid < 2) throw InvalidArgument("signal grid needs at least 2 samples");
    if (!(template_theta >= 0.0 && template_theta <= 1.0))
      throw InvalidArgument("template theta must lie in [0, 1]");
  }

  /// Inclusive range of sample indices i with (i + 1/2)/N in [theta, theta + width] ∩ [0, 1].
  /// Empty when first > last.
  std::pair<long, long> support_indices(double theta) const {
    const double N = signal_grid;
    const double lo = std::max(theta, 0.0);
    const double hi = std::min(theta + pulse_width, 1.0);
    return {static_cast<long>(std::ceil(lo * N - 0.5)), static_cast<long>(std::floor(hi * N - 0.5))};
  }

  /// Sampled f_theta on the signal grid.
  std::vector<double> signal(double theta) const {
    std::vector<double> out(static_cast<std::size_t>(signal_grid), 0.0);
    const auto [a, b] = support_indices(theta);
    for (long i = std::max(a, 0L); i <= std::min(b, static_cast<long>(signal_grid) - 1); ++i)
      out[static_cast<std::size_t>(i)] = 1.0;
    return out;
  }
};

namespace detail {

inline long range_count(std::pair<long, long> r) { return std::max(0L, r.second - r.first + 1); }

inline void check_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0))
    throw DomainError("theta = " + std::to_string(theta) + " lies outside [0, 1]");
}

}  // namespace detail

/// Discrete ‖f_a − f_b‖ on the signal grid (rectangle rule).
inline double pulse_distance(const PulseManifold& m, double a, double b) {
  detail::check_theta(a);
  detail::check_theta(b);
  const auto ra = m.support_indices(a);
  const auto rb = m.support_indices(b);
  const std::pair<long, long> overlap{std::max(ra.first, rb.first), std::min(ra.second, rb.second)};
  const long diff = detail::range_count(ra) + detail::range_count(rb) - 2 * detail::range_count(overlap);
  return std::sqrt(static_cast<double>(diff) / m.signal_grid);
}

/// E(theta) = ‖f_theta − g‖ with g = f_{template_theta}.
inline double pulse_objective(const PulseManifold& m, double theta) {
  return pulse_distance(m, theta, m.template_theta);
}

/// Least-squares slope of log(‖f_{c+δ} − f_c‖ / δ) against log δ.
inline double holder_exponent_fit(const PulseManifold& m, double center, const std::vector<double>& offsets) {
  if (!(m.pulse_width > 0.0)) throw InvalidArgument("degenerate manifold: zero pulse width");
  if (offsets.size() < 2) throw InvalidArgument("exponent fit needs at least two offsets");
  std::vector<double> xs, ys;
  for (double d : offsets) {
    if (!(d > 0.0)) throw InvalidArgument("offsets must be positive");
    const double dist = pulse_distance(m, center, center + d);
    if (!(dist > 0.0)) throw InvalidArgument("offset below the signal grid resolution");
    xs.push_back(std::log(d));
    ys.push_back(std::log(dist / d));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("offsets must not all be equal");
  return sxy / sxx;
}

struct PulseRunConfig {
  KernelFamily family = KernelFamily::Gaussian;
  int n = 1;
  double alpha = 0.03;
  double threshold = 2.5;
  double theta0 = 0.1;
  double theta_star = 0.5;
  std::size_t max_iters = 200;
  int resolution = 256;
  double tolerance = 0.02;
  double gaussian_base = 0.9;
  double bump_base = 1.8;
  double pulse_width = 0.125;
  int signal_grid = 4096;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("learning rate must lie in (0, 1]");
    if (!(threshold > 1.0)) throw InvalidArgument("halving threshold must exceed 1");
    if (n < 1) throw InvalidArgument("scale index n must be >= 1");
    if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (family == KernelFamily::Custom) throw InvalidArgument("pulse runs support gaussian and bump kernels");
    detail::check_theta(theta0);
    manifold().validate();
  }

  PulseManifold manifold() const { return {pulse_width, signal_grid, theta_star}; }

  RadialKernel kernel() const {
    return family == KernelFamily::Gaussian ? RadialKernel::gaussian(1, n, gaussian_base)
                                            : RadialKernel::bump(1, n, bump_base);
  }

  std::string label() const { return to_string(family) + " n=" + std::to_string(n); }
};

struct PulseRunResult {
  PulseRunConfig config;
  OptimizerTrace trace;
  /// Iteration indices whose update left [0, 1] and was clamped.
  std::vector<std::size_t> clamped;
  /// First iteration with |theta − theta*| <= tolerance.
  std::optional<std::size_t> iterations_to_tolerance;
  std::size_t objective_increases = 0;

  double final_theta() const { return trace.last()[0]; }
  double final_error() const { return std::abs(final_theta() - config.theta_star); }
  bool converged() const { return final_error() <= config.tolerance; }
  bool objective_monotone() const { return objective_increases == 0; }
};

/// Nonlocal GD on E with the gradient-ratio halving rule: after each step, alpha is halved
/// when |∇_n E(θ_{k+1})| / |∇_n E(θ_k)| exceeds the threshold.
inline PulseRunResult run_pulse_experiment(const PulseRunConfig& config) {
  config.validate();
  const PulseManifold m = config.manifold();
  ScalarField E;
  E.eval = [m](const Point& t) { return pulse_objective(m, t[0]); };
  const NonlocalGradientConfig cfg(BoxDomain::unit(1), config.kernel(), config.resolution);
  auto grad = [&](double theta, std::size_t k) {
    return detail::at_iteration(k, [&] { return nonlocal_gradient(E, Point::Constant(1, theta), cfg)[0]; });
  };

  PulseRunResult res;
  res.config = config;
  OptimizerTrace& tr = res.trace;
  double theta = config.theta0;
  double alpha = config.alpha;
  double obj = pulse_objective(m, theta);
  double g = obj == 0.0 ? 0.0 : grad(theta, 0);
  tr.push(Point::Constant(1, theta), obj, std::abs(g));
  auto note_tolerance = [&](std::size_t k) {
    if (!res.iterations_to_tolerance && std::abs(theta - config.theta_star) <= config.tolerance)
      res.iterations_to_tolerance = k;
  };
  note_tolerance(0);
  if (obj == 0.0) {
    tr.termination = Termination::GradTol;
    return res;
  }
  tr.termination = Termination::MaxIters;
  for (std::size_t k = 0; k < config.max_iters; ++k) {
    double next = theta - alpha * g;
    if (next < 0.0 || next > 1.0) {
      next = std::clamp(next, 0.0, 1.0);
      res.clamped.push_back(k + 1);
    }
    const double next_obj = pulse_objective(m, next);
    const double g2 = next_obj == 0.0 ? 0.0 : grad(next, k + 1);
    tr.steps_taken.push_back(alpha);
    if (std::abs(g) > 0.0 && std::abs(g2) / std::abs(g) > config.threshold) alpha *= 0.5;
    if (next_obj > obj) ++res.objective_increases;
    theta = next;
    obj = next_obj;
    g = g2;
    tr.push(Point::Constant(1, theta), obj, std::abs(g));
    note_tolerance(k + 1);
    if (obj == 0.0) {
      tr.termination = Termination::GradTol;
      break;
    }
  }
  return res;
}

/// Independent runs in parallel; results keep the input order.
inline std::vector<PulseRunResult> run_pulse_suite(const std::vector<PulseRunConfig>& configs, int workers) {
  std::vector<PulseRunResult> out(configs.size());
  parallel_for(configs.size(), workers, [&](std::size_t i) { out[i] = run_pulse_experiment(configs[i]); });
  return out;
}

/// The six default runs: {gaussian, bump} × n ∈ {1, 2, 3}.
inline std::vector<PulseRunConfig> default_pulse_configs(const PulseRunConfig& base = {}) {
  std::vector<PulseRunConfig> out;
  for (KernelFamily f : {KernelFamily::Gaussian, KernelFamily::Bump}) {
    for (int n = 1; n <= 3; ++n) {
      PulseRunConfig c = base;
      c.family = f;
      c.n = n;
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace nonlocal
