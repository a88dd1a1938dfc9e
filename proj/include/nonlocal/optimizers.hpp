#pragma once

// Nonlocal gradient descent (fixed / line search), epsilon-stochastic subgradient descent,
// nonlocal Newton, and the classical counterparts used as oracles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "nonlocal/errors.hpp"
#include "nonlocal/geometry.hpp"
#include "nonlocal/kernels.hpp"
#include "nonlocal/operators.hpp"

namespace nonlocal {

class StepSchedule {
 public:
  enum class Kind { Fixed, Sequence, SummableGeometric };

  static StepSchedule fixed(double alpha) {
    StepSchedule s(Kind::Fixed);
    s.alpha0_ = alpha;
    s.validate();
    return s;
  }
  /// alpha^1, alpha^2, ...; the last entry repeats once the list is exhausted.
  static StepSchedule sequence(std::vector<double> steps) {
    StepSchedule s(Kind::Sequence);
    s.steps_ = std::move(steps);
    s.validate();
    return s;
  }
  /// alpha^k = alpha0 * q^(k-1).
  static StepSchedule summable_geometric(double alpha0, double q) {
    StepSchedule s(Kind::SummableGeometric);
    s.alpha0_ = alpha0;
    s.q_ = q;
    s.validate();
    return s;
  }

  Kind kind() const noexcept { return kind_; }
  double alpha0() const noexcept { return alpha0_; }
  double ratio() const noexcept { return q_; }
  const std::vector<double>& steps() const noexcept { return steps_; }

  /// Step for the zero-based iteration k.
  double step(std::size_t k) const {
    switch (kind_) {
      case Kind::Fixed: return alpha0_;
      case Kind::Sequence: return steps_[std::min(k, steps_.size() - 1)];
      case Kind::SummableGeometric: return alpha0_ * std::pow(q_, static_cast<double>(k));
    }
    return alpha0_;
  }

  double partial_sum(std::size_t count) const {
    double s = 0.0;
    for (std::size_t k = 0; k < count; ++k) s += step(k);
    return s;
  }

  /// Whether the infinite series of steps is below one.
  bool summable_below_one() const {
    switch (kind_) {
      case Kind::Fixed: return false;
      case Kind::Sequence: return false;
      case Kind::SummableGeometric: return alpha0_ / (1.0 - q_) < 1.0;
    }
    return false;
  }

 private:
  explicit StepSchedule(Kind k) : kind_(k) {}

  void validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    switch (kind_) {
      case Kind::Fixed:
        if (!positive(alpha0_)) throw InvalidArgument("step size must be positive");
        break;
      case Kind::Sequence:
        if (steps_.empty()) throw InvalidArgument("step sequence must not be empty");
        for (double a : steps_)
          if (!positive(a)) throw InvalidArgument("step sizes must be positive");
        break;
      case Kind::SummableGeometric:
        if (!positive(alpha0_)) throw InvalidArgument("alpha0 must be positive");
        if (!(q_ > 0.0 && q_ < 1.0)) throw InvalidArgument("geometric ratio q must lie in (0, 1)");
        break;
    }
  }

  Kind kind_;
  double alpha0_ = 0.0;
  double q_ = 0.0;
  std::vector<double> steps_;
};

enum class Termination { MaxIters, GradTol, Diverged, LeftDomain };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::MaxIters: return "max_iters";
    case Termination::GradTol: return "grad_tol";
    case Termination::Diverged: return "diverged";
    case Termination::LeftDomain: return "left_domain";
  }
  return "unknown";
}

/// Iterate history. iterates, objective_values and gradient_norms have equal length;
/// steps_taken is one shorter.
struct OptimizerTrace {
  std::vector<Point> iterates;
  std::vector<double> objective_values;
  std::vector<double> gradient_norms;
  std::vector<double> steps_taken;
  Termination termination = Termination::MaxIters;
  std::optional<Point> offending_point;

  std::size_t size() const noexcept { return iterates.size(); }
  const Point& last() const { return iterates.back(); }

  void push(const Point& x, double value, double grad_norm) {
    iterates.push_back(x);
    objective_values.push_back(value);
    gradient_norms.push_back(grad_norm);
  }
};

namespace detail {

template <class F>
auto at_iteration(std::size_t k, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const IterationError&) {
    throw;
  } catch (const Error& e) {
    throw IterationError(k, e.what());
  }
}

inline bool diverged(const Point& x, const Point& x0) {
  if (!x.allFinite()) return true;
  return (x - x0).norm() > 1e6 * (1.0 + x0.norm());
}

/// Largest t with x + t d inside the closed box, shrunk so the point stays interior.
inline double max_feasible_step(const BoxDomain& domain, const Point& x, const Vector& d) {
  double t = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (d[i] > 0.0) t = std::min(t, (domain.upper()[i] - x[i]) / d[i]);
    if (d[i] < 0.0) t = std::min(t, (domain.lower()[i] - x[i]) / d[i]);
  }
  return std::max(0.0, t * (1.0 - 1e-9));
}

/// Plain gradient-step loop shared by every first-order method.
template <class Grad, class Step>
OptimizerTrace descent_loop(const ScalarField& field, const Point& x0,
                            const std::optional<BoxDomain>& domain, Grad&& grad, Step&& step,
                            std::size_t max_iters, double grad_tol) {
  OptimizerTrace trace;
  Point x = x0;
  Vector g = at_iteration(0, [&] { return grad(x); });
  trace.push(x, checked_eval(field, x), g.norm());
  for (std::size_t k = 0;; ++k) {
    if (g.norm() < grad_tol) {
      trace.termination = Termination::GradTol;
      return trace;
    }
    if (k >= max_iters) {
      trace.termination = Termination::MaxIters;
      return trace;
    }
    const double alpha = at_iteration(k, [&] { return step(k, x, g); });
    Point next = x - alpha * g;
    if (diverged(next, x0)) {
      trace.termination = Termination::Diverged;
      trace.offending_point = next;
      return trace;
    }
    if (domain && !domain->contains(next)) {
      trace.termination = Termination::LeftDomain;
      trace.offending_point = next;
      return trace;
    }
    x = std::move(next);
    g = at_iteration(k + 1, [&] { return grad(x); });
    const double ux = field(x);
    trace.steps_taken.push_back(alpha);
    trace.push(x, ux, g.norm());
    if (!std::isfinite(ux) || !g.allFinite()) {
      trace.termination = Termination::Diverged;
      trace.offending_point = x;
      return trace;
    }
  }
}

}  // namespace detail

struct LineSearchResult {
  double alpha = 0.0;
  double value = 0.0;
};

/// argmin of phi over [0, cap]: a 64-point grid seeds a golden-section refinement of the
/// best bracket down to `tol`. Ties go to the smaller step.
template <class Phi>
LineSearchResult grid_golden_search(Phi&& phi, double cap, int grid_points = 64,
                                    double tol = 1e-8) {
  if (!(cap > 0.0)) return {0.0, phi(0.0)};
  std::vector<double> vals(static_cast<std::size_t>(grid_points));
  int best = 0;
  for (int j = 0; j < grid_points; ++j) {
    vals[j] = phi(cap * j / (grid_points - 1));
    if (vals[j] < vals[best]) best = j;
  }
  double lo = cap * std::max(best - 1, 0) / (grid_points - 1);
  double hi = cap * std::min(best + 1, grid_points - 1) / (grid_points - 1);
  LineSearchResult res{cap * best / (grid_points - 1), vals[best]};
  constexpr double invphi = 0.6180339887498949;
  double c = hi - invphi * (hi - lo), d = lo + invphi * (hi - lo);
  double fc = phi(c), fd = phi(d);
  while (hi - lo > tol) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = phi(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = phi(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double fm = phi(mid);
  if (fm < res.value || (fm == res.value && mid < res.alpha)) res = {mid, fm};
  return res;
}

/// x^{k+1} = x^k - alpha^k ∇_n u(x^k) with the scale n fixed for the run.
inline OptimizerTrace nlgd_fixed(const ScalarField& field, const Point& x0,
                                 const NonlocalGradientConfig& cfg, const StepSchedule& schedule,
                                 std::size_t max_iters, double grad_tol) {
  cfg.domain.check_dim(x0);
  if (!cfg.domain.contains(x0)) throw DomainError("x0 must be an interior point");
  return detail::descent_loop(
      field, x0, cfg.domain, [&](const Point& x) { return nonlocal_gradient(field, x, cfg); },
      [&](std::size_t k, const Point&, const Vector&) { return schedule.step(k); }, max_iters,
      grad_tol);
}

/// Nonlocal gradient descent with an exact line search over [0, cap] (clipped so the
/// candidate stays inside the domain).
inline OptimizerTrace nlgd_linesearch(const ScalarField& field, const Point& x0,
                                      const NonlocalGradientConfig& cfg, double cap,
                                      std::size_t max_iters, double grad_tol) {
  if (!(cap > 0.0)) throw InvalidArgument("line-search cap A must be positive");
  cfg.domain.check_dim(x0);
  if (!cfg.domain.contains(x0)) throw DomainError("x0 must be an interior point");
  return detail::descent_loop(
      field, x0, cfg.domain, [&](const Point& x) { return nonlocal_gradient(field, x, cfg); },
      [&](std::size_t, const Point& x, const Vector& g) {
        const double a = std::min(cap, detail::max_feasible_step(cfg.domain, x, -g));
        return grid_golden_search([&](double t) { return field(Point(x - t * g)); }, a).alpha;
      },
      max_iters, grad_tol);
}

struct SgdConfig {
  double B = 1.0;
  double M = 1.0;
  std::size_t K = 100;
  double epsilon = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(B > 0.0) || !(M > 0.0) || K == 0)
      throw InvalidArgument("epsilon-SGD needs B > 0, M > 0 and K > 0");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon-SGD needs epsilon > 0");
  }
  /// alpha = sqrt(B^2 / (M^2 K)).
  double alpha() const { return std::sqrt(B * B / (M * M * static_cast<double>(K))); }
  /// Expected optimality gap bound B M / sqrt(K) + epsilon.
  double bound() const { return B * M / std::sqrt(static_cast<double>(K)) + epsilon; }
};

/// Iterations needed for an expected gap of eps_hat: K >= B^2 M^2 / (eps_hat - eps)^2.
inline std::size_t required_iterations(double B, double M, double eps_hat, double eps) {
  if (!(eps_hat > eps)) throw InvalidArgument("target gap must exceed epsilon");
  const double k = B * B * M * M / ((eps_hat - eps) * (eps_hat - eps));
  // 1 / 0.05^2 evaluates slightly above 400 in binary.
  return static_cast<std::size_t>(std::ceil(k * (1.0 - 1e-12)));
}

struct SgdResult {
  Point x_bar;
  OptimizerTrace trace;
  double bound = 0.0;
};

/// Draws y = x - h with h ~ rho, resampling until y is in the domain.
inline Point sample_neighbour(const RadialKernel& kernel, const BoxDomain& domain, const Point& x,
                              Rng& rng) {
  constexpr long kMaxDraws = 1000000;
  for (long i = 0; i < kMaxDraws; ++i) {
    Point y = x - sample_offset(kernel, rng);
    if (domain.contains(y) && y != x) return y;
  }
  throw SamplingFailure("no kernel sample landed inside the domain after 1e6 draws");
}

/// epsilon-stochastic subgradient descent with averaged output. x^1 is the domain center; the
/// sampled direction is g^k = D k_u(x^k, y) with y = x^k - h.
inline SgdResult epsilon_sgd(const ScalarField& field, const SgdConfig& config,
                             const RadialKernel& kernel, const BoxDomain& domain) {
  config.validate();
  if (kernel.dim() != domain.dim()) throw DimensionMismatch(domain.dim(), kernel.dim());
  const double dim = static_cast<double>(domain.dim());
  const double alpha = config.alpha();
  const Point center = domain.center();
  Rng rng(config.seed);
  SgdResult out;
  out.bound = config.bound();
  OptimizerTrace& trace = out.trace;
  Point x = center;
  Vector sum = Vector::Zero(x.size());
  for (std::size_t k = 0; k < config.K; ++k) {
    const Point y = detail::at_iteration(k, [&] { return sample_neighbour(kernel, domain, x, rng); });
    const Vector g = dim * difference_quotient(field, x, y);
    trace.push(x, field(x), g.norm());
    sum += x;
    Point next = x - alpha * g;
    if (!next.allFinite() || (next - center).norm() > 10.0 * config.B) {
      trace.termination = Termination::Diverged;
      trace.offending_point = next;
      out.x_bar = sum / static_cast<double>(k + 1);
      return out;
    }
    if (!domain.contains(next)) {
      trace.termination = Termination::LeftDomain;
      trace.offending_point = next;
      out.x_bar = sum / static_cast<double>(k + 1);
      return out;
    }
    if (k + 1 < config.K) trace.steps_taken.push_back(alpha);
    x = std::move(next);
  }
  trace.termination = Termination::MaxIters;
  out.x_bar = sum / static_cast<double>(config.K);
  return out;
}

struct SubgradientReport {
  bool passed = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::optional<Point> worst_point;
  std::size_t violations = 0;
};

/// Checks u(y) - u(x) >= (y - x)^T ∇_n u(x) - epsilon over the probe points.
inline SubgradientReport epsilon_subgradient_check(const ScalarField& field, const Point& x,
                                                   const NonlocalGradientConfig& cfg,
                                                   const std::vector<Point>& probes,
                                                   double epsilon) {
  const Vector g = nonlocal_gradient(field, x, cfg);
  const double ux = field(x);
  SubgradientReport r;
  for (const auto& y : probes) {
    const double margin = field(y) - ux - (y - x).dot(g) + epsilon;
    if (margin < r.worst_margin) {
      r.worst_margin = margin;
      r.worst_point = y;
    }
    if (margin < 0.0) ++r.violations;
  }
  r.passed = r.violations == 0;
  return r;
}

struct NewtonOptions {
  double beta0 = 1.0;
  bool backtrack = true;
  int max_halvings = 30;
  double max_condition = 1e12;
};

namespace detail {

template <class Grad, class Hess>
OptimizerTrace newton_loop(const ScalarField& field, const Point& x0,
                           const std::optional<BoxDomain>& domain, Grad&& grad, Hess&& hess,
                           const NewtonOptions& opt, std::size_t max_iters, double grad_tol) {
  OptimizerTrace trace;
  Point x = x0;
  Vector g = at_iteration(0, [&] { return grad(x); });
  double ux = checked_eval(field, x);
  trace.push(x, ux, g.norm());
  for (std::size_t k = 0;; ++k) {
    if (g.norm() < grad_tol) {
      trace.termination = Termination::GradTol;
      return trace;
    }
    if (k >= max_iters) {
      trace.termination = Termination::MaxIters;
      return trace;
    }
    const Matrix H = at_iteration(k, [&] { return hess(x); });
    if (!H.allFinite()) throw SingularHessian(k, std::numeric_limits<double>::infinity());
    const Eigen::PartialPivLU<Matrix> lu(H);
    const double rc = lu.rcond();
    const double cond = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (!(cond <= opt.max_condition)) throw SingularHessian(k, cond);
    const Vector dir = lu.solve(g);
    double beta = opt.beta0;
    Point next = x - beta * dir;
    if (opt.backtrack) {
      for (int h = 0; h < opt.max_halvings; ++h) {
        const bool inside = !domain || domain->contains(next);
        if (inside && next.allFinite() && field(next) <= ux) break;
        beta *= 0.5;
        next = x - beta * dir;
      }
    }
    if (diverged(next, x0)) {
      trace.termination = Termination::Diverged;
      trace.offending_point = next;
      return trace;
    }
    if (domain && !domain->contains(next)) {
      trace.termination = Termination::LeftDomain;
      trace.offending_point = next;
      return trace;
    }
    x = std::move(next);
    g = at_iteration(k + 1, [&] { return grad(x); });
    ux = field(x);
    trace.steps_taken.push_back(beta);
    trace.push(x, ux, g.norm());
  }
}

}  // namespace detail

/// x^{k+1} = x^k - beta^k (H4_n u)^{-1} ∇_n u, H4 with the moment constant. beta starts at
/// beta0 and is halved while the objective would increase.
inline OptimizerTrace nonlocal_newton(const ScalarField& field, const Point& x0,
                                      const NonlocalGradientConfig& cfg,
                                      const NewtonOptions& options, std::size_t max_iters,
                                      double grad_tol) {
  cfg.domain.check_dim(x0);
  if (!cfg.domain.contains(x0)) throw DomainError("x0 must be an interior point");
  const auto variant = HessianVariant::H4(cfg.kernel.n());
  return detail::newton_loop(
      field, x0, cfg.domain, [&](const Point& x) { return nonlocal_gradient(field, x, cfg); },
      [&](const Point& x) { return nonlocal_hessian(field, x, variant, cfg); }, options,
      max_iters, grad_tol);
}

enum class LocalMethod { GD, GDLineSearch, Newton };

struct LocalOptions {
  StepSchedule schedule = StepSchedule::fixed(0.1);
  double cap = 1.0;
  std::optional<BoxDomain> domain;
  NewtonOptions newton;
};

/// Central-difference gradient with step 1e-5 (1 + ||x||).
inline Vector fallback_gradient(const ScalarField& field, const Point& x) {
  if (field.analytic_gradient) return (*field.analytic_gradient)(x);
  return detail::central_fd_gradient(field, x, 1e-5 * (1.0 + x.norm()));
}

/// Classical GD, GD with exact line search, or Newton; same trace format.
inline OptimizerTrace local_counterpart(const ScalarField& field, const Point& x0,
                                        LocalMethod method, const LocalOptions& options,
                                        std::size_t max_iters, double grad_tol) {
  if (options.domain) options.domain->check_dim(x0);
  auto grad = [&](const Point& x) { return fallback_gradient(field, x); };
  switch (method) {
    case LocalMethod::GD:
      return detail::descent_loop(
          field, x0, options.domain, grad,
          [&](std::size_t k, const Point&, const Vector&) { return options.schedule.step(k); },
          max_iters, grad_tol);
    case LocalMethod::GDLineSearch:
      return detail::descent_loop(
          field, x0, options.domain, grad,
          [&](std::size_t, const Point& x, const Vector& g) {
            double a = options.cap;
            if (options.domain) a = std::min(a, detail::max_feasible_step(*options.domain, x, -g));
            return grid_golden_search([&](double t) { return field(Point(x - t * g)); }, a).alpha;
          },
          max_iters, grad_tol);
    case LocalMethod::Newton:
      if (!field.analytic_hessian) throw MissingDerivative("local Newton needs an analytic Hessian");
      return detail::newton_loop(field, x0, options.domain, grad, *field.analytic_hessian,
                                 options.newton, max_iters, grad_tol);
  }
  throw InvalidArgument("unknown local method");
}

}  // namespace nonlocal
