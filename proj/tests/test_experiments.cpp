#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nonlocal/experiments.hpp"

using namespace nonlocal;

namespace {

// Explicit sampled L2 distance, independent of the index-range arithmetic.
double brute_distance(const PulseManifold& m, double a, double b) {
  const auto fa = m.signal(a), fb = m.signal(b);
  double s = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) s += (fa[i] - fb[i]) * (fa[i] - fb[i]);
  return std::sqrt(s / m.signal_grid);
}

std::vector<double> log_offsets(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(lo * std::pow(hi / lo, i / (count - 1.0)));
  return out;
}

}  // namespace

TEST(PulseManifold, SignalIsIndicator) {
  const PulseManifold m;
  const auto s = m.signal(0.5);
  double mass = 0.0;
  for (double v : s) mass += v;
  EXPECT_EQ(mass, 512.0);
  const auto clipped = m.signal(0.95);
  mass = 0.0;
  for (double v : clipped) mass += v;
  EXPECT_NEAR(mass / m.signal_grid, 0.05, 1.0 / m.signal_grid);
}

TEST(PulseObjective, ClosedForms) {
  const PulseManifold m;
  EXPECT_EQ(pulse_objective(m, 0.5), 0.0);
  EXPECT_NEAR(pulse_objective(m, 0.1), 0.5, 1e-12);
  EXPECT_NEAR(pulse_objective(m, 0.51), std::sqrt(0.02), 1e-3);
  EXPECT_THROW(pulse_objective(m, -0.01), DomainError);
  EXPECT_THROW(pulse_objective(m, 1.5), DomainError);
}

TEST(PulseObjective, MatchesExplicitSignals) {
  const PulseManifold m;
  for (double a : {0.0, 0.03, 0.2, 0.4999, 0.51, 0.8, 0.9, 1.0})
    for (double b : {0.0, 0.25, 0.5, 0.52, 0.95})
      EXPECT_DOUBLE_EQ(pulse_distance(m, a, b), brute_distance(m, a, b)) << a << " " << b;
}

TEST(PulseObjective, PositiveAwayFromTemplate) {
  const PulseManifold m;
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0 * (1.0 - m.pulse_width);
    if (std::abs(t - 0.5) > 1.0 / m.signal_grid) {
      EXPECT_GT(pulse_objective(m, t), 0.0) << t;
    }
  }
}

TEST(PulseObjective, SymmetricAboutTemplate) {
  const PulseManifold m;
  for (int i = 1; i <= 40; ++i) {
    const double d = i * 0.009;
    const double a = pulse_objective(m, 0.5 + d), b = pulse_objective(m, 0.5 - d);
    EXPECT_LE(std::abs(a * a - b * b), 2.0 / m.signal_grid) << d;
  }
}

TEST(PulseObjective, HolderHalfSlivers) {
  const PulseManifold m;
  for (double d : {0.002, 0.005, 0.01, 0.05})
    // Each sliver is resolved to within one sample: |2k/N - 2d| <= 2/N.
    EXPECT_NEAR(pulse_distance(m, 0.3, 0.3 + d), std::sqrt(2.0 * d), 1.0 / (m.signal_grid * std::sqrt(2.0 * d)));
}

TEST(HolderFit, ExponentMinusHalf) {
  const PulseManifold m;
  const auto offs = log_offsets(1e-3, 1e-2, 10);
  EXPECT_NEAR(holder_exponent_fit(m, 0.4, offs), -0.5, 0.02);
  for (double c : {0.2, 0.3, 0.4, 0.6, 0.7}) EXPECT_NEAR(holder_exponent_fit(m, c, offs), -0.5, 0.02) << c;
  std::vector<double> doubled;
  for (double d : offs) doubled.push_back(2.0 * d);
  EXPECT_NEAR(holder_exponent_fit(m, 0.4, doubled), holder_exponent_fit(m, 0.4, offs), 0.02);
}

TEST(HolderFit, Degenerate) {
  PulseManifold flat;
  flat.pulse_width = 0.0;
  EXPECT_THROW(holder_exponent_fit(flat, 0.4, {1e-3, 1e-2}), InvalidArgument);
  const PulseManifold m;
  EXPECT_THROW(holder_exponent_fit(m, 0.4, {1e-3}), InvalidArgument);
  EXPECT_THROW(holder_exponent_fit(m, 0.4, {1e-2, 1e-2}), InvalidArgument);
  EXPECT_THROW(holder_exponent_fit(m, 0.4, {-1e-3, 1e-2}), InvalidArgument);
}

TEST(PulseRunConfig, Validation) {
  PulseRunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.threshold = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.theta0 = 1.2;
  EXPECT_THROW(c.validate(), Error);
}

TEST(PulseGradient, FiniteEverywhereForAllKernels) {
  for (const auto& c : default_pulse_configs()) {
    const PulseManifold m = c.manifold();
    ScalarField E;
    E.eval = [m](const Point& t) { return pulse_objective(m, t[0]); };
    const NonlocalGradientConfig cfg(BoxDomain::unit(1), c.kernel(), c.resolution);
    for (int i = 0; i < 200; ++i) {
      const double t = (i + 0.5) / 200.0;
      EXPECT_TRUE(std::isfinite(nonlocal_gradient(E, Point::Constant(1, t), cfg)[0])) << c.label() << " " << t;
    }
  }
}

TEST(PulseGradient, PointsTowardBasinFromFlatRegion) {
  for (KernelFamily f : {KernelFamily::Gaussian, KernelFamily::Bump}) {
    PulseRunConfig c;
    c.family = f;
    const PulseManifold m = c.manifold();
    ScalarField E;
    E.eval = [m](const Point& t) { return pulse_objective(m, t[0]); };
    const NonlocalGradientConfig cfg(BoxDomain::unit(1), c.kernel(), c.resolution);
    const double g = nonlocal_gradient(E, Point::Constant(1, 0.3), cfg)[0];
    EXPECT_LT(std::abs(0.3 - c.alpha * g - 0.5), 0.2) << c.label();
  }
}

TEST(PulseRun, GaussianConvergesFasterWithN) {
  std::optional<std::size_t> prev;
  for (int n = 1; n <= 3; ++n) {
    PulseRunConfig c;
    c.n = n;
    const auto r = run_pulse_experiment(c);
    EXPECT_TRUE(r.converged()) << n << " final " << r.final_theta();
    ASSERT_TRUE(r.iterations_to_tolerance);
    EXPECT_LE(*r.iterations_to_tolerance, 200u);
    if (prev) {
      EXPECT_LE(*r.iterations_to_tolerance, *prev);
    }
    prev = r.iterations_to_tolerance;
    EXPECT_EQ(r.trace.steps_taken.size() + 1, r.trace.size());
  }
}

TEST(PulseRun, BumpLargestNNonMonotone) {
  PulseRunConfig c;
  c.family = KernelFamily::Bump;
  c.n = 3;
  const auto r = run_pulse_experiment(c);
  EXPECT_TRUE(r.converged());
  EXPECT_FALSE(r.objective_monotone());
  std::size_t inc = 0;
  for (std::size_t k = 1; k < r.trace.size(); ++k) inc += r.trace.objective_values[k] > r.trace.objective_values[k - 1];
  EXPECT_EQ(inc, r.objective_increases);
}

TEST(PulseRun, HalvingRuleOnlyShrinks) {
  PulseRunConfig c;
  c.n = 3;
  const auto r = run_pulse_experiment(c);
  for (std::size_t k = 1; k < r.trace.steps_taken.size(); ++k) {
    const double ratio = r.trace.steps_taken[k] / r.trace.steps_taken[k - 1];
    EXPECT_TRUE(ratio == 1.0 || ratio == 0.5);
    const bool fired = r.trace.gradient_norms[k] / r.trace.gradient_norms[k - 1] > c.threshold;
    EXPECT_EQ(ratio == 0.5, fired) << k;
  }
}

TEST(PulseRun, StartAtTemplate) {
  for (double star : {0.5, 0.3}) {
    PulseRunConfig c;
    c.theta_star = star;
    c.theta0 = star;
    const auto r = run_pulse_experiment(c);
    EXPECT_EQ(r.trace.size(), 1u);
    EXPECT_EQ(r.trace.termination, Termination::GradTol);
    EXPECT_EQ(r.iterations_to_tolerance, 0u);
  }
}

TEST(PulseRun, ClampsAtBoundary) {
  PulseRunConfig c;
  c.theta0 = 0.98;
  c.theta_star = 0.05;
  c.alpha = 1.0;
  c.n = 3;
  c.max_iters = 30;
  const auto r = run_pulse_experiment(c);
  for (const auto& x : r.trace.iterates) {
    EXPECT_GE(x[0], 0.0);
    EXPECT_LE(x[0], 1.0);
  }
  EXPECT_FALSE(r.clamped.empty());
  for (std::size_t k : r.clamped) {
    const double t = r.trace.iterates[k][0];
    EXPECT_TRUE(t == 0.0 || t == 1.0);
  }
}

TEST(PulseSuite, ParallelMatchesSerial) {
  const auto configs = default_pulse_configs();
  const auto a = run_pulse_suite(configs, 1);
  const auto b = run_pulse_suite(configs, 6);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].config.label(), configs[i].label());
    EXPECT_EQ(a[i].trace.objective_values, b[i].trace.objective_values);
  }
}
