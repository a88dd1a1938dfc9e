#include <gtest/gtest.h>

#include <cmath>

#include "nonlocal/optimizers.hpp"
#include "nonlocal/validation.hpp"

using namespace nonlocal;

namespace {

Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

ScalarField quad1(double a, double c) {
  ScalarField f;
  f.eval = [a, c](const Point& x) { return a * (x[0] - c) * (x[0] - c); };
  f.analytic_gradient = [a, c](const Point& x) -> Vector { return Vector::Constant(1, 2 * a * (x[0] - c)); };
  f.analytic_hessian = [a](const Point&) -> Matrix { return Matrix::Constant(1, 1, 2 * a); };
  return f;
}

bool consistent(const OptimizerTrace& t) {
  return t.iterates.size() == t.objective_values.size() &&
         t.iterates.size() == t.gradient_norms.size() &&
         t.steps_taken.size() + 1 == t.iterates.size();
}

}  // namespace

TEST(StepSchedule, KindsAndValidation) {
  EXPECT_EQ(StepSchedule::fixed(0.4).step(17), 0.4);
  const auto s = StepSchedule::sequence({0.5, 0.25});
  EXPECT_EQ(s.step(0), 0.5);
  EXPECT_EQ(s.step(5), 0.25);
  const auto g = StepSchedule::summable_geometric(0.3, 0.6);
  EXPECT_NEAR(g.step(2), 0.3 * 0.36, 1e-15);
  EXPECT_TRUE(g.summable_below_one());
  EXPECT_FALSE(StepSchedule::summable_geometric(0.5, 0.6).summable_below_one());
  EXPECT_THROW(StepSchedule::fixed(0.0), InvalidArgument);
  EXPECT_THROW(StepSchedule::summable_geometric(0.1, 1.0), InvalidArgument);
  EXPECT_THROW(StepSchedule::sequence({}), InvalidArgument);
  EXPECT_THROW(StepSchedule::sequence({0.1, -0.1}), InvalidArgument);
}

TEST(NlgdFixed, ConvergesOnQuadratic) {
  const auto u = quad1(1.0, 0.5);
  const NonlocalGradientConfig cfg(BoxDomain::unit(1), RadialKernel::gaussian(1, 16, 0.1));
  const auto tr = nlgd_fixed(u, pt({0.2}), cfg, StepSchedule::fixed(0.4), 200, 1e-10);
  EXPECT_TRUE(consistent(tr));
  EXPECT_LE(std::abs(tr.last()[0] - 0.5), 5e-3);
  EXPECT_LE(tr.size(), 201u);
  LocalOptions lo;
  lo.schedule = StepSchedule::fixed(0.4);
  const auto cl = local_counterpart(u, pt({0.2}), LocalMethod::GD, lo, 200, 1e-10);
  EXPECT_NEAR(cl.last()[0], 0.5, 1e-9);
}

TEST(NlgdFixed, AlreadyStationary) {
  ScalarField c;
  c.eval = [](const Point&) { return 1.0; };
  const NonlocalGradientConfig cfg(BoxDomain::unit(1), RadialKernel::gaussian(1, 4));
  const auto tr = nlgd_fixed(c, pt({0.3}), cfg, StepSchedule::fixed(0.1), 50, 1e-8);
  EXPECT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr.termination, Termination::GradTol);
  EXPECT_TRUE(consistent(tr));
}

TEST(NlgdFixed, BoundednessWithSummableSteps) {
  const auto e = catalog_field("ridge", 2);
  const double M = *e.field.lipschitz_hint;
  const NonlocalGradientConfig cfg(e.domain, RadialKernel::gaussian(2, 2, 0.1), 32);
  const auto sched = StepSchedule::summable_geometric(0.3, 0.6);
  ASSERT_TRUE(sched.summable_below_one());
  const Point x0 = pt({0.9, 0.3});
  const auto tr = nlgd_fixed(e.field, x0, cfg, sched, 40, 0.0);
  for (const auto& x : tr.iterates) EXPECT_LE(x.norm(), x0.norm() + 2.0 * M);
}

TEST(NlgdFixed, LeavingDomainRecorded) {
  const auto u = quad1(1.0, 0.5);
  const NonlocalGradientConfig cfg(BoxDomain::unit(1), RadialKernel::gaussian(1, 8, 0.1));
  const auto tr = nlgd_fixed(u, pt({0.2}), cfg, StepSchedule::fixed(3.0), 10, 0.0);
  EXPECT_EQ(tr.termination, Termination::LeftDomain);
  ASSERT_TRUE(tr.offending_point);
  EXPECT_FALSE(BoxDomain::unit(1).contains(*tr.offending_point));
  for (const auto& x : tr.iterates) EXPECT_TRUE(BoxDomain::unit(1).contains(x));
}

TEST(NlgdFixed, ErrorsCarryIteration) {
  ScalarField bad;
  bad.eval = [](const Point& x) { return x[0] < 0.4 ? std::nan("") : x[0]; };
  const NonlocalGradientConfig cfg(BoxDomain::unit(1), RadialKernel::bump(1, 1, 0.2), 32);
  EXPECT_THROW(nlgd_fixed(bad, pt({0.7}), cfg, StepSchedule::fixed(0.1), 10, 0.0), IterationError);
  EXPECT_THROW(nlgd_fixed(bad, pt({1.7}), cfg, StepSchedule::fixed(0.1), 10, 0.0), DomainError);
}

TEST(LineSearch, GridGoldenFindsMinimum) {
  const auto r = grid_golden_search([](double a) { return (a - 0.37) * (a - 0.37); }, 1.0);
  EXPECT_NEAR(r.alpha, 0.37, 1e-8);
  const auto flat = grid_golden_search([](double) { return 2.0; }, 1.0);
  EXPECT_EQ(flat.alpha, 0.0);
}

TEST(NlgdLinesearch, HalfSquareUnitStep) {
  ScalarField u;
  u.eval = [](const Point& x) { return 0.5 * x[0] * x[0]; };
  const NonlocalGradientConfig cfg(BoxDomain::interval(-1.0, 1.0), RadialKernel::gaussian(1, 16, 0.1));
  const auto tr = nlgd_linesearch(u, pt({0.6}), cfg, 2.0, 1, 0.0);
  ASSERT_EQ(tr.steps_taken.size(), 1u);
  EXPECT_NEAR(tr.steps_taken[0], 1.0, 1e-6);
  EXPECT_NEAR(tr.iterates[1][0], 0.0, 1e-6);
}

TEST(NlgdLinesearch, MonotoneOnAnisotropicQuadratic) {
  const auto e = catalog_field("quadratic-spd", 2);
  const NonlocalGradientConfig cfg(e.domain, RadialKernel::gaussian(2, 16, 0.1), 32);
  const auto tr = nlgd_linesearch(e.field, pt({0.15, 0.85}), cfg, 1.0, 10, 1e-12);
  EXPECT_TRUE(consistent(tr));
  for (std::size_t k = 1; k < tr.size(); ++k)
    EXPECT_LT(tr.objective_values[k], tr.objective_values[k - 1]);
}

TEST(NlgdLinesearch, CapBinds) {
  const auto e = catalog_field("quadratic-spd", 2);
  const NonlocalGradientConfig cfg(e.domain, RadialKernel::gaussian(2, 16, 0.1), 24);
  const auto tr = nlgd_linesearch(e.field, pt({0.15, 0.85}), cfg, 0.01, 8, 0.0);
  for (double a : tr.steps_taken) EXPECT_LE(a, 0.01);
  EXPECT_THROW(nlgd_linesearch(e.field, pt({0.15, 0.85}), cfg, 0.0, 8, 0.0), InvalidArgument);
}

TEST(NlgdLinesearch, StepsTrackClassicalLineSearch) {
  const auto e = catalog_field("quadratic-spd", 2);
  const NonlocalGradientConfig cfg(e.domain, RadialKernel::gaussian(2, 32, 0.1), 32);
  const Point x0 = pt({0.2, 0.8});
  const auto nl = nlgd_linesearch(e.field, x0, cfg, 1.0, 10, 0.0);
  LocalOptions lo;
  lo.cap = 1.0;
  lo.domain = e.domain;
  const auto cl = local_counterpart(e.field, x0, LocalMethod::GDLineSearch, lo, 10, 0.0);
  const std::size_t m = std::min(nl.steps_taken.size(), cl.steps_taken.size());
  ASSERT_GE(m, 5u);
  for (std::size_t k = 0; k < m; ++k) EXPECT_LE(std::abs(nl.steps_taken[k] - cl.steps_taken[k]), 5e-2);
}

TEST(EpsilonSgd, StepFormulaAndRequiredIterations) {
  const SgdConfig c{1.0, 2.0, 100, 0.02, 0};
  EXPECT_DOUBLE_EQ(c.alpha(), std::sqrt(1.0 / (4.0 * 100.0)));
  EXPECT_DOUBLE_EQ(c.bound(), 0.2 + 0.02);
  EXPECT_EQ(required_iterations(1.0, 1.0, 0.1, 0.05), 400u);
  EXPECT_EQ(required_iterations(2.0, 1.0, 0.3, 0.1), 100u);
  EXPECT_THROW(required_iterations(1.0, 1.0, 0.05, 0.05), InvalidArgument);
  EXPECT_THROW((SgdConfig{0.0, 1.0, 10, 0.1, 0}.validate()), InvalidArgument);
}

TEST(EpsilonSgd, ConstantFieldStaysAtCenter) {
  ScalarField c;
  c.eval = [](const Point&) { return 3.0; };
  const auto dom = BoxDomain::cube(2, -1.0, 1.0);
  const auto r = epsilon_sgd(c, {1.0, 1.0, 50, 0.01, 5}, RadialKernel::gaussian(2, 8), dom);
  EXPECT_EQ(r.x_bar, dom.center());
  for (double g : r.trace.gradient_norms) EXPECT_EQ(g, 0.0);
  EXPECT_TRUE(consistent(r.trace));
}

TEST(EpsilonSgd, ExpectedGapWithinBound) {
  ScalarField u;
  u.eval = [](const Point& x) { return (x - Point::Constant(2, 0.2)).squaredNorm(); };
  const auto dom = BoxDomain::cube(2, -1.0, 1.0);
  const auto k = RadialKernel::gaussian(2, 32, 0.1);
  const SgdConfig base{1.0, 2.0, 100, 0.02, 0};
  const int seeds = 400;
  double sum = 0.0, sq = 0.0;
  for (int s = 0; s < seeds; ++s) {
    SgdConfig c = base;
    c.seed = static_cast<std::uint64_t>(s);
    const double gap = u(epsilon_sgd(u, c, k, dom).x_bar);
    sum += gap;
    sq += gap * gap;
  }
  const double mean = sum / seeds;
  const double se = std::sqrt((sq / seeds - mean * mean) / (seeds - 1));
  EXPECT_LE(mean, base.bound() + 3.0 * se);
}

TEST(EpsilonSgd, Deterministic) {
  const auto e = catalog_field("quadratic-spd", 2);
  const auto k = RadialKernel::bump(2, 4, 0.2);
  const auto a = epsilon_sgd(e.field, {1.0, 2.0, 60, 0.05, 99}, k, e.domain);
  const auto b = epsilon_sgd(e.field, {1.0, 2.0, 60, 0.05, 99}, k, e.domain);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace.iterates[i], b.trace.iterates[i]);
  EXPECT_EQ(a.x_bar, b.x_bar);
}

TEST(EpsilonSgd, KernelWiderThanDomainFails) {
  ScalarField u;
  u.eval = [](const Point& x) { return x[0]; };
  const auto dom = BoxDomain::interval(0.0, 1e-9);
  EXPECT_THROW(epsilon_sgd(u, {1.0, 1.0, 5, 0.1, 1}, RadialKernel::gaussian(1, 1, 1e3), dom), Error);
}

TEST(SubgradientCheck, NormSquaredPasses) {
  const auto e = catalog_field("norm-squared", 2);
  const NonlocalGradientConfig cfg(e.domain, RadialKernel::gaussian(2, 32, 0.1), 32);
  const auto probes = probe_points(e.domain, 0.0, 500, 3);
  const auto r = epsilon_subgradient_check(e.field, pt({0.5, 0.4}), cfg, probes, 0.01);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.violations, 0u);
}

TEST(SubgradientCheck, WideKernelZeroEpsilonFails) {
  ScalarField u;
  u.eval = [](const Point& x) { return 20.0 * std::pow(x[0] - 0.5, 4) + std::pow(x[0] - 0.5, 2); };
  const NonlocalGradientConfig cfg(BoxDomain::unit(1), RadialKernel::gaussian(1, 1, 0.3));
  const auto probes = probe_points(BoxDomain::unit(1), 0.0, 400, 1);
  const auto r = epsilon_subgradient_check(u, pt({0.8}), cfg, probes, 0.0);
  EXPECT_FALSE(r.passed);
  EXPECT_LT(r.worst_margin, 0.0);
  ASSERT_TRUE(r.worst_point);
}

TEST(SubgradientCheck, LinearExact) {
  const auto e = catalog_field("linear", 2);
  const NonlocalGradientConfig cfg(e.domain, RadialKernel::gaussian(2, 16, 0.1), 32);
  EXPECT_TRUE(epsilon_subgradient_check(e.field, pt({0.5, 0.5}), cfg,
                                        probe_points(e.domain, 0.0, 100, 2), 1e-8)
                  .passed);
}

TEST(NonlocalNewton, QuadraticOneStep) {
  Matrix A(2, 2);
  A << 2.0, 0.4, 0.4, 1.0;
  const Vector b = pt({-1.0, -0.5});
  ScalarField u;
  u.eval = [A, b](const Point& x) { return 0.5 * x.dot(A * x) + b.dot(x); };
  u.analytic_gradient = [A, b](const Point& x) -> Vector { return A * x + b; };
  u.analytic_hessian = [A](const Point&) -> Matrix { return A; };
  const Point x0 = pt({0.3, 0.3});
  LocalOptions lo;
  const auto local = local_counterpart(u, x0, LocalMethod::Newton, lo, 1, 0.0);
  const Point xstar = A.lu().solve(-b);
  EXPECT_LE((local.iterates[1] - xstar).norm(), 1e-12);
  const NonlocalGradientConfig cfg(BoxDomain::unit(2), RadialKernel::gaussian(2, 32, 0.1), 32);
  const auto nl = nonlocal_newton(u, x0, cfg, {}, 1, 0.0);
  EXPECT_LE((nl.iterates[1] - local.iterates[1]).norm(), 1e-4);
}

TEST(NonlocalNewton, StartAtMinimizer) {
  const auto e = catalog_field("quadratic-spd", 2);
  const NonlocalGradientConfig cfg(e.domain, RadialKernel::gaussian(2, 32, 0.1), 32);
  const auto tr = nonlocal_newton(e.field, *e.minimizer, cfg, {}, 10, 1e-8);
  EXPECT_EQ(tr.termination, Termination::GradTol);
  EXPECT_EQ(tr.size(), 1u);
}

TEST(NonlocalNewton, SingularHessianReported) {
  ScalarField u;
  u.eval = [](const Point& x) { return x[0]; };
  const NonlocalGradientConfig cfg(BoxDomain::unit(1), RadialKernel::gaussian(1, 8, 0.1));
  try {
    nonlocal_newton(u, pt({0.5}), cfg, {}, 5, 1e-12);
    FAIL();
  } catch (const SingularHessian& e) {
    EXPECT_EQ(e.iteration(), 0u);
  }
}

TEST(NonlocalNewton, QuarticFloorShrinks) {
  const auto e = catalog_field("quartic-quadratic", 1);
  double prev = INFINITY;
  for (int n : {8, 16, 32}) {
    const NonlocalGradientConfig cfg(e.domain, RadialKernel::gaussian(1, n, 0.1), 256);
    const auto tr = nonlocal_newton(e.field, *e.minimizer + pt({0.12}), cfg, {}, 10, 0.0);
    const double err = (tr.last() - *e.minimizer).norm();
    EXPECT_LT(err, prev);
    prev = err;
    // Quadratic contraction down to the floor: e_k <= Mhat e_{k-1}^2 + floor.
    std::vector<double> errs;
    for (const auto& x : tr.iterates) errs.push_back((x - *e.minimizer).norm());
    double mhat = 0.0;
    for (std::size_t k = 1; k < 4; ++k) mhat = std::max(mhat, (errs[k] - err) / (errs[k - 1] * errs[k - 1]));
    for (std::size_t k = 1; k < errs.size(); ++k) EXPECT_LE(errs[k], mhat * errs[k - 1] * errs[k - 1] + err + 1e-15);
  }
}

TEST(LocalCounterpart, Variants) {
  const auto u = quad1(0.5, 0.0);  // 0.5 x^2, curvature 1
  LocalOptions lo;
  lo.schedule = StepSchedule::fixed(1.0);
  const auto gd = local_counterpart(u, pt({0.7}), LocalMethod::GD, lo, 5, 1e-14);
  EXPECT_EQ(gd.iterates[1][0], 0.0);
  lo.schedule = StepSchedule::fixed(2.5);
  EXPECT_EQ(local_counterpart(u, pt({0.7}), LocalMethod::GD, lo, 200, 0.0).termination,
            Termination::Diverged);
  ScalarField nohess;
  nohess.eval = u.eval;
  EXPECT_THROW(local_counterpart(nohess, pt({0.7}), LocalMethod::Newton, lo, 5, 0.0), MissingDerivative);
  // Finite-difference fallback when no gradient is declared.
  lo.schedule = StepSchedule::fixed(1.0);
  EXPECT_NEAR(local_counterpart(nohess, pt({0.7}), LocalMethod::GD, lo, 1, 0.0).iterates[1][0], 0.0, 1e-9);
}
