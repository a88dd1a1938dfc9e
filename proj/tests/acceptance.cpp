// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "nonlocal/nonlocal.hpp"

using namespace nonlocal;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt("%.3g", v[i]);
  return s + "]";
}

ScalarField quadratic_form(const Matrix& A) {
  ScalarField u;
  u.eval = [A](const Point& x) { return x.dot(A * x); };
  u.analytic_gradient = [A](const Point& x) -> Vector { return 2.0 * A * x; };
  u.analytic_hessian = [A](const Point&) -> Matrix { return 2.0 * A; };
  return u;
}

Verdict gradient_localization() {
  const auto r = convergence_sweep("gradient-localization", {4, 8, 16, 32}, SweepSettings{});
  return {r.strictly_decreasing && r.errors.back() <= 1e-3, "errors " + list(r.errors)};
}

Verdict quadratic_exactness() {
  Verdict v;
  double grad_err = 0.0, hess_err = 0.0, worst_z = 0.0;
  std::uint64_t seed = 11;
  for (std::size_t D : {1u, 2u}) {
    const auto dom = BoxDomain::unit(D);
    const auto sq = catalog_field("norm-squared", D);
    Matrix A = Matrix::Identity(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
    if (D == 2) A << 1.0, 0.3, 0.3, 2.0;
    const auto quad = quadratic_form(A);
    for (const auto& kernel : {RadialKernel::gaussian(D, 8, 0.1), RadialKernel::bump(D, 4, 0.2)}) {
      const NonlocalGradientConfig cfg(dom, kernel, D == 1 ? 256 : 96);
      for (const auto& x : probe_points(dom, kernel.effective_radius(), 5, seed++)) {
        const Vector g = nonlocal_gradient(sq.field, x, cfg);
        grad_err = std::max(grad_err, (g - 2.0 * x).norm());
        const Matrix H = nonlocal_hessian(quad, x, HessianVariant::H4(kernel.n()), cfg);
        hess_err = std::max(hess_err, (H - 2.0 * A).cwiseAbs().maxCoeff());
      }
      for (const auto& x : probe_points(dom, kernel.effective_radius(), 2, seed++)) {
        const Vector g = nonlocal_gradient(sq.field, x, cfg);
        const auto mc = mc_nonlocal_gradient(sq.field, x, kernel, dom, 200000, seed++);
        for (Eigen::Index i = 0; i < g.size(); ++i) {
          const double diff = std::abs(g[i] - mc.mean[i]);
          worst_z = std::max(worst_z, diff / mc.stderr_[i]);
          if (diff > 3.0 * mc.stderr_[i]) v.pass = false;
        }
      }
    }
  }
  v.pass = v.pass && grad_err <= 1e-6 && hess_err <= 1e-5;
  v.detail = "grad err " + fmt("%.2e", grad_err) + ", H4 err " + fmt("%.2e", hess_err) + ", MC max |z| " +
             fmt("%.2f", worst_z);
  return v;
}

Verdict h4_constant() {
  const double a = 1.7;
  ScalarField u;
  u.eval = [a](const Point& x) { return a * x[0] * x[0]; };
  const NonlocalGradientConfig cfg(BoxDomain::unit(1), RadialKernel::gaussian(1, 8, 0.1));
  const Point x = Point::Constant(1, 0.5);
  const double printed = nonlocal_hessian(u, x, HessianVariant::H4(8, HessianConstant::PaperConstant), cfg)(0, 0);
  const double moment = nonlocal_hessian(u, x, HessianVariant::H4(8, HessianConstant::MomentConstant), cfg)(0, 0);
  return {std::abs(printed - 4.0 * a / 3.0) <= 1e-5 && std::abs(moment - 2.0 * a) <= 1e-5,
          "D(D+1)/2 prefactor " + fmt("%.8f", printed) + " (4a/3 = " + fmt("%.8f", 4.0 * a / 3.0) +
              "), D(D+2)/2 prefactor " + fmt("%.8f", moment) + " (2a = " + fmt("%.8f", 2.0 * a) + ")"};
}

Verdict lipschitz_bound() {
  Verdict v;
  double worst = -INFINITY;
  for (std::size_t D : {1u, 2u}) {
    const auto ridge = catalog_field("ridge", D);
    const double bound = static_cast<double>(D) * *ridge.field.lipschitz_hint;
    for (const auto& kernel : {RadialKernel::gaussian(D, 2, 0.1), RadialKernel::bump(D, 2, 0.2)}) {
      const NonlocalGradientConfig cfg(ridge.domain, kernel, D == 1 ? 256 : 64);
      for (const auto& x : probe_points(ridge.domain, 0.0, 100, 5 + D)) {
        const double norm = nonlocal_gradient(ridge.field, x, cfg).norm();
        worst = std::max(worst, norm - bound);
        if (norm > bound + 1e-9) v.pass = false;
      }
    }
  }
  v.detail = "max of |grad_n u| - D M = " + fmt("%.3e", worst);
  return v;
}

Verdict iterate_tracking() {
  const auto r = convergence_sweep("iterate-tracking", {4, 8, 16, 32}, SweepSettings{});
  return {r.strictly_decreasing && r.errors.back() <= 1e-2, "max gaps " + list(r.errors)};
}

Verdict sgd_bound() {
  SweepSettings s;
  s.dim = 2;
  s.workers = default_workers();
  const auto r = convergence_sweep("sgd-bound", {32}, s);
  const double bound = SgdConfig{s.sgd_B, s.sgd_M, s.sgd_K, s.sgd_epsilon, 0}.bound();
  const double limit = bound + 3.0 * r.stderrs[0];
  return {r.errors[0] <= limit, "mean gap " + fmt("%.3e", r.errors[0]) + " <= " + fmt("%.4f", limit)};
}

Verdict newton_floor() {
  const auto r = convergence_sweep("newton-floor", {8, 16, 32}, SweepSettings{});
  const auto e = catalog_field("quartic-quadratic", 1);
  Point x0 = *e.minimizer;
  x0[0] += SweepSettings{}.newton_offset;
  const NonlocalGradientConfig cfg(e.domain, RadialKernel::gaussian(1, 32, 0.1), 512);
  const auto nl = nonlocal_newton(e.field, x0, cfg, {}, 5, 0.0);
  LocalOptions lo;
  const auto cl = local_counterpart(e.field, x0, LocalMethod::Newton, lo, 5, 0.0);
  const double gap = (nl.iterates.at(5) - cl.iterates.at(5)).norm();
  return {r.strictly_decreasing && gap <= 1e-3, "plateaus " + list(r.errors) + ", gap after 5 steps " + fmt("%.2e", gap)};
}

Verdict taylor_remainder() {
  SweepSettings s;
  s.resolution = 256;
  const auto r = convergence_sweep("taylor-remainder", {4, 8, 16, 32}, s);
  return {r.strictly_decreasing, "sup |r_n - r| " + list(r.errors)};
}

Verdict vanishing_subset() {
  ScalarField u;
  const double xs = 0.45;
  u.eval = [xs](const Point& x) {
    const double t = x[0] - xs;
    return t < 0.0 ? -t : 3.0 * t;
  };
  const NonlocalGradientConfig cfg(BoxDomain::unit(1), RadialKernel::gaussian(1, 2, 0.1));
  const Point x = Point::Constant(1, xs);
  const auto subset = find_vanishing_subset_1d(u, x, cfg);
  const double g = restricted_nonlocal_gradient(u, x, cfg, subset)[0];
  const double full = nonlocal_gradient(u, x, cfg)[0];
  return {std::abs(g) <= 1e-8, "restricted " + fmt("%.2e", g) + " (full domain " + fmt("%.3f", full) + ")"};
}

std::size_t first_within(const OptimizerTrace& t, double target, double tol) {
  for (std::size_t k = 0; k < t.size(); ++k)
    if (std::abs(t.iterates[k][0] - target) <= tol) return k;
  return static_cast<std::size_t>(-1);
}

Verdict pulse_experiment() {
  const fs::path dir = fs::temp_directory_path() / "nonlocal_acceptance_pulse";
  fs::remove_all(dir);
  const std::string out = dir.string();
  const char* argv[] = {"nonlocal", "pulse", "--out", out.c_str()};
  std::ostringstream sink;
  const int code = run_cli(4, argv, sink, sink);
  Verdict v;
  if (code != 0) v.pass = false;
  std::vector<double> hits;
  bool converged = true;
  for (int n = 1; n <= 3; ++n) {
    const auto t = parse_trace_csv((dir / ("pulse_gaussian_n" + std::to_string(n) + ".csv")).string());
    const std::size_t hit = first_within(t, 0.5, 0.02);
    converged = converged && hit <= 200 && t.size() <= 201 && std::abs(t.last()[0] - 0.5) <= 0.02;
    hits.push_back(static_cast<double>(hit));
  }
  const bool faster = hits[1] <= hits[0] && hits[2] <= hits[1];
  const auto bump = parse_trace_csv((dir / "pulse_bump_n3.csv").string());
  std::size_t increases = 0;
  for (std::size_t k = 1; k < bump.size(); ++k) increases += bump.objective_values[k] > bump.objective_values[k - 1];
  const bool bump_ok = std::abs(bump.last()[0] - 0.5) <= 0.02 && increases > 0;
  std::vector<double> exps;
  bool holder_ok = true;
  std::vector<double> offsets;
  for (int i = 0; i < 10; ++i) offsets.push_back(1e-3 * std::pow(10.0, i / 9.0));
  for (double c : {0.2, 0.3, 0.4, 0.6, 0.7}) {
    exps.push_back(holder_exponent_fit(PulseManifold{}, c, offsets));
    holder_ok = holder_ok && std::abs(exps.back() + 0.5) <= 0.02;
  }
  bool svg_ok = true;
  try {
    boost::property_tree::ptree tree;
    boost::property_tree::read_xml((dir / "pulse.svg").string(), tree);
    svg_ok = tree.get_child("svg").count("polyline") == 6;
  } catch (const std::exception&) {
    svg_ok = false;
  }
  v.pass = v.pass && converged && faster && bump_ok && holder_ok && svg_ok && fs::exists(dir / "manifest.json");
  v.detail = "gaussian first hits " + list(hits) + ", bump n=3 increases " + std::to_string(increases) +
             ", Holder exponents " + list(exps) + (svg_ok ? ", svg ok" : ", svg BAD");
  return v;
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0: none stated
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "gradient localization", 10.0, gradient_localization},
      {2, "quadratic exactness", 30.0, quadratic_exactness},
      {3, "H4 constant discrepancy", 0.0, h4_constant},
      {4, "Lipschitz gradient bound", 0.0, lipschitz_bound},
      {5, "iterate tracking", 0.0, iterate_tracking},
      {6, "epsilon-SGD bound", 120.0, sgd_bound},
      {7, "Newton epsilon-floor", 0.0, newton_floor},
      {8, "Taylor remainder", 0.0, taylor_remainder},
      {9, "vanishing subset", 0.0, vanishing_subset},
      {10, "pulse experiment", 120.0, pulse_experiment},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0.0 && secs > c.time_limit) {
      v.pass = false;
      v.detail += ", over the " + fmt("%.0f", c.time_limit) + " s limit";
    }
    failures += !v.pass;
    std::printf("%s criterion %d: %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
