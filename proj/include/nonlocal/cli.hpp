#pragma once

// Command-line driver. run_cli is the whole program; tools/nonlocal_cli.cpp only forwards argv.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "nonlocal/config.hpp"
#include "nonlocal/experiments.hpp"
#include "nonlocal/io.hpp"
#include "nonlocal/operators.hpp"
#include "nonlocal/optimizers.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/validation.hpp"

namespace nonlocal {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

struct CommandOutcome {
  bool passed = true;
  Json summary = Json::object();
  std::vector<std::string> outputs;
};

namespace cli {

namespace fs = std::filesystem;

inline Json to_json(const Point& p) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

inline Point point_from(const Json& j, std::size_t dim, const std::string& key) {
  if (!j.is_array() || j.size() != dim)
    throw ConfigError(key, "expected an array of " + std::to_string(dim) + " numbers");
  Point p(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) p[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return p;
}

inline RadialKernel kernel_from(const Json& c, std::size_t dim, int n) {
  return make_kernel(parse_family(c.at("kernel").at("family").get<std::string>()), dim, n,
                     c.at("kernel").at("base_scale").get<double>());
}

inline int workers_from(const Json& c) {
  const int w = c.at("workers").get<int>();
  if (w < 0) throw ConfigError("workers", "must be >= 0");
  return w == 0 ? default_workers() : w;
}

inline std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

inline bool run_completed(Termination t) { return t == Termination::MaxIters || t == Termination::GradTol; }

inline Json trace_summary(const OptimizerTrace& t) {
  return {{"iterations", t.size() - 1},
          {"termination", to_string(t.termination)},
          {"final_point", to_json(t.last())},
          {"final_objective", t.objective_values.back()},
          {"final_grad_norm", t.gradient_norms.back()}};
}

inline std::string table_row(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + detail::fmt17(values[i]);
  return s + "\n";
}

inline CommandOutcome grad_check(const Json& c, const fs::path& out) {
  const std::size_t dim = c.at("dim").get<std::size_t>();
  const auto entry = catalog_field(c.at("field").get<std::string>(), dim);
  const int n = c.at("n").get<int>();
  const auto kernel = kernel_from(c, dim, n);
  const NonlocalGradientConfig cfg(entry.domain, kernel, c.at("resolution").get<int>());
  const auto seed = c.at("seed").get<std::uint64_t>();
  const double margin = std::min(kernel.effective_radius(), 0.49 * entry.domain.extent().minCoeff());
  const auto probes = probe_points(entry.domain, margin, c.at("probes").get<std::size_t>(), seed);
  const auto mc_samples = c.at("mc_samples").get<std::size_t>();
  std::vector<Vector> grads(probes.size());
  std::vector<McEstimate> mcs(probes.size());
  parallel_for(probes.size(), workers_from(c), [&](std::size_t i) {
    grads[i] = nonlocal_gradient(entry.field, probes[i], cfg);
    if (mc_samples > 0) mcs[i] = mc_nonlocal_gradient(entry.field, probes[i], kernel, entry.domain, mc_samples, seed + 1 + i);
  });
  std::string csv = "probe";
  for (std::size_t i = 0; i < dim; ++i) csv += ",x" + std::to_string(i);
  for (std::size_t i = 0; i < dim; ++i) csv += ",nonlocal" + std::to_string(i);
  for (std::size_t i = 0; i < dim; ++i) csv += ",local" + std::to_string(i);
  csv += ",error\n";
  double max_err = 0.0, max_z = 0.0;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const Vector local = fallback_gradient(entry.field, probes[k]);
    const double err = (grads[k] - local).norm();
    max_err = std::max(max_err, err);
    std::vector<double> row{static_cast<double>(k)};
    for (std::size_t i = 0; i < dim; ++i) row.push_back(probes[k][static_cast<Eigen::Index>(i)]);
    for (std::size_t i = 0; i < dim; ++i) row.push_back(grads[k][static_cast<Eigen::Index>(i)]);
    for (std::size_t i = 0; i < dim; ++i) row.push_back(local[static_cast<Eigen::Index>(i)]);
    row.push_back(err);
    csv += table_row(row);
    if (mc_samples > 0)
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(dim); ++i) {
        const double diff = std::abs(grads[k][i] - mcs[k].mean[i]);
        if (diff > 0.0) max_z = std::max(max_z, mcs[k].stderr_[i] > 0.0 ? diff / mcs[k].stderr_[i] : INFINITY);
      }
  }
  CommandOutcome o;
  detail::write_file(join(out, "grad_check.csv"), csv);
  o.outputs.push_back("grad_check.csv");
  const double tol = c.at("tolerance").get<double>();
  o.passed = max_err <= tol;
  o.summary = {{"field", entry.name}, {"n", n}, {"max_error", max_err}, {"tolerance", tol}};
  if (mc_samples > 0) {
    o.summary["mc_max_z"] = max_z;
    o.summary["mc_z_limit"] = 3.0;
    o.passed = o.passed && max_z <= 3.0;
  }
  return o;
}

inline HessianVariant variant_from(const Json& c, int n) {
  const std::string v = c.at("variant").get<std::string>();
  const std::string k = c.at("constant").get<std::string>();
  if (k != "moment" && k != "paper") throw ConfigError("constant", "must be moment or paper");
  const auto fd = c.at("fd_step");
  if (!fd.is_null() && !fd.is_number()) throw ConfigError("fd_step", "expected a number");
  if (v == "H1") return HessianVariant::H1(n, c.at("outer_n").get<int>());
  if (v == "H2") return HessianVariant::H2(n, fd.is_null() ? std::nullopt : std::optional<double>(fd.get<double>()));
  if (v == "H3") return HessianVariant::H3(n, fd.is_null() ? 1e-5 : fd.get<double>());
  if (v == "H4")
    return HessianVariant::H4(n, k == "paper" ? HessianConstant::PaperConstant : HessianConstant::MomentConstant);
  throw ConfigError("variant", "must be one of H1, H2, H3, H4");
}

inline CommandOutcome hess_check(const Json& c, const fs::path& out) {
  const std::size_t dim = c.at("dim").get<std::size_t>();
  const auto entry = catalog_field(c.at("field").get<std::string>(), dim);
  if (!entry.field.analytic_hessian) throw MissingDerivative("hess-check needs a field with an analytic Hessian");
  const int n = c.at("n").get<int>();
  const auto variant = variant_from(c, n);
  const auto kernel = kernel_from(c, dim, n);
  const NonlocalGradientConfig cfg(entry.domain, kernel, c.at("resolution").get<int>());
  double reach = kernel.effective_radius();
  if (variant.kind == HessianKind::H1) reach += kernel.with_scale_index(variant.m).effective_radius();
  const double margin = std::min(reach, 0.49 * entry.domain.extent().minCoeff());
  const auto probes = probe_points(entry.domain, margin, c.at("probes").get<std::size_t>(), c.at("seed").get<std::uint64_t>());
  std::vector<Matrix> hs(probes.size());
  parallel_for(probes.size(), workers_from(c), [&](std::size_t i) {
    hs[i] = nonlocal_hessian(entry.field, probes[i], variant, cfg);
  });
  std::string csv = "probe";
  for (std::size_t i = 0; i < dim; ++i) csv += ",x" + std::to_string(i);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) csv += ",h" + std::to_string(i) + std::to_string(j);
  csv += ",error\n";
  double max_err = 0.0;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const double err = (hs[k] - (*entry.field.analytic_hessian)(probes[k])).cwiseAbs().maxCoeff();
    max_err = std::max(max_err, err);
    std::vector<double> row{static_cast<double>(k)};
    for (Eigen::Index i = 0; i < probes[k].size(); ++i) row.push_back(probes[k][i]);
    for (Eigen::Index i = 0; i < hs[k].rows(); ++i)
      for (Eigen::Index j = 0; j < hs[k].cols(); ++j) row.push_back(hs[k](i, j));
    row.push_back(err);
    csv += table_row(row);
  }
  CommandOutcome o;
  detail::write_file(join(out, "hess_check.csv"), csv);
  o.outputs.push_back("hess_check.csv");
  const double tol = c.at("tolerance").get<double>();
  o.passed = max_err <= tol;
  o.summary = {{"field", entry.name}, {"n", n}, {"variant", c.at("variant")}, {"constant", c.at("constant")},
               {"max_error", max_err}, {"tolerance", tol}};
  return o;
}

inline std::vector<int> int_list(const Json& j, const std::string& key) {
  std::vector<int> v = j.get<std::vector<int>>();
  if (v.empty()) throw ConfigError(key, "must not be empty");
  for (int x : v)
    if (x < 1) throw ConfigError(key, "entries must be >= 1");
  return v;
}

inline CommandOutcome sweep(const Json& c, const fs::path& out) {
  SweepSettings s;
  s.field = c.at("field").get<std::string>();
  s.dim = c.at("dim").get<std::size_t>();
  s.family = parse_family(c.at("kernel").at("family").get<std::string>());
  s.base_scale = c.at("kernel").at("base_scale").get<double>();
  s.resolution = c.at("resolution").get<int>();
  s.probes = c.at("probes").get<std::size_t>();
  s.seed = c.at("seed").get<std::uint64_t>();
  s.workers = workers_from(c);
  const auto& tr = c.at("tracking");
  s.tracking_x0 = tr.at("x0").get<double>();
  s.tracking_alpha0 = tr.at("alpha0").get<double>();
  s.tracking_q = tr.at("q").get<double>();
  s.tracking_steps = tr.at("steps").get<std::size_t>();
  const auto& sg = c.at("sgd");
  s.sgd_seeds = sg.at("seeds").get<std::size_t>();
  s.sgd_K = sg.at("K").get<std::size_t>();
  s.sgd_B = sg.at("B").get<double>();
  s.sgd_M = sg.at("M").get<double>();
  s.sgd_epsilon = sg.at("epsilon").get<double>();
  const auto& nw = c.at("newton");
  s.newton_steps = nw.at("steps").get<std::size_t>();
  s.newton_offset = nw.at("offset").get<double>();
  const std::string check = c.at("check").get<std::string>();
  const auto report = convergence_sweep(check, int_list(c.at("n_values"), "n_values"), s);

  CommandOutcome o;
  emit_csv(report, join(out, "sweep.csv"));
  o.outputs.push_back("sweep.csv");
  std::string expect = c.at("expect").get<std::string>();
  if (expect == "auto") expect = check == "sgd-bound" ? "bound" : check == "moment-c" ? "max_error" : "strictly_decreasing";
  if (expect == "strictly_decreasing") o.passed = report.strictly_decreasing;
  else if (expect == "monotone") o.passed = report.monotone;
  else if (expect == "bound") {
    if (check != "sgd-bound") throw ConfigError("expect", "'bound' applies to the sgd-bound check only");
    const double bound = SgdConfig{s.sgd_B, s.sgd_M, s.sgd_K, s.sgd_epsilon, 0}.bound();
    for (std::size_t i = 0; i < report.errors.size(); ++i)
      o.passed = o.passed && report.errors[i] <= bound + 3.0 * report.stderrs[i];
    o.summary["bound"] = bound;
    o.summary["stderrs"] = report.stderrs;
  } else if (expect != "max_error" && expect != "none") {
    throw ConfigError("expect", "must be auto, strictly_decreasing, monotone, bound, max_error or none");
  }
  const auto& cap = c.at("max_final_error");
  if (expect == "max_error") {
    const double limit = cap.is_number() ? cap.get<double>() : 1e-6;
    for (double e : report.errors) o.passed = o.passed && e <= limit;
    o.summary["max_error_limit"] = limit;
  } else if (cap.is_number()) {
    o.passed = o.passed && report.errors.back() <= cap.get<double>();
  }
  o.summary.update({{"check", check},
                    {"params", report.params},
                    {"errors", report.errors},
                    {"notes", report.notes},
                    {"strictly_decreasing", report.strictly_decreasing},
                    {"monotone", report.monotone},
                    {"expect", expect}});
  return o;
}

inline StepSchedule schedule_from(const Json& s) {
  const std::string kind = s.at("kind").get<std::string>();
  if (kind == "fixed") return StepSchedule::fixed(s.at("alpha").get<double>());
  if (kind == "geometric") return StepSchedule::summable_geometric(s.at("alpha").get<double>(), s.at("q").get<double>());
  throw ConfigError("schedule.kind", "must be fixed or geometric");
}

inline Point start_point(const Json& c, std::size_t dim, double fallback) {
  if (!c.at("x0").is_null()) return point_from(c.at("x0"), dim, "x0");
  return Point::Constant(static_cast<Eigen::Index>(dim), fallback);
}

inline void emit_traces(CommandOutcome& o, const fs::path& out, const OptimizerTrace& main,
                        const std::optional<OptimizerTrace>& local, const Point& reference) {
  emit_csv(main, join(out, "trace.csv"));
  o.outputs.push_back("trace.csv");
  std::vector<OptimizerTrace> traces{main};
  std::vector<std::string> labels{"nonlocal"};
  if (local) {
    emit_csv(*local, join(out, "local.csv"));
    o.outputs.push_back("local.csv");
    traces.push_back(*local);
    labels.push_back("local");
  }
  emit_plot_svg(traces, labels, reference, join(out, "trace.svg"));
  o.outputs.push_back("trace.svg");
}

inline CommandOutcome descend(const Json& c, const fs::path& out) {
  const std::size_t dim = c.at("dim").get<std::size_t>();
  const auto entry = catalog_field(c.at("field").get<std::string>(), dim);
  const int n = c.at("n").get<int>();
  const NonlocalGradientConfig cfg(entry.domain, kernel_from(c, dim, n), c.at("resolution").get<int>());
  const Point x0 = start_point(c, dim, 0.2);
  const auto max_iters = c.at("max_iters").get<std::size_t>();
  const double tol = c.at("grad_tol").get<double>();
  const std::string method = c.at("method").get<std::string>();
  OptimizerTrace tr;
  LocalOptions lo;
  LocalMethod lm = LocalMethod::GD;
  if (method == "fixed") {
    lo.schedule = schedule_from(c.at("schedule"));
    tr = nlgd_fixed(entry.field, x0, cfg, lo.schedule, max_iters, tol);
  } else if (method == "linesearch") {
    lo.cap = c.at("cap").get<double>();
    lo.domain = entry.domain;
    lm = LocalMethod::GDLineSearch;
    tr = nlgd_linesearch(entry.field, x0, cfg, lo.cap, max_iters, tol);
  } else {
    throw ConfigError("method", "must be fixed or linesearch");
  }
  std::optional<OptimizerTrace> local;
  if (c.at("compare_local").get<bool>()) local = local_counterpart(entry.field, x0, lm, lo, max_iters, tol);
  CommandOutcome o;
  const Point ref = entry.minimizer ? *entry.minimizer : local ? local->last() : tr.last();
  emit_traces(o, out, tr, local, ref);
  o.passed = run_completed(tr.termination);
  o.summary = trace_summary(tr);
  o.summary["field"] = entry.name;
  if (entry.minimizer) o.summary["distance_to_minimizer"] = (tr.last() - *entry.minimizer).norm();
  if (local) {
    double gap = 0.0;
    for (std::size_t k = 0; k < std::min(tr.size(), local->size()); ++k)
      gap = std::max(gap, (tr.iterates[k] - local->iterates[k]).norm());
    o.summary["max_gap_to_local"] = gap;
  }
  return o;
}

inline CommandOutcome sgd(const Json& c, const fs::path& out) {
  const std::size_t dim = c.at("dim").get<std::size_t>();
  const auto entry = catalog_field(c.at("field").get<std::string>(), dim);
  const BoxDomain domain = BoxDomain::cube(dim, c.at("domain").at("lower").get<double>(), c.at("domain").at("upper").get<double>());
  const auto kernel = kernel_from(c, dim, c.at("n").get<int>());
  const SgdConfig base{c.at("B").get<double>(), c.at("M").get<double>(), c.at("K").get<std::size_t>(),
                       c.at("epsilon").get<double>(), c.at("seed").get<std::uint64_t>()};
  base.validate();
  const auto seeds = c.at("seeds").get<std::size_t>();
  if (seeds == 0) throw ConfigError("seeds", "must be >= 1");
  std::vector<SgdResult> runs(seeds);
  parallel_for(seeds, workers_from(c), [&](std::size_t i) {
    SgdConfig cfg = base;
    cfg.seed = base.seed + i;
    runs[i] = epsilon_sgd(entry.field, cfg, kernel, domain);
  });
  CommandOutcome o;
  emit_csv(runs.front().trace, join(out, "trace.csv"));
  o.outputs.push_back("trace.csv");
  o.summary = {{"field", entry.name}, {"x_bar", to_json(runs.front().x_bar)}, {"alpha", base.alpha()},
               {"bound", base.bound()}, {"seeds", seeds}};
  if (entry.minimizer) {
    const double fstar = entry.field(*entry.minimizer);
    double mean = 0.0, sq = 0.0;
    for (const auto& r : runs) {
      const double gap = entry.field(r.x_bar) - fstar;
      mean += gap;
      sq += gap * gap;
    }
    mean /= static_cast<double>(seeds);
    o.summary["mean_gap"] = mean;
    if (seeds > 1) {
      const double se = std::sqrt(std::max(0.0, sq / seeds - mean * mean) * seeds / (seeds - 1.0) / seeds);
      o.summary["stderr"] = se;
      o.passed = mean <= base.bound() + 3.0 * se;
    }
  }
  return o;
}

inline CommandOutcome newton(const Json& c, const fs::path& out) {
  const std::size_t dim = c.at("dim").get<std::size_t>();
  const auto entry = catalog_field(c.at("field").get<std::string>(), dim);
  const int n = c.at("n").get<int>();
  const NonlocalGradientConfig cfg(entry.domain, kernel_from(c, dim, n), c.at("resolution").get<int>());
  Point x0;
  if (!c.at("x0").is_null()) {
    x0 = point_from(c.at("x0"), dim, "x0");
  } else {
    if (!entry.minimizer) throw ConfigError("x0", "required for fields without a known minimizer");
    const double off = c.at("offset").get<double>();
    x0 = *entry.minimizer;
    x0[0] += off;
    if (x0.size() > 1) x0[1] -= 0.6 * off;
  }
  NewtonOptions opts;
  opts.beta0 = c.at("beta0").get<double>();
  opts.backtrack = c.at("backtrack").get<bool>();
  const auto max_iters = c.at("max_iters").get<std::size_t>();
  const double tol = c.at("grad_tol").get<double>();
  const auto tr = nonlocal_newton(entry.field, x0, cfg, opts, max_iters, tol);
  std::optional<OptimizerTrace> local;
  if (c.at("compare_local").get<bool>()) {
    LocalOptions lo;
    lo.newton = opts;
    local = local_counterpart(entry.field, x0, LocalMethod::Newton, lo, max_iters, tol);
  }
  CommandOutcome o;
  const Point ref = entry.minimizer ? *entry.minimizer : local ? local->last() : tr.last();
  emit_traces(o, out, tr, local, ref);
  o.passed = run_completed(tr.termination);
  o.summary = trace_summary(tr);
  o.summary["field"] = entry.name;
  if (entry.minimizer) o.summary["distance_to_minimizer"] = (tr.last() - *entry.minimizer).norm();
  if (local) {
    Json gaps = Json::array();
    for (std::size_t k = 0; k < std::min(tr.size(), local->size()); ++k)
      gaps.push_back((tr.iterates[k] - local->iterates[k]).norm());
    o.summary["gap_to_local"] = gaps;
  }
  return o;
}

inline std::vector<double> holder_offsets() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back(1e-3 * std::pow(10.0, i / 9.0));
  return out;
}

inline CommandOutcome pulse(const Json& c, const fs::path& out) {
  PulseRunConfig base;
  base.alpha = c.at("alpha").get<double>();
  base.threshold = c.at("threshold").get<double>();
  base.theta0 = c.at("theta0").get<double>();
  base.theta_star = c.at("theta_star").get<double>();
  base.max_iters = c.at("max_iters").get<std::size_t>();
  base.resolution = c.at("resolution").get<int>();
  base.tolerance = c.at("tolerance").get<double>();
  base.gaussian_base = c.at("gaussian_base").get<double>();
  base.bump_base = c.at("bump_base").get<double>();
  base.pulse_width = c.at("pulse_width").get<double>();
  base.signal_grid = c.at("signal_grid").get<int>();
  std::vector<PulseRunConfig> configs;
  for (const auto& f : c.at("families")) {
    for (int n : int_list(c.at("n_values"), "n_values")) {
      PulseRunConfig pc = base;
      pc.family = parse_family(f.get<std::string>());
      pc.n = n;
      pc.validate();
      configs.push_back(pc);
    }
  }
  if (configs.empty()) throw ConfigError("families", "must not be empty");
  const auto results = run_pulse_suite(configs, workers_from(c));

  CommandOutcome o;
  std::vector<OptimizerTrace> traces;
  std::vector<std::string> labels;
  Json runs = Json::array();
  bool all_converged = true;
  std::optional<std::size_t> prev_gaussian;
  bool gaussian_faster = true;
  std::optional<bool> bump_largest_nonmonotone;
  int bump_largest = 0;
  for (const auto& r : results) {
    const std::string name = "pulse_" + to_string(r.config.family) + "_n" + std::to_string(r.config.n) + ".csv";
    emit_csv(r.trace, join(out, name), {"theta"});
    o.outputs.push_back(name);
    traces.push_back(r.trace);
    labels.push_back(r.config.label());
    all_converged = all_converged && r.converged();
    Json run = {{"family", to_string(r.config.family)},
                {"n", r.config.n},
                {"final_theta", r.final_theta()},
                {"final_error", r.final_error()},
                {"converged", r.converged()},
                {"iterations", r.trace.size() - 1},
                {"iterations_to_tolerance", r.iterations_to_tolerance ? Json(*r.iterations_to_tolerance) : Json()},
                {"objective_increases", r.objective_increases},
                {"clamped_iterations", r.clamped},
                {"termination", to_string(r.trace.termination)},
                {"trace", name}};
    runs.push_back(run);
    if (r.config.family == KernelFamily::Gaussian) {
      if (!r.iterations_to_tolerance || (prev_gaussian && *r.iterations_to_tolerance > *prev_gaussian))
        gaussian_faster = false;
      if (r.iterations_to_tolerance) prev_gaussian = r.iterations_to_tolerance;
    } else if (r.config.n >= bump_largest) {
      bump_largest = r.config.n;
      bump_largest_nonmonotone = !r.objective_monotone();
    }
  }
  emit_plot_svg(traces, labels, Point::Constant(1, base.theta_star), join(out, "pulse.svg"));
  o.outputs.push_back("pulse.svg");

  const PulseManifold m = base.manifold();
  Json fits = Json::array();
  bool holder_ok = true;
  for (double center : {0.2, 0.3, 0.4, 0.6, 0.7}) {
    const double e = holder_exponent_fit(m, center, holder_offsets());
    holder_ok = holder_ok && std::abs(e + 0.5) <= 0.02;
    fits.push_back({{"center", center}, {"exponent", e}});
  }
  Json checks = {{"all_converged", all_converged}, {"gaussian_faster_with_n", gaussian_faster},
                 {"holder_exponent", holder_ok}};
  if (bump_largest_nonmonotone) checks["bump_largest_n_nonmonotone"] = *bump_largest_nonmonotone;
  for (const auto& [k, v] : checks.items()) o.passed = o.passed && v.get<bool>();
  o.summary = {{"runs", runs}, {"holder_fits", fits}, {"checks", checks}};
  detail::write_file(join(out, "summary.json"), o.summary.dump(2) + "\n");
  o.outputs.push_back("summary.json");
  return o;
}

inline CommandOutcome dispatch(const std::string& command, const Json& config, const fs::path& out) {
  if (command == "grad-check") return grad_check(config, out);
  if (command == "hess-check") return hess_check(config, out);
  if (command == "sweep") return sweep(config, out);
  if (command == "descend") return descend(config, out);
  if (command == "sgd") return sgd(config, out);
  if (command == "newton") return newton(config, out);
  return pulse(config, out);
}

inline Json build_info() {
  return {{"nonlocal", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__},
          {"cplusplus", __cplusplus}};
}

}  // namespace cli

/// Parses argv, runs one command and writes its artifacts. Returns 0 (ok), 1 (check failed or
/// runtime error) or 2 (usage or configuration error).
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Nonlocal gradients, Hessians and optimizers", "nonlocal"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough(false);

  struct Flags {
    std::optional<std::string> config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::vector<std::string> sets;
    std::optional<std::string> field;
    std::optional<int> n;
    int verbose = 0;
  };

  const std::vector<std::pair<std::string, std::string>> descriptions = {
      {"grad-check", "compare the nonlocal gradient with the local one at random probes"},
      {"hess-check", "compare a nonlocal Hessian variant with the local Hessian"},
      {"sweep", "run a convergence sweep over the scale index n"},
      {"descend", "nonlocal gradient descent (fixed schedule or line search)"},
      {"sgd", "epsilon-stochastic subgradient descent"},
      {"newton", "nonlocal Newton iteration"},
      {"pulse", "pulse-translation estimation experiment"}};
  std::vector<Flags> flags(descriptions.size());
  for (std::size_t i = 0; i < descriptions.size(); ++i) {
    const auto& [name, desc] = descriptions[i];
    Flags& f = flags[i];
    CLI::App* s = app.add_subcommand(name, desc);
    s->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    s->add_option("--out", f.out, "output directory")->capture_default_str();
    s->add_option("--seed", f.seed, "random seed");
    s->add_option("--workers", f.workers, "worker threads (0: all cores)");
    s->add_option("--set", f.sets, "override key=value (repeatable, dotted keys)")->allow_extra_args(false);
    s->add_option("--field", f.field, "catalog field name");
    s->add_option("--n", f.n, "scale index n");
    s->add_flag("-v,--verbose", f.verbose, "print the full summary");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    if (argc > 1) err << app.help();
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const Flags& f = flags[static_cast<std::size_t>(
      std::find_if(descriptions.begin(), descriptions.end(), [&](const auto& d) { return d.first == command; }) -
      descriptions.begin())];

  const auto t0 = std::chrono::steady_clock::now();
  Json config;
  try {
    std::vector<std::string> overrides = f.sets;
    const Json schema = command_defaults(command);
    if (f.field) overrides.push_back("field=" + Json(*f.field).dump());
    if (f.n) overrides.push_back((schema.contains("n") ? "n=" : "n_values=") +
                                 (schema.contains("n") ? std::to_string(*f.n) : "[" + std::to_string(*f.n) + "]"));
    if (f.seed) overrides.push_back("seed=" + std::to_string(*f.seed));
    if (f.workers) overrides.push_back("workers=" + std::to_string(*f.workers));
    config = load_config(command, f.config, overrides);
  } catch (const Error& e) {
    err << "nonlocal " << command << ": " << e.what() << "\n";
    return kExitUsage;
  }

  const cli::fs::path dir(f.out);
  try {
    cli::fs::create_directories(dir);
    detail::write_file(cli::join(dir, "config.resolved.json"), config.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "nonlocal " << command << ": " << e.what() << "\n";
    return kExitCheckFailed;
  }

  int code = kExitOk;
  CommandOutcome outcome;
  std::string error;
  try {
    outcome = cli::dispatch(command, config, dir);
    code = outcome.passed ? kExitOk : kExitCheckFailed;
  } catch (const ConfigError& e) {
    error = e.what();
    code = kExitUsage;
  } catch (const InvalidArgument& e) {
    error = e.what();
    code = kExitUsage;
  } catch (const DimensionMismatch& e) {
    error = e.what();
    code = kExitUsage;
  } catch (const std::exception& e) {
    error = e.what();
    code = kExitCheckFailed;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json argv_json = Json::array();
  for (int i = 0; i < argc; ++i) argv_json.push_back(argv[i]);
  Json manifest = {{"command", command},
                   {"argv", argv_json},
                   {"config", config},
                   {"versions", cli::build_info()},
                   {"wall_time_seconds", wall},
                   {"exit_code", code},
                   {"passed", code == kExitOk},
                   {"outputs", outcome.outputs},
                   {"summary", outcome.summary}};
  if (!error.empty()) manifest["error"] = error;
  try {
    detail::write_file(cli::join(dir, "manifest.json"), manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "nonlocal " << command << ": " << e.what() << "\n";
    return kExitCheckFailed;
  }

  if (!error.empty()) err << "nonlocal " << command << ": " << error << "\n";
  out << command << ": " << (code == kExitOk ? "ok" : code == kExitCheckFailed ? "FAILED" : "usage error") << " ("
      << dir.string() << ")\n";
  if (f.verbose > 0) out << outcome.summary.dump(2) << "\n";
  return code;
}

}  // namespace nonlocal
