#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nonlocal/io.hpp"

using namespace nonlocal;
namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nonlocal_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

OptimizerTrace sample_trace(std::size_t n, Eigen::Index dim) {
  OptimizerTrace t;
  for (std::size_t k = 0; k < n; ++k) {
    Point x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) x[i] = 1.0 / (3.0 + k + i) + 1e-17 * k;
    t.push(x, std::exp(-0.1 * k) / 7.0, std::sqrt(2.0) / (1 + k));
    if (k + 1 < n) t.steps_taken.push_back(0.1 / 3.0 * (k + 1));
  }
  return t;
}

pt::ptree parse_svg(const std::string& text) {
  std::istringstream in(text);
  pt::ptree tree;
  pt::read_xml(in, tree);
  return tree;
}

}  // namespace

TEST(TraceCsv, EmptyTraceHeaderOnly) {
  const auto p = scratch("empty.csv");
  emit_csv(OptimizerTrace{}, p.string());
  EXPECT_EQ(slurp(p), "iter,x0,objective,grad_norm,alpha\n");
  EXPECT_EQ(parse_trace_csv(p.string()).size(), 0u);
}

TEST(TraceCsv, LineCountAndLf) {
  const auto p = scratch("three.csv");
  emit_csv(sample_trace(3, 1), p.string(), {"theta"});
  const std::string s = slurp(p);
  EXPECT_EQ(count_lines(s), 4u);
  EXPECT_EQ(s.find('\r'), std::string::npos);
  EXPECT_EQ(s.substr(0, s.find('\n')), "iter,theta,objective,grad_norm,alpha");
  EXPECT_EQ(s.back(), '\n');
}

TEST(TraceCsv, RoundTripBitExact) {
  for (Eigen::Index dim : {1, 3}) {
    auto t = sample_trace(25, dim);
    t.objective_values[4] = std::nan("");
    t.gradient_norms[5] = INFINITY;
    const auto p = scratch("rt.csv");
    emit_csv(t, p.string());
    const auto back = parse_trace_csv(p.string());
    ASSERT_EQ(back.size(), t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
      EXPECT_EQ(back.iterates[k], t.iterates[k]);
      if (k != 4) {
        EXPECT_EQ(back.objective_values[k], t.objective_values[k]);
      }
      EXPECT_EQ(back.gradient_norms[k], t.gradient_norms[k]);
    }
    EXPECT_TRUE(std::isnan(back.objective_values[4]));
    EXPECT_EQ(back.steps_taken, t.steps_taken);
  }
}

TEST(TraceCsv, Deterministic) {
  const auto t = sample_trace(10, 2);
  EXPECT_EQ(trace_csv(t), trace_csv(t));
  EXPECT_THROW(trace_csv(t, {"only_one"}), DimensionMismatch);
}

TEST(TraceCsv, IoErrorsNamePath) {
  try {
    emit_csv(sample_trace(2, 1), "/nonexistent-dir/x.csv");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), "/nonexistent-dir/x.csv");
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.csv"), std::string::npos);
  }
  EXPECT_THROW(parse_trace_csv("/nonexistent-dir/x.csv"), IoError);
  const auto p = scratch("bad.csv");
  std::ofstream(p) << "iter,x0,objective,grad_norm,alpha\n0,abc,1,1,\n";
  EXPECT_THROW(parse_trace_csv(p.string()), IoError);
  std::ofstream(p, std::ios::trunc) << "iter,x0,objective,grad_norm,alpha\n0,1,1\n";
  EXPECT_THROW(parse_trace_csv(p.string()), IoError);
}

TEST(ReportCsv, RoundTrip) {
  SweepReport r;
  r.check = "gradient-localization";
  r.params = {4, 8, 16};
  r.errors = {0.1, 0.01 / 3.0, 1e-300};
  r.locations = {Point::Constant(2, 0.3), Point::Constant(2, 1.0 / 7.0), Point::Constant(2, 0.9)};
  r.notes = {"", "", ""};
  r.finalize();
  const auto p = scratch("report.csv");
  emit_csv(r, p.string());
  EXPECT_EQ(slurp(p).substr(0, 23), "param,error,loc0,loc1\n4");
  const auto back = parse_report_csv(p.string());
  EXPECT_EQ(back.params, r.params);
  EXPECT_EQ(back.errors, r.errors);
  EXPECT_EQ(back.locations, r.locations);
  EXPECT_TRUE(back.strictly_decreasing);
}

TEST(PlotSvg, WellFormedWithLegend) {
  const auto a = sample_trace(30, 1), b = sample_trace(12, 1);
  const auto p = scratch("plot.svg");
  emit_plot_svg({a, b}, {"gaussian n=1", "bump <n=3> & co"}, Point::Constant(1, 0.0), p.string());
  const auto tree = parse_svg(slurp(p));
  const auto& svg = tree.get_child("svg");
  int polylines = 0;
  std::set<std::string> texts;
  for (const auto& [tag, node] : svg) {
    if (tag == "polyline") ++polylines;
    if (tag == "text") texts.insert(node.data());
  }
  EXPECT_EQ(polylines, 2);
  EXPECT_TRUE(texts.count("gaussian n=1"));
  EXPECT_TRUE(texts.count("bump <n=3> & co"));
}

TEST(PlotSvg, ConstantErrorIsHorizontal) {
  OptimizerTrace t;
  for (int k = 0; k < 5; ++k) t.push(Point::Constant(1, 0.7), 1.0, 1.0);
  const auto tree = parse_svg(plot_svg({t}, {"flat"}, Point::Constant(1, 0.5)));
  const std::string pts = tree.get_child("svg.polyline.<xmlattr>.points").data();
  std::istringstream in(pts);
  std::string pair;
  std::set<std::string> ys;
  int count = 0;
  while (in >> pair) {
    ys.insert(pair.substr(pair.find(',') + 1));
    ++count;
  }
  EXPECT_EQ(count, 5);
  EXPECT_EQ(ys.size(), 1u);
}

TEST(PlotSvg, ZeroErrorsAndArgumentChecks) {
  OptimizerTrace t;
  t.push(Point::Constant(1, 0.5), 0.0, 0.0);
  EXPECT_NO_THROW(parse_svg(plot_svg({t}, {"exact"}, Point::Constant(1, 0.5))));
  EXPECT_THROW(plot_svg({}, {}, Point::Constant(1, 0.5)), InvalidArgument);
  EXPECT_THROW(plot_svg({t}, {}, Point::Constant(1, 0.5)), InvalidArgument);
}
