#pragma once

// CSV and SVG artifacts for optimizer traces and sweep reports.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nonlocal/errors.hpp"
#include "nonlocal/optimizers.hpp"
#include "nonlocal/validation.hpp"

namespace nonlocal {

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out << content;
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out = split(text, '\n');
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw IoError(path, "malformed number '" + s + "'");
  return v;
}

}  // namespace detail

/// Header plus one row per iterate: iter, coordinates, objective, grad_norm, alpha. alpha is the
/// step taken from that iterate and is empty on the last row. Coordinate columns default to x0..x{D-1}.
inline std::string trace_csv(const OptimizerTrace& trace, std::vector<std::string> coord_names = {}) {
  if (coord_names.empty()) {
    const Eigen::Index D = trace.size() ? trace.iterates.front().size() : 1;
    for (Eigen::Index i = 0; i < D; ++i) coord_names.push_back("x" + std::to_string(i));
  }
  std::string s = "iter";
  for (const auto& c : coord_names) s += "," + c;
  s += ",objective,grad_norm,alpha\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const Point& x = trace.iterates[k];
    if (static_cast<std::size_t>(x.size()) != coord_names.size())
      throw DimensionMismatch(coord_names.size(), static_cast<std::size_t>(x.size()));
    s += std::to_string(k);
    for (Eigen::Index i = 0; i < x.size(); ++i) s += "," + detail::fmt17(x[i]);
    s += "," + detail::fmt17(trace.objective_values[k]) + "," + detail::fmt17(trace.gradient_norms[k]) + ",";
    if (k < trace.steps_taken.size()) s += detail::fmt17(trace.steps_taken[k]);
    s += "\n";
  }
  return s;
}

inline void emit_csv(const OptimizerTrace& trace, const std::string& path,
                     const std::vector<std::string>& coord_names = {}) {
  detail::write_file(path, trace_csv(trace, coord_names));
}

/// Columns: param, error, then the location coordinates loc0..loc{D-1}.
inline std::string report_csv(const SweepReport& report) {
  const Eigen::Index D = report.locations.empty() ? 0 : report.locations.front().size();
  std::string s = "param,error";
  for (Eigen::Index i = 0; i < D; ++i) s += ",loc" + std::to_string(i);
  s += "\n";
  for (std::size_t k = 0; k < report.errors.size(); ++k) {
    s += detail::fmt17(report.params[k]) + "," + detail::fmt17(report.errors[k]);
    for (Eigen::Index i = 0; i < D; ++i)
      s += "," + (report.locations[k].size() > i ? detail::fmt17(report.locations[k][i]) : std::string());
    s += "\n";
  }
  return s;
}

inline void emit_csv(const SweepReport& report, const std::string& path) {
  detail::write_file(path, report_csv(report));
}

/// Reads a file written by emit_csv(trace). Termination is not stored and comes back as MaxIters.
inline OptimizerTrace parse_trace_csv(const std::string& path) {
  const auto rows = detail::lines(detail::read_file(path));
  if (rows.empty()) throw IoError(path, "missing header");
  const auto header = detail::split(rows[0], ',');
  if (header.size() < 5 || header.front() != "iter" || header.back() != "alpha")
    throw IoError(path, "unexpected header");
  const std::size_t D = header.size() - 4;
  OptimizerTrace tr;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = detail::split(rows[r], ',');
    if (cells.size() != header.size()) throw IoError(path, "row " + std::to_string(r) + " has wrong width");
    if (cells[0] != std::to_string(r - 1)) throw IoError(path, "row " + std::to_string(r) + " out of order");
    Point x(static_cast<Eigen::Index>(D));
    for (std::size_t i = 0; i < D; ++i) x[static_cast<Eigen::Index>(i)] = detail::parse_double(cells[1 + i], path);
    tr.push(x, detail::parse_double(cells[1 + D], path), detail::parse_double(cells[2 + D], path));
    if (!cells.back().empty()) tr.steps_taken.push_back(detail::parse_double(cells.back(), path));
  }
  if (tr.size() && tr.steps_taken.size() + 1 != tr.size()) throw IoError(path, "alpha column inconsistent");
  return tr;
}

/// Reads a file written by emit_csv(report). Notes and verdicts are recomputed, not stored.
inline SweepReport parse_report_csv(const std::string& path) {
  const auto rows = detail::lines(detail::read_file(path));
  if (rows.empty()) throw IoError(path, "missing header");
  const auto header = detail::split(rows[0], ',');
  if (header.size() < 2 || header[0] != "param" || header[1] != "error") throw IoError(path, "unexpected header");
  const std::size_t D = header.size() - 2;
  SweepReport rep;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = detail::split(rows[r], ',');
    if (cells.size() != header.size()) throw IoError(path, "row " + std::to_string(r) + " has wrong width");
    rep.params.push_back(detail::parse_double(cells[0], path));
    rep.errors.push_back(detail::parse_double(cells[1], path));
    Point loc(static_cast<Eigen::Index>(D));
    for (std::size_t i = 0; i < D; ++i) loc[static_cast<Eigen::Index>(i)] = detail::parse_double(cells[2 + i], path);
    rep.locations.push_back(loc);
    rep.notes.emplace_back();
    rep.stderrs.push_back(0.0);
  }
  rep.finalize();
  return rep;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

/// Iteration against ‖x_k − reference‖ on a log axis, one polyline per trace. Zero errors are
/// drawn at the 1e-16 floor.
inline std::string plot_svg(const std::vector<OptimizerTrace>& traces, const std::vector<std::string>& labels,
                            const Point& reference) {
  if (traces.empty()) throw InvalidArgument("plot needs at least one trace");
  if (labels.size() != traces.size()) throw InvalidArgument("one label per trace is required");
  constexpr double kFloor = 1e-16;
  constexpr double W = 720, H = 440, left = 70, right = 190, top = 30, bottom = 50;
  std::vector<std::vector<double>> errs(traces.size());
  std::size_t max_len = 1;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (const auto& x : traces[t].iterates) {
      const double e = std::max((x - reference).norm(), kFloor);
      errs[t].push_back(e);
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    max_len = std::max(max_len, traces[t].size());
  }
  if (!std::isfinite(lo)) lo = hi = 1.0;
  double dlo = std::floor(std::log10(lo)), dhi = std::ceil(std::log10(hi));
  if (dhi <= dlo) dhi = dlo + 1;
  const double pw = W - left - right, ph = H - top - bottom;
  const double xmax = std::max<double>(1.0, static_cast<double>(max_len - 1));
  auto px = [&](double k) { return left + pw * k / xmax; };
  auto py = [&](double e) { return top + ph * (dhi - std::log10(e)) / (dhi - dlo); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream s;
  char buf[256];
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << " " << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                left, top, pw, ph);
  s << buf;
  for (double d = dlo; d <= dhi; d += 1.0) {
    const double y = py(std::pow(10.0, d));
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%.3f\" x2=\"%g\" y2=\"%.3f\" stroke=\"#dddddd\"/>"
                  "<text x=\"%g\" y=\"%.3f\" font-size=\"11\" text-anchor=\"end\">1e%d</text>\n",
                  left, y, left + pw, y, left - 6, y + 4, static_cast<int>(d));
    s << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\">iteration</text>\n"
                "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">0</text>"
                "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">%zu</text>\n",
                left + pw / 2, H - 12, left, top + ph + 16, left + pw, top + ph + 16, max_len - 1);
  s << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 %g)\">"
                "distance to reference</text>\n",
                top + ph / 2, top + ph / 2);
  s << buf;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const char* color = colors[t % (sizeof colors / sizeof *colors)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < errs[t].size(); ++k) {
      std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", k ? " " : "", px(static_cast<double>(k)), py(errs[t][k]));
      s << buf;
    }
    s << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(t);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>", left + pw + 12, ly,
                  left + pw + 36, ly, color);
    s << buf << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
      << detail::xml_escape(labels[t]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

inline void emit_plot_svg(const std::vector<OptimizerTrace>& traces, const std::vector<std::string>& labels,
                          const Point& reference, const std::string& path) {
  detail::write_file(path, plot_svg(traces, labels, reference));
}

}  // namespace nonlocal
