#pragma once

// Domains, points and scalar fields shared by every other module.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nonlocal/errors.hpp"

namespace nonlocal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Point = Eigen::VectorXd;

/// Axis-aligned open box (lower, upper) in R^D.
class BoxDomain {
 public:
  BoxDomain(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() == 0) throw InvalidArgument("box dimension must be positive");
    if (lower_.size() != upper_.size())
      throw DimensionMismatch(static_cast<std::size_t>(lower_.size()),
                              static_cast<std::size_t>(upper_.size()));
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
      if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i]))
        throw InvalidArgument("box requires finite lower[i] < upper[i] on every axis");
    }
  }

  /// [a, b]^dim.
  static BoxDomain cube(std::size_t dim, double a, double b) {
    return BoxDomain(Vector::Constant(static_cast<Eigen::Index>(dim), a),
                     Vector::Constant(static_cast<Eigen::Index>(dim), b));
  }
  static BoxDomain unit(std::size_t dim) { return cube(dim, 0.0, 1.0); }
  static BoxDomain interval(double a, double b) {
    return BoxDomain(Vector::Constant(1, a), Vector::Constant(1, b));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  Vector center() const { return 0.5 * (lower_ + upper_); }
  Vector extent() const { return upper_ - lower_; }
  double volume() const { return extent().prod(); }
  double diameter() const { return extent().norm(); }

  /// Strict interior membership.
  bool contains(const Point& x) const {
    check_dim(x);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (!(lower_[i] < x[i] && x[i] < upper_[i])) return false;
    return true;
  }

  /// Membership in the closure [lower, upper].
  bool contains_closed(const Point& x) const {
    check_dim(x);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (!(lower_[i] <= x[i] && x[i] <= upper_[i])) return false;
    return true;
  }

  /// Distance from x to the complement of the box (0 outside).
  double interior_margin(const Point& x) const {
    check_dim(x);
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i)
      m = std::min({m, x[i] - lower_[i], upper_[i] - x[i]});
    return std::max(m, 0.0);
  }

  /// Intersection with another box, empty when they do not overlap.
  std::optional<BoxDomain> intersect(const BoxDomain& other) const {
    if (other.dim() != dim()) throw DimensionMismatch(dim(), other.dim());
    Vector lo = lower_.cwiseMax(other.lower_);
    Vector hi = upper_.cwiseMin(other.upper_);
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) return std::nullopt;
    return BoxDomain(lo, hi);
  }

  bool operator==(const BoxDomain& o) const {
    return lower_ == o.lower_ && upper_ == o.upper_;
  }

  void check_dim(const Point& x) const {
    if (static_cast<std::size_t>(x.size()) != dim())
      throw DimensionMismatch(dim(), static_cast<std::size_t>(x.size()));
  }

 private:
  Vector lower_;
  Vector upper_;
};

inline bool contains(const BoxDomain& domain, const Point& x) { return domain.contains(x); }

/// Box [center - r, center + r] clipped to the domain; nullopt if the overlap is empty.
inline std::optional<BoxDomain> clipped_cube(const Point& center, double radius,
                                             const BoxDomain& domain) {
  domain.check_dim(center);
  Vector r = Vector::Constant(center.size(), radius);
  return BoxDomain(center - r, center + r).intersect(domain);
}

using FieldFn = std::function<double(const Point&)>;
using GradientFn = std::function<Vector(const Point&)>;
using HessianFn = std::function<Matrix(const Point&)>;

/// An objective u: Omega -> R given by an evaluation callback, with optional exact
/// derivatives and regularity hints. Callbacks must be pure.
struct ScalarField {
  FieldFn eval;
  std::optional<GradientFn> analytic_gradient;
  std::optional<HessianFn> analytic_hessian;
  std::optional<double> lipschitz_hint;
  /// Closed box outside of which eval is exactly 0.
  std::optional<BoxDomain> compact_support;

  double operator()(const Point& x) const { return eval(x); }
  bool has_gradient() const noexcept { return analytic_gradient.has_value(); }
  bool has_hessian() const noexcept { return analytic_hessian.has_value(); }
};

/// Returns the field extended by zero to all of R^D: identical on the closed support box,
/// 0 elsewhere. Derivatives are extended the same way.
inline ScalarField extend_by_zero(const ScalarField& field) {
  if (!field.compact_support)
    throw InvalidArgument("extend_by_zero requires a compact_support declaration");
  const BoxDomain support = *field.compact_support;
  ScalarField out = field;
  out.eval = [support, f = field.eval](const Point& x) -> double {
    return support.contains_closed(x) ? f(x) : 0.0;
  };
  if (field.analytic_gradient) {
    out.analytic_gradient = [support, g = *field.analytic_gradient](const Point& x) -> Vector {
      return support.contains_closed(x) ? g(x) : Vector::Zero(x.size());
    };
  }
  if (field.analytic_hessian) {
    out.analytic_hessian = [support, h = *field.analytic_hessian](const Point& x) -> Matrix {
      return support.contains_closed(x) ? h(x) : Matrix::Zero(x.size(), x.size());
    };
  }
  return out;
}

/// Measurable subset of Omega represented as a finite union of closed boxes.
/// The boxes are assumed pairwise disjoint up to measure zero.
class SubsetIndicator {
 public:
  explicit SubsetIndicator(std::size_t dim) : dim_(dim) {}
  SubsetIndicator(std::size_t dim, std::vector<BoxDomain> boxes) : dim_(dim) {
    for (auto& b : boxes) add(std::move(b));
  }

  static SubsetIndicator empty(std::size_t dim) { return SubsetIndicator(dim); }
  static SubsetIndicator whole(const BoxDomain& domain) {
    return SubsetIndicator(domain.dim(), {domain});
  }
  /// 1-D union of intervals [a_k, b_k].
  static SubsetIndicator intervals(const std::vector<std::pair<double, double>>& ivs) {
    SubsetIndicator s(1);
    for (auto [a, b] : ivs) s.add(BoxDomain::interval(a, b));
    return s;
  }

  void add(BoxDomain box) {
    if (box.dim() != dim_) throw DimensionMismatch(dim_, box.dim());
    boxes_.push_back(std::move(box));
  }

  bool contains(const Point& x) const {
    return std::any_of(boxes_.begin(), boxes_.end(),
                       [&](const BoxDomain& b) { return b.contains_closed(x); });
  }
  bool is_empty() const noexcept { return boxes_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<BoxDomain>& boxes() const noexcept { return boxes_; }
  double measure() const {
    double m = 0.0;
    for (const auto& b : boxes_) m += b.volume();
    return m;
  }

 private:
  std::size_t dim_;
  std::vector<BoxDomain> boxes_;
};

}  // namespace nonlocal
