// Nonlocal gradient of a smooth field, then nonlocal gradient descent on a quadratic.

#include <cmath>
#include <cstdio>

#include "nonlocal/nonlocal.hpp"

using namespace nonlocal;

int main() {
  const auto sin_field = catalog_field("sin-product", 1);
  const Point x = Point::Constant(1, 0.3);
  std::printf("local gradient at 0.3:     %.8f\n", (*sin_field.field.analytic_gradient)(x)[0]);
  for (int n : {4, 8, 16, 32}) {
    const NonlocalGradientConfig cfg(sin_field.domain, RadialKernel::gaussian(1, n));
    std::printf("nonlocal gradient, n = %2d: %.8f\n", n, nonlocal_gradient(sin_field.field, x, cfg)[0]);
  }

  const auto quad = catalog_field("quadratic-spd", 2);
  const NonlocalGradientConfig cfg(quad.domain, RadialKernel::bump(2, 8, 0.2), 48);
  const auto trace = nlgd_linesearch(quad.field, Point::Constant(2, 0.15), cfg, 1.0, 25, 1e-10);
  std::printf("\nline-search descent: %zu iterations, termination %s\n", trace.size() - 1,
              to_string(trace.termination).c_str());
  std::printf("final point (%.6f, %.6f), minimizer (%.2f, %.2f)\n", trace.last()[0], trace.last()[1],
              (*quad.minimizer)[0], (*quad.minimizer)[1]);
  return 0;
}
