#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "lcslab/common.hpp"

namespace lcslab::quad {

// 16-point Gauss-Legendre rule on [-1, 1], stored as the positive half.
struct GaussLegendre16 {
  static constexpr std::array<double, 8> nodes = {
      0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
      0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
  static constexpr std::array<double, 8> weights = {
      0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
      0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
};

inline double integrate_1d(const std::function<double(double)>& f, double a, double b) {
  LCSLAB_REQUIRE(a < b, "integrate_1d: empty interval");
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    const double x = half * GaussLegendre16::nodes[i];
    acc += GaussLegendre16::weights[i] * (f(mid + x) + f(mid - x));
  }
  return half * acc;
}

// Tensor rule summed over the panels of one horizontal slab (row `i` of an
// m x m equal-panel grid). Kept separate so composite integration can farm
// rows out to threads and still merge partial sums in row order.
template <class F>
double integrate_2d_panel_row(F&& f, double ax, double bx, double ay, double by, int panels,
                              int row) {
  const double wx = (bx - ax) / panels, wy = (by - ay) / panels;
  const double my = ay + (row + 0.5) * wy, hy = 0.5 * wy;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mx = ax + (p + 0.5) * wx, hx = 0.5 * wx;
    for (std::size_t i = 0; i < 8; ++i) {
      const double dx = hx * GaussLegendre16::nodes[i];
      for (std::size_t j = 0; j < 8; ++j) {
        const double dy = hy * GaussLegendre16::nodes[j];
        acc += GaussLegendre16::weights[i] * GaussLegendre16::weights[j] *
               (f(mx + dx, my + dy) + f(mx + dx, my - dy) + f(mx - dx, my + dy) +
                f(mx - dx, my - dy));
      }
    }
  }
  return 0.25 * wx * wy * acc;
}

// Composite m x m panel rule. Row partial sums are reduced in index order, so
// the result is bitwise independent of the thread count.
template <class F>
double integrate_2d_panels(F&& f, double ax, double bx, double ay, double by, int panels) {
  LCSLAB_REQUIRE(ax < bx && ay < by, "integrate_2d_panels: empty rectangle");
  LCSLAB_REQUIRE(panels >= 1, "integrate_2d_panels: need at least one panel");
  std::vector<double> rows(static_cast<std::size_t>(panels), 0.0);
  parallel_for(panels, [&](std::int64_t r) {
    rows[static_cast<std::size_t>(r)] =
        integrate_2d_panel_row(f, ax, bx, ay, by, panels, static_cast<int>(r));
  });
  double acc = 0.0;
  for (double v : rows) acc += v;
  return acc;
}

// Tensor-product rule over an axis-aligned rectangle; exact for polynomials
// up to degree 31 in each variable.
inline double integrate_2d(const std::function<double(double, double)>& f, double ax, double bx,
                           double ay, double by) {
  LCSLAB_REQUIRE(ax < bx && ay < by, "integrate_2d: empty rectangle");
  const double mx = 0.5 * (ax + bx), hx = 0.5 * (bx - ax);
  const double my = 0.5 * (ay + by), hy = 0.5 * (by - ay);
  double acc = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    const double dx = hx * GaussLegendre16::nodes[i];
    for (std::size_t j = 0; j < 8; ++j) {
      const double dy = hy * GaussLegendre16::nodes[j];
      acc += GaussLegendre16::weights[i] * GaussLegendre16::weights[j] *
             (f(mx + dx, my + dy) + f(mx + dx, my - dy) + f(mx - dx, my + dy) +
              f(mx - dx, my - dy));
    }
  }
  return hx * hy * acc;
}

}  // namespace lcslab::quad
