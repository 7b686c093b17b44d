#pragma once

// Derivative-free optimizers: golden-section search for concave 1-D profiles
// and Nelder-Mead for the 2-D contrast surfaces.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace spatnet::detail {

struct ScalarMax {
  double x;
  double fx;
};

// Maximizes a unimodal f on [lo, hi]; ~1e-12 relative bracket after 64 cuts.
template <typename Fn>
ScalarMax golden_section_max(Fn&& f, double lo, double hi, int iterations = 64) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iterations; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? ScalarMax{x1, f1} : ScalarMax{x2, f2};
}

struct SimplexResult {
  std::vector<double> x;
  double fx = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Standard Nelder-Mead minimization (reflection 1, expansion 2, contraction
// 0.5, shrink 0.5). Returns the best vertex ever seen, so the result never
// exceeds f(start).
inline SimplexResult nelder_mead_min(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> start, double step, std::size_t max_iterations = 200,
    double f_tolerance = 1e-10) {
  const std::size_t dim = start.size();
  std::vector<std::vector<double>> xs(dim + 1, start);
  for (std::size_t i = 0; i < dim; ++i) xs[i + 1][i] += step;
  std::vector<double> fs(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) fs[i] = f(xs[i]);

  SimplexResult result;
  result.x = start;
  result.fx = fs[0];
  auto record = [&](const std::vector<double>& x, double fx) {
    if (fx < result.fx) {
      result.fx = fx;
      result.x = x;
    }
  };
  for (std::size_t i = 0; i <= dim; ++i) record(xs[i], fs[i]);

  std::vector<std::size_t> order(dim + 1);
  for (; result.iterations < max_iterations; ++result.iterations) {
    for (std::size_t i = 0; i <= dim; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    const std::size_t best = order[0], worst = order[dim];
    if (std::abs(fs[worst] - fs[best]) <=
        f_tolerance * (std::abs(fs[best]) + f_tolerance)) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += xs[i][d];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    auto blend = [&](double t) {
      std::vector<double> x(dim);
      for (std::size_t d = 0; d < dim; ++d)
        x[d] = centroid[d] + t * (xs[worst][d] - centroid[d]);
      return x;
    };

    std::vector<double> reflected = blend(-1.0);
    const double f_reflected = f(reflected);
    record(reflected, f_reflected);
    if (f_reflected < fs[order[0]]) {
      std::vector<double> expanded = blend(-2.0);
      const double f_expanded = f(expanded);
      record(expanded, f_expanded);
      if (f_expanded < f_reflected) {
        xs[worst] = std::move(expanded);
        fs[worst] = f_expanded;
      } else {
        xs[worst] = std::move(reflected);
        fs[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < fs[order[dim - 1]]) {
      xs[worst] = std::move(reflected);
      fs[worst] = f_reflected;
      continue;
    }
    std::vector<double> contracted =
        blend(f_reflected < fs[worst] ? -0.5 : 0.5);
    const double f_contracted = f(contracted);
    record(contracted, f_contracted);
    if (f_contracted < std::min(f_reflected, fs[worst])) {
      xs[worst] = std::move(contracted);
      fs[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i <= dim; ++i) {  // shrink toward the best vertex
      if (i == best) continue;
      for (std::size_t d = 0; d < dim; ++d)
        xs[i][d] = xs[best][d] + 0.5 * (xs[i][d] - xs[best][d]);
      fs[i] = f(xs[i]);
      record(xs[i], fs[i]);
    }
  }
  return result;
}

}  // namespace spatnet::detail
