#pragma once

// Second-order summary statistics: Ripley's K and Besag's L with translation
// edge correction, close-pair counts, and the closed-form K curves of the
// models that have one.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "spatnet/geometry.hpp"
#include "spatnet/process_model.hpp"

namespace spatnet {

class DistanceGrid {
 public:
  explicit DistanceGrid(std::vector<double> r_values)
      : r_(std::move(r_values)) {
    if (r_.empty()) throw std::invalid_argument("DistanceGrid: empty");
    if (r_.front() != 0.0)
      throw std::invalid_argument("DistanceGrid: must start at 0");
    for (std::size_t i = 1; i < r_.size(); ++i)
      if (!(r_[i] > r_[i - 1]) || !std::isfinite(r_[i]))
        throw std::invalid_argument("DistanceGrid: must be strictly increasing");
  }

  static DistanceGrid linspace(double r_max, std::size_t count = 512) {
    if (!(r_max > 0.0) || count < 2)
      throw std::invalid_argument("DistanceGrid: need r_max > 0 and count >= 2");
    std::vector<double> r(count);
    for (std::size_t i = 0; i < count; ++i)
      r[i] = r_max * static_cast<double>(i) / static_cast<double>(count - 1);
    return DistanceGrid(std::move(r));
  }

  // Default scale: quarter of the shorter window side.
  static DistanceGrid default_for(const Window& w, std::size_t count = 512) {
    return linspace(w.shorter_side() / 4.0, count);
  }

  const std::vector<double>& values() const { return r_; }
  std::size_t size() const { return r_.size(); }
  double max() const { return r_.back(); }

 private:
  std::vector<double> r_;
};

// A function estimate sampled on a grid (distance in km, or threshold in dB
// for coverage curves).
struct SummaryCurve {
  std::vector<double> grid;
  std::vector<double> values;
};

// Translation-corrected K estimator,
//   K(r) = ||W|| / (n(n-1)) * sum_{i != j} w_ij 1(d_ij <= r),
// with w_ij = ||W|| / ||W intersect W shifted by z_j - z_i||. The grid must
// not reach past half the shorter window side, where the correction blows up.
inline SummaryCurve k_function(const PointPattern& pattern,
                               const DistanceGrid& grid) {
  const std::size_t n = pattern.size();
  if (n < 2)
    throw std::invalid_argument("k_function: need at least two points");
  const Window& w = pattern.window();
  if (grid.max() > w.shorter_side() / 2.0 * (1.0 + 1e-12))
    throw std::invalid_argument(
        "k_function: grid exceeds half the shorter window side");

  const double a = w.width();
  const double b = w.height();
  const double area = w.area();
  const double r_max = grid.max();
  const auto& r = grid.values();

  // Points sorted by x so the inner loop can stop once dx > r_max.
  std::vector<Point> pts = pattern.points();
  std::sort(pts.begin(), pts.end(),
            [](Point p, Point q) { return p.x < q.x; });

  std::vector<double> bucket(grid.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = pts[j].x - pts[i].x;
      if (dx > r_max) break;
      const double dy = std::abs(pts[j].y - pts[i].y);
      if (dy > r_max) continue;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d > r_max) continue;
      const double overlap = (a - dx) * (b - dy);
      const double weight = 2.0 * area / overlap;  // both ordered pairs
      const auto it = std::lower_bound(r.begin(), r.end(), d);
      bucket[static_cast<std::size_t>(it - r.begin())] += weight;
    }
  }

  SummaryCurve curve{r, std::vector<double>(grid.size(), 0.0)};
  const double scale = area / (static_cast<double>(n) * static_cast<double>(n - 1));
  double acc = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    acc += bucket[k];
    curve.values[k] = scale * acc;
  }
  return curve;
}

inline SummaryCurve l_function(const PointPattern& pattern,
                               const DistanceGrid& grid) {
  SummaryCurve curve = k_function(pattern, grid);
  for (double& v : curve.values) v = std::sqrt(v / pi);
  return curve;
}

// Number of unordered pairs at distance <= r; the p(z) of the Gibbs
// densities.
inline long close_pair_count(const PointPattern& pattern, double r) {
  if (r < 0.0) throw std::invalid_argument("close_pair_count: r must be >= 0");
  const auto& pts = pattern.points();
  const double r2 = r * r;
  long count = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (squared_distance(pts[i], pts[j]) <= r2) ++count;
  return count;
}

namespace detail {

// CDF of the distance between two independent uniform points in a disc of
// radius R, evaluated at z = d / (2R).
inline double disc_pair_distance_cdf(double z) {
  if (z <= 0.0) return 0.0;
  if (z >= 1.0) return 1.0;
  const double s = std::sqrt(1.0 - z * z);
  return (2.0 / pi) *
         (4.0 * z * z * std::acos(z) + std::asin(z) - z * (1.0 + 2.0 * z * z) * s);
}

}  // namespace detail

// Closed-form K of the models that admit one. Gibbs models have none; their
// envelope expectation comes from the simulation mean instead.
inline SummaryCurve scaled_theoretical_k(const ProcessModel& model,
                                         const DistanceGrid& grid) {
  validate(model);
  SummaryCurve curve{grid.values(), std::vector<double>(grid.size(), 0.0)};
  const auto& r = grid.values();

  if (const auto* p = std::get_if<PoissonProcess>(&model)) {
    (void)p;
    for (std::size_t k = 0; k < r.size(); ++k) curve.values[k] = pi * r[k] * r[k];
    return curve;
  }
  if (const auto* m = std::get_if<MaternProcess>(&model)) {
    for (std::size_t k = 0; k < r.size(); ++k)
      curve.values[k] = pi * r[k] * r[k] +
                        detail::disc_pair_distance_cdf(r[k] / (2.0 * m->radius)) /
                            m->lambda_p;
    return curve;
  }
  if (const auto* t = std::get_if<ThomasProcess>(&model)) {
    for (std::size_t k = 0; k < r.size(); ++k)
      curve.values[k] =
          pi * r[k] * r[k] +
          (1.0 - std::exp(-r[k] * r[k] / (4.0 * t->sigma * t->sigma))) /
              t->lambda_p;
    return curve;
  }
  throw std::invalid_argument(
      "scaled_theoretical_k: no closed form; use simulation mean");
}

}  // namespace spatnet
