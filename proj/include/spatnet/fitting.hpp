#pragma once

// Parameter estimation: maximum (pseudo)likelihood for Poisson and Gibbs
// models via the Berman-Turner quadrature device, irregular-parameter profile
// search, and minimum contrast on the K function for cluster models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <variant>
#include <vector>

#include "spatnet/detail/optimize.hpp"
#include "spatnet/geometry.hpp"
#include "spatnet/models.hpp"
#include "spatnet/process_model.hpp"
#include "spatnet/rng.hpp"
#include "spatnet/summaries.hpp"

namespace spatnet {

struct FitDiagnostics {
  std::size_t iterations = 0;
  bool converged = false;
  bool clamped = false;  // Strauss gamma pulled back to 1
};

// One profile-search candidate. sat is 0 for families without saturation;
// infeasible candidates (hardcore radius below an observed spacing) carry
// objective = -inf.
struct ProfileEntry {
  double r = 0.0;
  double sat = 0.0;
  double objective = -std::numeric_limits<double>::infinity();
  bool feasible = false;
};

struct FitResult {
  ProcessModel model;
  double objective = 0.0;  // maximized log (pseudo)likelihood, or contrast
  FitDiagnostics diagnostics;
  std::vector<ProfileEntry> profile;  // empty unless a profile search ran
};

inline FitResult fit_poisson(const PointPattern& pattern) {
  if (pattern.size() == 0)
    throw std::invalid_argument("fit_poisson: empty pattern");
  const double n = static_cast<double>(pattern.size());
  const double lambda = n / pattern.window().area();
  FitResult result{PoissonProcess{lambda}, n * std::log(lambda) - n, {}, {}};
  result.diagnostics.converged = true;
  return result;
}

namespace detail {

// Berman-Turner quadrature: data points plus one dummy point per cell of a
// stratified grid, with counting weights (cell area over points in the cell).
// The dummy positions use a fixed internal seed so fits are a pure function
// of the pattern.
struct Quadrature {
  std::vector<Point> nodes;  // data nodes first
  std::vector<double> weights;
  std::size_t n_data = 0;
};

inline Quadrature build_quadrature(const PointPattern& pattern,
                                   int grid = 64) {
  const Window& w = pattern.window();
  const double cw = w.width() / grid;
  const double ch = w.height() / grid;
  const std::size_t n_cells = static_cast<std::size_t>(grid) * grid;

  Quadrature q;
  q.n_data = pattern.size();
  q.nodes = pattern.points();
  q.nodes.reserve(q.n_data + n_cells);

  Rng rng = Rng::derived(0x51ab5eedULL, "quadrature", 0);
  for (int iy = 0; iy < grid; ++iy)
    for (int ix = 0; ix < grid; ++ix)
      q.nodes.push_back({w.x_min() + (ix + rng.uniform()) * cw,
                         w.y_min() + (iy + rng.uniform()) * ch});

  auto cell_of = [&](Point p) {
    int ix = std::clamp(static_cast<int>((p.x - w.x_min()) / cw), 0, grid - 1);
    int iy = std::clamp(static_cast<int>((p.y - w.y_min()) / ch), 0, grid - 1);
    return static_cast<std::size_t>(iy) * grid + ix;
  };
  std::vector<int> occupancy(n_cells, 0);
  for (const Point& p : q.nodes) ++occupancy[cell_of(p)];
  q.weights.reserve(q.nodes.size());
  const double cell_area = cw * ch;
  for (const Point& p : q.nodes)
    q.weights.push_back(cell_area / occupancy[cell_of(p)]);
  return q;
}

// Static cell grid over the data points, for radius queries from arbitrary
// locations. Cell side >= r, so a 3x3 block covers the disc.
class NeighbourGrid {
 public:
  NeighbourGrid(const Window& window, const std::vector<Point>& pts, double r)
      : win_(window), pts_(pts), r2_(r * r) {
    nx_ = std::clamp(static_cast<int>(std::floor(window.width() /
                                                 std::max(r, 1e-12))),
                     1, 128);
    ny_ = std::clamp(static_cast<int>(std::floor(window.height() /
                                                 std::max(r, 1e-12))),
                     1, 128);
    inv_cx_ = nx_ / window.width();
    inv_cy_ = ny_ / window.height();
    cells_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (std::size_t i = 0; i < pts.size(); ++i)
      cells_[cell_of(pts[i])].push_back(i);
  }

  template <typename Fn>
  void for_each_within(Point u, Fn&& fn) const {
    int ix = std::clamp(static_cast<int>((u.x - win_.x_min()) * inv_cx_), 0,
                        nx_ - 1);
    int iy = std::clamp(static_cast<int>((u.y - win_.y_min()) * inv_cy_), 0,
                        ny_ - 1);
    for (int cy = std::max(0, iy - 1); cy <= std::min(ny_ - 1, iy + 1); ++cy)
      for (int cx = std::max(0, ix - 1); cx <= std::min(nx_ - 1, ix + 1); ++cx)
        for (std::size_t id : cells_[static_cast<std::size_t>(cy) * nx_ + cx])
          if (squared_distance(pts_[id], u) <= r2_) fn(id);
  }

 private:
  std::size_t cell_of(Point p) const {
    int ix = std::clamp(static_cast<int>((p.x - win_.x_min()) * inv_cx_), 0,
                        nx_ - 1);
    int iy = std::clamp(static_cast<int>((p.y - win_.y_min()) * inv_cy_), 0,
                        ny_ - 1);
    return static_cast<std::size_t>(iy) * nx_ + ix;
  }

  const Window& win_;
  const std::vector<Point>& pts_;
  double r2_;
  int nx_, ny_;
  double inv_cx_, inv_cy_;
  std::vector<std::vector<std::size_t>> cells_;
};

// Interaction exponents T_j at every quadrature node: the conditional
// intensity at node j is beta * gamma^T_j (data nodes are evaluated with
// themselves removed, per the pseudolikelihood convention).
struct NodeExponents {
  std::vector<double> t;   // per node
  double data_sum = 0.0;   // sum over data nodes
  double max_t = 0.0;
};

inline NodeExponents interaction_exponents(const PointPattern& pattern,
                                           const Quadrature& quad, double r,
                                           double sat, bool geyer) {
  const auto& data = pattern.points();
  const NeighbourGrid grid(pattern.window(), data, r);

  // Neighbour counts of the data points among themselves.
  std::vector<int> t_data(data.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    int t = -1;  // the query point finds itself
    grid.for_each_within(data[i], [&](std::size_t) { ++t; });
    t_data[i] = t;
  }

  NodeExponents out;
  out.t.resize(quad.nodes.size());
  for (std::size_t j = 0; j < quad.nodes.size(); ++j) {
    const bool is_data = j < quad.n_data;
    double exponent = 0.0;
    if (!geyer) {
      int t = is_data ? -1 : 0;
      grid.for_each_within(quad.nodes[j], [&](std::size_t) { ++t; });
      exponent = t;
    } else {
      // Change in total saturated neighbour count if the node were added
      // (dummy) or was added last (data).
      int t_self = is_data ? -1 : 0;
      double gain = 0.0;
      grid.for_each_within(quad.nodes[j], [&](std::size_t k) {
        ++t_self;
        if (is_data && k == j) return;
        const int base = is_data ? t_data[k] - 1 : t_data[k];
        gain += saturated(base + 1, sat) - saturated(base, sat);
      });
      exponent = saturated(t_self, sat) + gain;
    }
    out.t[j] = exponent;
    if (is_data) out.data_sum += exponent;
    out.max_t = std::max(out.max_t, exponent);
  }
  return out;
}

// log sum_j w_j gamma^T_j, grouped by exponent and evaluated in log space so
// large Geyer exponents cannot overflow.
class LogIntegralTerm {
 public:
  LogIntegralTerm(const NodeExponents& exps, const std::vector<double>& w) {
    std::map<double, double> grouped;
    for (std::size_t j = 0; j < exps.t.size(); ++j)
      grouped[exps.t[j]] += w[j];
    for (const auto& [t, weight] : grouped)
      terms_.push_back({t, std::log(weight)});
  }

  double operator()(double log_gamma) const {
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& [t, log_w] : terms_)
      peak = std::max(peak, log_w + t * log_gamma);
    double acc = 0.0;
    for (const auto& [t, log_w] : terms_)
      acc += std::exp(log_w + t * log_gamma - peak);
    return peak + std::log(acc);
  }

 private:
  std::vector<std::pair<double, double>> terms_;  // (exponent, log weight)
};

struct GibbsFit {
  double beta = 0.0;
  double gamma = 1.0;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool clamped = false;
};

// Profile log pseudolikelihood over gamma with beta concentrated out:
//   G(log gamma) = n log beta_hat + S log gamma - n,
//   beta_hat = n / sum_j w_j gamma^T_j.
inline GibbsFit fit_interaction(const PointPattern& pattern,
                                const Quadrature& quad,
                                const NodeExponents& exps, double lo_gamma,
                                double hi_gamma, bool clamp_at_one) {
  const double n = static_cast<double>(quad.n_data);
  GibbsFit fit;
  if (exps.max_t == 0.0) {
    // No node interacts at this radius; gamma drops out of the density.
    double total_weight = 0.0;
    for (double w : quad.weights) total_weight += w;
    fit.beta = n / total_weight;
    fit.gamma = 1.0;
    fit.objective = n * std::log(fit.beta) - n;
    return fit;
  }

  const LogIntegralTerm integral(exps, quad.weights);
  const auto profile = [&](double log_gamma) {
    return n * (std::log(n) - integral(log_gamma)) + exps.data_sum * log_gamma -
           n;
  };

  if (clamp_at_one) {
    // Slope of the profile at gamma = 1; positive means the unconstrained
    // maximum sits above 1, which Strauss forbids.
    const double h = 1e-6;
    if (profile(0.0) - profile(-h) > 0.0) {
      fit.clamped = true;
      fit.gamma = 1.0;
      fit.beta = n / std::exp(integral(0.0));
      fit.objective = profile(0.0);
      return fit;
    }
  }

  constexpr int iterations = 72;
  const auto best =
      golden_section_max(profile, std::log(lo_gamma), std::log(hi_gamma),
                         iterations);
  fit.gamma = std::exp(best.x);
  fit.beta = n / std::exp(integral(best.x));
  fit.objective = best.fx;
  fit.iterations = iterations;
  return fit;
}

inline bool hardcore_feasible(const PointPattern& pattern, double r) {
  return close_pair_count(pattern, r) == 0;
}

inline GibbsFit fit_hardcore_at(const PointPattern& pattern,
                                const Quadrature& quad, double r) {
  // Conditional intensity is beta on the free space (no data point within r)
  // and 0 elsewhere, so beta_hat = n / (quadrature mass of the free space).
  const NeighbourGrid grid(pattern.window(), pattern.points(), r);
  double free_mass = 0.0;
  for (std::size_t j = 0; j < quad.nodes.size(); ++j) {
    int t = j < quad.n_data ? -1 : 0;
    grid.for_each_within(quad.nodes[j], [&](std::size_t) { ++t; });
    if (t == 0) free_mass += quad.weights[j];
  }
  const double n = static_cast<double>(quad.n_data);
  GibbsFit fit;
  fit.beta = n / free_mass;
  fit.gamma = 1.0;
  fit.objective = n * std::log(fit.beta) - n;
  return fit;
}

}  // namespace detail

// Maximum pseudolikelihood fit of the activity/interaction parameters with
// the interaction geometry (r, sat) taken from the template model.
inline FitResult fit_gibbs_pseudolikelihood(const PointPattern& pattern,
                                            const ProcessModel& shape) {
  validate(shape);
  if (!is_gibbs(shape))
    throw std::invalid_argument("fit_gibbs_pseudolikelihood: not a Gibbs model");
  if (pattern.size() < 2)
    throw std::invalid_argument(
        "fit_gibbs_pseudolikelihood: need at least two points");

  const detail::Quadrature quad = detail::build_quadrature(pattern);
  FitResult result;
  result.diagnostics.converged = true;

  if (const auto* h = std::get_if<HardcoreProcess>(&shape)) {
    if (!detail::hardcore_feasible(pattern, h->r))
      throw std::invalid_argument(
          "fit_gibbs_pseudolikelihood: hardcore radius infeasible, pattern "
          "has a closer pair");
    const detail::GibbsFit fit = detail::fit_hardcore_at(pattern, quad, h->r);
    result.model = HardcoreProcess{fit.beta, h->r};
    result.objective = fit.objective;
    return result;
  }
  if (const auto* s = std::get_if<StraussProcess>(&shape)) {
    const auto exps =
        detail::interaction_exponents(pattern, quad, s->r, 0.0, false);
    const detail::GibbsFit fit =
        detail::fit_interaction(pattern, quad, exps, 1e-6, 1.0, true);
    result.model = StraussProcess{fit.beta, fit.gamma, s->r};
    result.objective = fit.objective;
    result.diagnostics.iterations = fit.iterations;
    result.diagnostics.clamped = fit.clamped;
    return result;
  }
  const auto& g = std::get<GeyerProcess>(shape);
  const auto exps =
      detail::interaction_exponents(pattern, quad, g.r, g.sat, true);
  const detail::GibbsFit fit =
      detail::fit_interaction(pattern, quad, exps, 1e-4, 1e4, false);
  result.model = GeyerProcess{fit.beta, fit.gamma, g.r, g.sat};
  result.objective = fit.objective;
  result.diagnostics.iterations = fit.iterations;
  return result;
}

namespace detail {

// Irregular-parameter candidates: 16 radii spanning half to four times the
// mean nearest-neighbour distance.
inline std::vector<double> profile_radii(const PointPattern& pattern) {
  const double mean_nn = nn_mean_distance(pattern);
  std::vector<double> radii(16);
  const double lo = mean_nn / 2.0, hi = 4.0 * mean_nn;
  for (std::size_t i = 0; i < radii.size(); ++i)
    radii[i] = lo + (hi - lo) * static_cast<double>(i) / 15.0;
  return radii;
}

}  // namespace detail

// Profile pseudolikelihood over the irregular parameters: r for hardcore and
// Strauss, (r, sat) for Geyer. Ties prefer the smaller radius, then the
// smaller saturation.
inline FitResult fit_gibbs_profile(const PointPattern& pattern,
                                   ModelKind family) {
  if (pattern.size() < 2)
    throw std::invalid_argument("fit_gibbs_profile: need at least two points");
  if (family != ModelKind::hardcore && family != ModelKind::strauss &&
      family != ModelKind::geyer)
    throw std::invalid_argument("fit_gibbs_profile: not a Gibbs family");

  std::vector<double> radii = detail::profile_radii(pattern);
  if (family == ModelKind::hardcore) {
    // The profile grid often sits above the smallest observed spacing, where
    // the hardcore likelihood vanishes; add the largest always-feasible
    // radius just under that spacing.
    const double d_min = min_interpoint_distance(pattern);
    const double n = static_cast<double>(pattern.size());
    const double feasible_r = d_min * n / (n + 1.0);
    if (feasible_r > 0.0) radii.push_back(feasible_r);
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  }
  const std::vector<double> sats =
      family == ModelKind::geyer ? std::vector<double>{1, 2, 3, 4, 5}
                                 : std::vector<double>{0};

  const detail::Quadrature quad = detail::build_quadrature(pattern);
  FitResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  bool found = false;

  for (double r : radii) {
    for (double sat : sats) {
      ProfileEntry entry{r, sat,
                         -std::numeric_limits<double>::infinity(), false};
      detail::GibbsFit fit;
      bool ok = true;
      if (family == ModelKind::hardcore) {
        if (detail::hardcore_feasible(pattern, r))
          fit = detail::fit_hardcore_at(pattern, quad, r);
        else
          ok = false;
      } else if (family == ModelKind::strauss) {
        const auto exps =
            detail::interaction_exponents(pattern, quad, r, 0.0, false);
        fit = detail::fit_interaction(pattern, quad, exps, 1e-6, 1.0, true);
      } else {
        const auto exps =
            detail::interaction_exponents(pattern, quad, r, sat, true);
        fit = detail::fit_interaction(pattern, quad, exps, 1e-4, 1e4, false);
      }
      if (ok) {
        entry.objective = fit.objective;
        entry.feasible = true;
        if (!found || fit.objective > best.objective) {
          found = true;
          best.objective = fit.objective;
          best.diagnostics.iterations = fit.iterations;
          best.diagnostics.converged = true;
          best.diagnostics.clamped = fit.clamped;
          if (family == ModelKind::hardcore)
            best.model = HardcoreProcess{fit.beta, r};
          else if (family == ModelKind::strauss)
            best.model = StraussProcess{fit.beta, fit.gamma, r};
          else
            best.model =
                GeyerProcess{fit.beta, fit.gamma, r, static_cast<int>(sat)};
        }
      }
      best.profile.push_back(entry);
    }
  }
  if (!found)
    throw std::runtime_error(
        "fit_gibbs_profile: no feasible candidate radius");
  return best;
}

struct ContrastConfig {
  double q = 0.25;              // contrast exponent on K
  std::size_t grid_size = 512;  // K grid resolution
  std::size_t max_iterations = 200;
};

// Minimum contrast on the K function for the cluster models: minimizes
// int (Khat^q - Ktheta^q)^2 dr over (log parent intensity, log cluster scale),
// with the mean offspring count tied down by the observed intensity.
inline FitResult fit_cluster_contrast(const PointPattern& pattern,
                                      ModelKind family,
                                      const ContrastConfig& cfg = {}) {
  if (family != ModelKind::matern && family != ModelKind::thomas)
    throw std::invalid_argument("fit_cluster_contrast: not a cluster family");
  if (pattern.size() < 10)
    throw std::invalid_argument(
        "fit_cluster_contrast: need at least 10 points");

  const Window& w = pattern.window();
  const double lambda_hat = static_cast<double>(pattern.size()) / w.area();
  const DistanceGrid grid = DistanceGrid::default_for(w, cfg.grid_size);
  const SummaryCurve k_hat = k_function(pattern, grid);
  const auto& r = grid.values();
  const double step = r[1] - r[0];

  std::vector<double> k_hat_q(r.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    k_hat_q[i] = std::pow(k_hat.values[i], cfg.q);

  // Moment starts: parent intensity a twentieth of the total, cluster scale
  // from the peak of the L excess.
  double peak_r = 4.0 * step, peak_v = 0.0;
  for (std::size_t i = 1; i < r.size(); ++i) {
    const double v = std::sqrt(k_hat.values[i] / pi) - r[i];
    if (v > peak_v) {
      peak_v = v;
      peak_r = r[i];
    }
  }
  const double scale_lo = step / 4.0, scale_hi = grid.max();
  const double lambda_p_lo = lambda_hat / 1e4, lambda_p_hi = lambda_hat;
  const double scale0 = std::clamp(
      family == ModelKind::thomas ? peak_r / 2.0 : peak_r, scale_lo, scale_hi);
  const double lambda_p0 =
      std::clamp(lambda_hat / 20.0, lambda_p_lo, lambda_p_hi);

  const auto theoretical_q = [&](double lambda_p, double scale,
                                 std::vector<double>& out) {
    ProcessModel m;
    if (family == ModelKind::matern)
      m = MaternProcess{lambda_p, lambda_hat / lambda_p, scale};
    else
      m = ThomasProcess{lambda_p, lambda_hat / lambda_p, scale};
    const SummaryCurve k_theory = scaled_theoretical_k(m, grid);
    for (std::size_t i = 0; i < r.size(); ++i)
      out[i] = std::pow(k_theory.values[i], cfg.q);
  };

  std::vector<double> scratch(r.size());
  const auto contrast = [&](const std::vector<double>& u) {
    const double lp = std::clamp(std::exp(u[0]), lambda_p_lo, lambda_p_hi);
    const double sc = std::clamp(std::exp(u[1]), scale_lo, scale_hi);
    double penalty = 0.0;  // keeps the simplex near the box
    const double d0 = u[0] - std::log(lp), d1 = u[1] - std::log(sc);
    penalty = 100.0 * (d0 * d0 + d1 * d1);
    theoretical_q(lp, sc, scratch);
    double acc = 0.0;  // trapezoid over [step, r_max]
    for (std::size_t i = 2; i < r.size(); ++i) {
      const double fa = (k_hat_q[i - 1] - scratch[i - 1]);
      const double fb = (k_hat_q[i] - scratch[i]);
      acc += 0.5 * (fa * fa + fb * fb) * (r[i] - r[i - 1]);
    }
    return acc + penalty;
  };

  const auto opt = detail::nelder_mead_min(
      contrast, {std::log(lambda_p0), std::log(scale0)}, 0.4,
      cfg.max_iterations);

  const double lambda_p =
      std::clamp(std::exp(opt.x[0]), lambda_p_lo, lambda_p_hi);
  const double scale = std::clamp(std::exp(opt.x[1]), scale_lo, scale_hi);
  FitResult result;
  if (family == ModelKind::matern)
    result.model = MaternProcess{lambda_p, lambda_hat / lambda_p, scale};
  else
    result.model = ThomasProcess{lambda_p, lambda_hat / lambda_p, scale};
  result.objective = opt.fx;
  result.diagnostics.iterations = opt.iterations;
  result.diagnostics.converged = opt.converged;
  return result;
}

// Fits the family's parameters with its default method: intensity for
// Poisson, profile pseudolikelihood for the Gibbs models, minimum contrast
// for the cluster models.
inline FitResult fit_model(const PointPattern& pattern, ModelKind family,
                           const ContrastConfig& contrast_cfg = {}) {
  switch (family) {
    case ModelKind::poisson:
      return fit_poisson(pattern);
    case ModelKind::hardcore:
    case ModelKind::strauss:
    case ModelKind::geyer:
      return fit_gibbs_profile(pattern, family);
    case ModelKind::matern:
    case ModelKind::thomas:
      return fit_cluster_contrast(pattern, family, contrast_cfg);
  }
  throw std::invalid_argument("fit_model: unknown family");
}

}  // namespace spatnet
