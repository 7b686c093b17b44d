#pragma once

// Model densities, Papangelou conditional intensities, and exact or MCMC
// samplers for the six processes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "spatnet/geometry.hpp"
#include "spatnet/process_model.hpp"
#include "spatnet/rng.hpp"
#include "spatnet/summaries.hpp"

namespace spatnet {

struct McmcConfig {
  std::uint64_t n_steps = 100000;
  std::uint64_t burn_in = 100000;  // drawn before the returned state is read
  double p_birth = 0.35;
  double p_death = 0.35;
  double p_shift = 0.30;
  std::uint64_t seed = 0;

  void validate() const {
    if (p_birth < 0.0 || p_death < 0.0 || p_shift < 0.0 ||
        std::abs(p_birth + p_death + p_shift - 1.0) > 1e-9)
      throw std::invalid_argument(
          "McmcConfig: move probabilities must be >= 0 and sum to 1");
  }
};

namespace detail {

inline int neighbour_count(const std::vector<Point>& pts, Point u, double r,
                           std::size_t skip = static_cast<std::size_t>(-1)) {
  const double r2 = r * r;
  int t = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i == skip) continue;
    if (squared_distance(pts[i], u) <= r2) ++t;
  }
  return t;
}

inline double saturated(int t, double sat) {
  return std::min(static_cast<double>(t), sat);
}

}  // namespace detail

// Unnormalized log density of a Gibbs model with respect to the unit-rate
// Poisson process; -inf marks a forbidden configuration.
inline double log_density_unnormalized(const ProcessModel& model,
                                       const PointPattern& pattern) {
  validate(model);
  const double n = static_cast<double>(pattern.size());
  if (const auto* h = std::get_if<HardcoreProcess>(&model)) {
    if (close_pair_count(pattern, h->r) > 0)
      return -std::numeric_limits<double>::infinity();
    return n * std::log(h->beta);
  }
  if (const auto* s = std::get_if<StraussProcess>(&model)) {
    const long p = close_pair_count(pattern, s->r);
    if (s->gamma == 0.0)
      return p > 0 ? -std::numeric_limits<double>::infinity()
                   : n * std::log(s->beta);
    return n * std::log(s->beta) + static_cast<double>(p) * std::log(s->gamma);
  }
  if (const auto* g = std::get_if<GeyerProcess>(&model)) {
    const auto& pts = pattern.points();
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      total += detail::saturated(
          detail::neighbour_count(pts, pts[i], g->r, i), g->sat);
    return n * std::log(g->beta) + total * std::log(g->gamma);
  }
  throw std::invalid_argument(
      "log_density_unnormalized: defined only for Gibbs models");
}

// Papangelou conditional intensity lambda(u; z) = f(z + u) / f(z) for a point
// u not in the pattern.
inline double papangelou(const ProcessModel& model, const PointPattern& pattern,
                         Point u) {
  validate(model);
  if (!pattern.window().contains(u))
    throw std::invalid_argument("papangelou: point outside window");
  const auto& pts = pattern.points();
  if (const auto* h = std::get_if<HardcoreProcess>(&model))
    return detail::neighbour_count(pts, u, h->r) == 0 ? h->beta : 0.0;
  if (const auto* s = std::get_if<StraussProcess>(&model)) {
    const int t = detail::neighbour_count(pts, u, s->r);
    if (s->gamma == 0.0) return t == 0 ? s->beta : 0.0;
    return s->beta * std::pow(s->gamma, t);
  }
  if (const auto* g = std::get_if<GeyerProcess>(&model)) {
    // Exponent of gamma: the increase in total saturated neighbour count when
    // u joins, i.e. u's own clipped count plus the clipped gains of its
    // neighbours.
    double exponent = 0.0;
    int t_u = 0;
    const double r2 = g->r * g->r;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (squared_distance(pts[i], u) > r2) continue;
      ++t_u;
      const int t_i = detail::neighbour_count(pts, pts[i], g->r, i);
      exponent += detail::saturated(t_i + 1, g->sat) -
                  detail::saturated(t_i, g->sat);
    }
    exponent += detail::saturated(t_u, g->sat);
    return g->beta * std::pow(g->gamma, exponent);
  }
  throw std::invalid_argument("papangelou: defined only for Gibbs models");
}

inline PointPattern simulate_poisson(double lambda, const Window& window,
                                     std::uint64_t seed) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("simulate_poisson: lambda must be > 0");
  Rng rng = Rng::derived(seed, "sim.poisson", 0);
  const std::uint64_t n = rng.poisson(lambda * window.area());
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i)
    pts.push_back({rng.uniform(window.x_min(), window.x_max()),
                   rng.uniform(window.y_min(), window.y_max())});
  return PointPattern(window, std::move(pts));
}

namespace detail {

// Mutable cell-grid state for the Gibbs chain: points, their interaction
// neighbour counts t[i], and a uniform grid whose cell side is >= r so a
// 3x3 block covers every interaction disc.
class GibbsState {
 public:
  GibbsState(const Window& window, double r, double gamma, double sat,
             bool hardcore)
      : win_(window), r_(r), r2_(r * r), gamma_(gamma), sat_(sat),
        hardcore_(hardcore) {
    nx_ = grid_cells(window.width(), r);
    ny_ = grid_cells(window.height(), r);
    inv_cx_ = static_cast<double>(nx_) / window.width();
    inv_cy_ = static_cast<double>(ny_) / window.height();
    cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  }

  std::size_t size() const { return pts_.size(); }
  const std::vector<Point>& points() const { return pts_; }
  int t_of(std::size_t i) const { return t_[i]; }

  // Papangelou intensity of adding u to the current state, divided by beta.
  double insertion_weight(Point u) const {
    if (hardcore_) {
      double w = 1.0;
      visit_neighbours(u, [&](std::size_t) { w = 0.0; });
      return w;
    }
    if (sat_ < 0.0) {  // Strauss
      int t = 0;
      visit_neighbours(u, [&](std::size_t) { ++t; });
      if (gamma_ == 0.0) return t == 0 ? 1.0 : 0.0;
      return std::pow(gamma_, t);
    }
    double exponent = 0.0;
    int t_u = 0;
    visit_neighbours(u, [&](std::size_t k) {
      ++t_u;
      exponent += saturated(t_[k] + 1, sat_) - saturated(t_[k], sat_);
    });
    exponent += saturated(t_u, sat_);
    return std::pow(gamma_, exponent);
  }

  void insert(Point u) {
    const std::size_t id = pts_.size();
    pts_.push_back(u);
    t_.push_back(0);
    slot_.push_back({0, 0});
    int t_u = 0;
    visit_neighbours(u, [&](std::size_t k) {
      ++t_u;
      ++t_[k];
    });
    t_[id] = t_u;
    const std::size_t c = cell_of(u);
    slot_[id] = {c, cells_[c].size()};
    cells_[c].push_back(id);
  }

  void remove(std::size_t id) {
    const Point u = pts_[id];
    visit_neighbours(u, [&](std::size_t k) {
      if (k != id) --t_[k];
    });
    detach_from_cell(id);
    const std::size_t last = pts_.size() - 1;
    if (id != last) {
      pts_[id] = pts_[last];
      t_[id] = t_[last];
      slot_[id] = slot_[last];
      cells_[slot_[id].cell][slot_[id].pos] = id;
    }
    pts_.pop_back();
    t_.pop_back();
    slot_.pop_back();
  }

 private:
  struct Slot {
    std::size_t cell;
    std::size_t pos;
  };

  static int grid_cells(double side, double r) {
    int n = static_cast<int>(std::floor(side / std::max(r, 1e-12)));
    return std::clamp(n, 1, 96);
  }

  std::size_t cell_of(Point p) const {
    int ix = static_cast<int>((p.x - win_.x_min()) * inv_cx_);
    int iy = static_cast<int>((p.y - win_.y_min()) * inv_cy_);
    ix = std::clamp(ix, 0, nx_ - 1);
    iy = std::clamp(iy, 0, ny_ - 1);
    return static_cast<std::size_t>(iy) * nx_ + ix;
  }

  void detach_from_cell(std::size_t id) {
    auto& cell = cells_[slot_[id].cell];
    const std::size_t pos = slot_[id].pos;
    if (pos != cell.size() - 1) {
      cell[pos] = cell.back();
      slot_[cell[pos]].pos = pos;
    }
    cell.pop_back();
  }

  template <typename Fn>
  void visit_neighbours(Point u, Fn&& fn) const {
    int ix = static_cast<int>((u.x - win_.x_min()) * inv_cx_);
    int iy = static_cast<int>((u.y - win_.y_min()) * inv_cy_);
    ix = std::clamp(ix, 0, nx_ - 1);
    iy = std::clamp(iy, 0, ny_ - 1);
    for (int cy = std::max(0, iy - 1); cy <= std::min(ny_ - 1, iy + 1); ++cy)
      for (int cx = std::max(0, ix - 1); cx <= std::min(nx_ - 1, ix + 1); ++cx)
        for (std::size_t id : cells_[static_cast<std::size_t>(cy) * nx_ + cx])
          if (squared_distance(pts_[id], u) <= r2_) fn(id);
  }

  Window win_;
  double r_, r2_, gamma_, sat_;
  bool hardcore_;
  int nx_, ny_;
  double inv_cx_, inv_cy_;
  std::vector<Point> pts_;
  std::vector<int> t_;
  std::vector<Slot> slot_;
  std::vector<std::vector<std::size_t>> cells_;
};

struct GibbsParams {
  double beta;
  double r;
  double gamma;  // unused for hardcore
  double sat;    // < 0 flags Strauss, >= 0 Geyer
  bool hardcore;
};

inline GibbsParams gibbs_params(const ProcessModel& model) {
  if (const auto* h = std::get_if<HardcoreProcess>(&model))
    return {h->beta, h->r, 0.0, -1.0, true};
  if (const auto* s = std::get_if<StraussProcess>(&model))
    return {s->beta, s->r, s->gamma, -1.0, false};
  if (const auto* g = std::get_if<GeyerProcess>(&model))
    return {g->beta, g->r, g->gamma, static_cast<double>(g->sat), false};
  throw std::invalid_argument("simulate_gibbs: not a Gibbs model");
}

}  // namespace detail

// Birth-death-shift Metropolis-Hastings targeting the Gibbs density. The
// chain starts from a Poisson(beta) draw thinned to a feasible configuration
// and runs burn_in + n_steps proposals.
inline PointPattern simulate_gibbs(const ProcessModel& model,
                                   const Window& window,
                                   const McmcConfig& cfg) {
  validate(model);
  cfg.validate();
  const detail::GibbsParams par = detail::gibbs_params(model);
  Rng rng = Rng::derived(cfg.seed, "sim.gibbs", 0);

  detail::GibbsState state(window, par.r, par.gamma, par.sat, par.hardcore);
  {
    // Sequential thinning of a Poisson(beta) proposal: keep each point with
    // probability proportional to its insertion weight given those kept so
    // far. Always feasible, and already stationary when the model is Poisson.
    const std::uint64_t n0 = rng.poisson(par.beta * window.area());
    for (std::uint64_t i = 0; i < n0; ++i) {
      const Point u{rng.uniform(window.x_min(), window.x_max()),
                    rng.uniform(window.y_min(), window.y_max())};
      const double w = state.insertion_weight(u);
      if (w >= 1.0 || rng.uniform() < w) state.insert(u);
    }
  }

  const double area = window.area();
  const std::uint64_t total = cfg.burn_in + cfg.n_steps;
  for (std::uint64_t step = 0; step < total; ++step) {
    const double move = rng.uniform();
    if (move < cfg.p_birth) {
      const Point u{rng.uniform(window.x_min(), window.x_max()),
                    rng.uniform(window.y_min(), window.y_max())};
      const double w = state.insertion_weight(u);
      if (w <= 0.0) continue;
      const double alpha = par.beta * w * area * (cfg.p_death / cfg.p_birth) /
                           static_cast<double>(state.size() + 1);
      if (alpha >= 1.0 || rng.uniform() < alpha) state.insert(u);
    } else if (move < cfg.p_birth + cfg.p_death) {
      if (state.size() == 0) continue;
      const std::size_t id = rng.uniform_index(state.size());
      const Point x = state.points()[id];
      state.remove(id);
      const double w = state.insertion_weight(x);  // f(z) / f(z \ x) / beta
      const double alpha = static_cast<double>(state.size() + 1) *
                           (cfg.p_birth / cfg.p_death) /
                           (par.beta * w * area);
      if (!(alpha >= 1.0 || rng.uniform() < alpha)) state.insert(x);
    } else {
      if (state.size() == 0) continue;
      const std::size_t id = rng.uniform_index(state.size());
      const Point x = state.points()[id];
      const Point u{rng.uniform(window.x_min(), window.x_max()),
                    rng.uniform(window.y_min(), window.y_max())};
      state.remove(id);
      const double w_new = state.insertion_weight(u);
      const double w_old = state.insertion_weight(x);
      // w_old > 0 whenever z was feasible; the fallback only guards underflow.
      const double alpha =
          w_old > 0.0 ? w_new / w_old : (w_new > 0.0 ? 1.0 : 0.0);
      if (alpha >= 1.0 || rng.uniform() < alpha)
        state.insert(u);
      else
        state.insert(x);
    }
  }
  return PointPattern(window, state.points());
}

struct ClusterDraw {
  PointPattern pattern;
  std::vector<Point> parents;  // includes parents outside the window
};

// Exact sampler for the two cluster models. Parents are drawn on the window
// dilated far enough that edge clusters contribute their full offspring.
inline ClusterDraw simulate_cluster_with_parents(const ProcessModel& model,
                                                 const Window& window,
                                                 std::uint64_t seed) {
  validate(model);
  double lambda_p = 0.0, mean_offspring = 0.0, halo = 0.0;
  const auto* mat = std::get_if<MaternProcess>(&model);
  const auto* tho = std::get_if<ThomasProcess>(&model);
  if (mat) {
    lambda_p = mat->lambda_p;
    mean_offspring = mat->lambda_c;
    halo = mat->radius;
  } else if (tho) {
    lambda_p = tho->lambda_p;
    mean_offspring = tho->lambda_c;
    halo = 4.0 * tho->sigma;  // beyond 4 sigma the lost mass is ~6e-5
  } else {
    throw std::invalid_argument("simulate_cluster: not a cluster model");
  }

  Rng rng = Rng::derived(seed, "sim.cluster", 0);
  const Window extended = window.dilate(halo);
  const std::uint64_t n_parents = rng.poisson(lambda_p * extended.area());
  std::vector<Point> parents;
  parents.reserve(n_parents);
  std::vector<Point> pts;
  for (std::uint64_t i = 0; i < n_parents; ++i) {
    const Point parent{rng.uniform(extended.x_min(), extended.x_max()),
                       rng.uniform(extended.y_min(), extended.y_max())};
    parents.push_back(parent);
    const std::uint64_t kids = rng.poisson(mean_offspring);
    for (std::uint64_t k = 0; k < kids; ++k) {
      Point child;
      if (mat) {
        // Uniform in the disc of radius R around the parent.
        const double rad = mat->radius * std::sqrt(rng.uniform());
        const double ang = rng.uniform(0.0, 2.0 * pi);
        child = {parent.x + rad * std::cos(ang), parent.y + rad * std::sin(ang)};
      } else {
        child = {rng.normal(parent.x, tho->sigma),
                 rng.normal(parent.y, tho->sigma)};
      }
      if (window.contains(child)) pts.push_back(child);
    }
  }
  return ClusterDraw{PointPattern(window, std::move(pts)), std::move(parents)};
}

inline PointPattern simulate_cluster(const ProcessModel& model,
                                     const Window& window,
                                     std::uint64_t seed) {
  return simulate_cluster_with_parents(model, window, seed).pattern;
}

// One-stop sampler: exact for Poisson and cluster models, MCMC for Gibbs
// models (the seed argument overrides cfg.seed).
inline PointPattern simulate(const ProcessModel& model, const Window& window,
                             std::uint64_t seed,
                             const McmcConfig& cfg = McmcConfig{}) {
  validate(model);
  if (const auto* p = std::get_if<PoissonProcess>(&model))
    return simulate_poisson(p->lambda, window, seed);
  if (is_cluster(model)) return simulate_cluster(model, window, seed);
  McmcConfig run = cfg;
  run.seed = seed;
  return simulate_gibbs(model, window, run);
}

}  // namespace spatnet
