#pragma once

// Downlink SIR and coverage probability over a base-station pattern:
// interference-limited (no noise term), power-law path loss with a distance
// floor, optional Rayleigh fading and lognormal shadowing.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "spatnet/geometry.hpp"
#include "spatnet/rng.hpp"
#include "spatnet/summaries.hpp"

namespace spatnet {

enum class Fading { none, rayleigh };

// Serving-station rule: strongest instantaneous power, or strongest mean
// power (fading averaged out; equal-power no-shadowing case reduces to the
// nearest station). Ties go to the lowest point index.
enum class Association { max_instantaneous, max_mean };

inline std::vector<double> default_thresholds_db() {
  std::vector<double> t;
  for (int i = -20; i <= 40; ++i) t.push_back(i * 0.5);  // -10 .. 20 dB
  return t;
}

struct RadioConfig {
  double path_loss_exponent = 4.0;
  double shadowing_sigma_db = 3.0;  // 0 disables shadowing
  double macro_power = 10.0;        // relative transmit powers
  double micro_power = 1.0;
  Fading fading = Fading::rayleigh;
  Association association = Association::max_instantaneous;
  double distance_floor_km = 0.001;  // caps the singular path loss
  std::vector<double> thresholds_db = default_thresholds_db();
  std::size_t n_users = 2000;

  void validate() const {
    if (!(path_loss_exponent > 0.0))
      throw std::invalid_argument("RadioConfig: path loss exponent must be > 0");
    if (shadowing_sigma_db < 0.0)
      throw std::invalid_argument("RadioConfig: shadowing sigma must be >= 0");
    if (!(macro_power > 0.0) || !(micro_power > 0.0))
      throw std::invalid_argument("RadioConfig: powers must be > 0");
    if (!(distance_floor_km > 0.0))
      throw std::invalid_argument("RadioConfig: distance floor must be > 0");
    if (thresholds_db.empty())
      throw std::invalid_argument("RadioConfig: no thresholds");
    for (std::size_t i = 1; i < thresholds_db.size(); ++i)
      if (!(thresholds_db[i] > thresholds_db[i - 1]))
        throw std::invalid_argument(
            "RadioConfig: thresholds must be strictly increasing");
    if (n_users == 0)
      throw std::invalid_argument("RadioConfig: need at least one user drop");
  }

  // In an infinite network the interference sum diverges at exponents <= 2;
  // finite windows still give numbers, but they are window-size artifacts.
  bool interference_diverges() const { return path_loss_exponent <= 2.0; }
};

namespace detail {

// Stable per-station key from the coordinate bits, so a station keeps its
// fading/shadowing draws when unrelated stations are added or removed.
inline std::uint64_t coord_key(Point p) {
  std::uint64_t bx, by;
  std::memcpy(&bx, &p.x, sizeof bx);
  std::memcpy(&by, &p.y, sizeof by);
  std::uint64_t state = bx ^ (by << 32 | by >> 32);
  return splitmix64(state);
}

}  // namespace detail

// One SIR realization at a user location. Per-station randomness is keyed by
// the station coordinates, so the same seed reproduces each station's channel
// regardless of which other stations are present.
inline double sir_sample(const PointPattern& pattern, Point user,
                         const RadioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (pattern.size() < 2)
    throw std::invalid_argument("sir_sample: need at least two stations");
  if (!pattern.window().contains(user))
    throw std::invalid_argument("sir_sample: user outside window");

  const auto& pts = pattern.points();
  const bool marked = pattern.has_marks();
  std::size_t serving = 0;
  double best_metric = -1.0;
  std::vector<double> inst(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d =
        std::max(distance(user, pts[i]), cfg.distance_floor_km);
    const double power = (marked && pattern.marks()[i] == Mark::micro)
                             ? cfg.micro_power
                             : cfg.macro_power;
    Rng link = Rng(derive_seed(seed, "link", detail::coord_key(pts[i])));
    const double shadow =
        cfg.shadowing_sigma_db > 0.0
            ? std::pow(10.0, link.normal(0.0, cfg.shadowing_sigma_db) / 10.0)
            : 1.0;
    const double h = cfg.fading == Fading::rayleigh ? link.exponential(1.0) : 1.0;
    const double mean = power * shadow * std::pow(d, -cfg.path_loss_exponent);
    inst[i] = mean * h;
    const double metric =
        cfg.association == Association::max_instantaneous ? inst[i] : mean;
    if (metric > best_metric) {
      best_metric = metric;
      serving = i;
    }
  }
  double interference = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (i != serving) interference += inst[i];
  return inst[serving] / interference;
}

// Empirical P(SIR > T) over uniform user drops, one curve value per threshold.
// Channels are redrawn per drop. Nonincreasing in the threshold by
// construction.
inline SummaryCurve coverage_curve(const PointPattern& pattern,
                                   const RadioConfig& cfg,
                                   std::uint64_t seed) {
  cfg.validate();
  if (pattern.size() < 2)
    throw std::invalid_argument("coverage_curve: need at least two stations");

  std::vector<double> t_linear(cfg.thresholds_db.size());
  for (std::size_t k = 0; k < t_linear.size(); ++k)
    t_linear[k] = std::pow(10.0, cfg.thresholds_db[k] / 10.0);

  const Window& w = pattern.window();
  std::vector<std::size_t> counts(t_linear.size(), 0);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    Rng pos = Rng::derived(seed, "user", u);
    const Point user{pos.uniform(w.x_min(), w.x_max()),
                     pos.uniform(w.y_min(), w.y_max())};
    const double sir =
        sir_sample(pattern, user, cfg, derive_seed(seed, "drop", u));
    for (std::size_t k = 0; k < t_linear.size(); ++k) {
      if (sir > t_linear[k])
        ++counts[k];
      else
        break;  // thresholds ascend
    }
  }
  SummaryCurve curve{cfg.thresholds_db,
                     std::vector<double>(t_linear.size(), 0.0)};
  for (std::size_t k = 0; k < t_linear.size(); ++k)
    curve.values[k] =
        static_cast<double>(counts[k]) / static_cast<double>(cfg.n_users);
  return curve;
}

}  // namespace spatnet
