#pragma once

// Goodness-of-fit by simultaneous Monte Carlo envelopes, the clustering
// probability curve, and the batch identification driver that scores every
// candidate model over many sampled regions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "spatnet/coverage.hpp"
#include "spatnet/detail/parallel.hpp"
#include "spatnet/fitting.hpp"
#include "spatnet/geometry.hpp"
#include "spatnet/models.hpp"
#include "spatnet/process_model.hpp"
#include "spatnet/rng.hpp"
#include "spatnet/summaries.hpp"

namespace spatnet {

enum class EnvelopeMetric { l, coverage };

struct EnvelopeConfig {
  EnvelopeMetric metric = EnvelopeMetric::l;
  int n_sim = 199;
  int rank = 10;  // rank/(n_sim+1) = exact significance under the null
  std::uint64_t seed = 0;
  std::optional<DistanceGrid> grid;  // L metric; default quarter-side grid
  RadioConfig radio;                 // coverage metric
  McmcConfig mcmc;                   // Gibbs simulation settings

  double significance() const {
    return static_cast<double>(rank) / static_cast<double>(n_sim + 1);
  }

  void validate() const {
    if (n_sim < 1)
      throw std::invalid_argument("EnvelopeConfig: n_sim must be >= 1");
    if (rank < 1 || rank > n_sim)
      throw std::invalid_argument("EnvelopeConfig: rank must be in [1, n_sim]");
  }
};

struct EnvelopeResult {
  SummaryCurve observed;
  std::vector<double> expected;
  std::vector<double> low;
  std::vector<double> high;
  double deviation = 0.0;           // envelope half-width
  double observed_deviation = 0.0;  // max |observed - expected|
  bool reject = false;
  double significance = 0.0;
};

// Simultaneous (fixed-width) envelope from precomputed curves: the half-width
// is the rank-th largest of the simulated max-absolute deviations, so under
// the null P(reject) = rank / (n_sim + 1) exactly.
inline EnvelopeResult envelope_from_curves(
    const SummaryCurve& observed, const std::vector<SummaryCurve>& simulated,
    int rank, const std::optional<std::vector<double>>& expected_override = {}) {
  if (simulated.empty())
    throw std::invalid_argument("envelope_from_curves: no simulated curves");
  if (rank < 1 || rank > static_cast<int>(simulated.size()))
    throw std::invalid_argument("envelope_from_curves: rank out of range");
  const std::size_t m = observed.values.size();
  for (const auto& s : simulated)
    if (s.values.size() != m)
      throw std::invalid_argument("envelope_from_curves: grid size mismatch");

  EnvelopeResult result;
  result.observed = observed;
  if (expected_override) {
    if (expected_override->size() != m)
      throw std::invalid_argument("envelope_from_curves: expected size mismatch");
    result.expected = *expected_override;
  } else {
    result.expected.assign(m, 0.0);
    for (const auto& s : simulated)
      for (std::size_t k = 0; k < m; ++k) result.expected[k] += s.values[k];
    for (double& e : result.expected)
      e /= static_cast<double>(simulated.size());
  }

  std::vector<double> deviations;
  deviations.reserve(simulated.size());
  for (const auto& s : simulated) {
    double d = 0.0;
    for (std::size_t k = 0; k < m; ++k)
      d = std::max(d, std::abs(s.values[k] - result.expected[k]));
    deviations.push_back(d);
  }
  std::sort(deviations.begin(), deviations.end(), std::greater<>());
  result.deviation = deviations[static_cast<std::size_t>(rank) - 1];

  for (std::size_t k = 0; k < m; ++k) {
    result.low.push_back(result.expected[k] - result.deviation);
    result.high.push_back(result.expected[k] + result.deviation);
    result.observed_deviation = std::max(
        result.observed_deviation, std::abs(observed.values[k] - result.expected[k]));
  }
  result.reject = result.observed_deviation > result.deviation;
  result.significance = static_cast<double>(rank) /
                        static_cast<double>(simulated.size() + 1);
  return result;
}

namespace detail {

// L curve of a simulated pattern; degenerate draws (n < 2) contribute a zero
// curve, the L of an empty pattern.
inline SummaryCurve l_curve_or_zero(const PointPattern& pattern,
                                    const DistanceGrid& grid) {
  if (pattern.size() >= 2) return l_function(pattern, grid);
  return SummaryCurve{grid.values(),
                      std::vector<double>(grid.size(), 0.0)};
}

inline SummaryCurve coverage_or_degenerate(const PointPattern& pattern,
                                           const RadioConfig& cfg,
                                           std::uint64_t seed) {
  if (pattern.size() >= 2) return coverage_curve(pattern, cfg, seed);
  // One station has no interference (SIR infinite), zero stations no signal.
  const double v = pattern.size() == 1 ? 1.0 : 0.0;
  return SummaryCurve{cfg.thresholds_db,
                      std::vector<double>(cfg.thresholds_db.size(), v)};
}

}  // namespace detail

// Monte Carlo goodness-of-fit test of a fitted model against an observed
// pattern. The expected curve is exact (L = r) for Poisson with the L metric
// and the simulation mean otherwise.
inline EnvelopeResult envelope_test(const PointPattern& pattern,
                                    const ProcessModel& model,
                                    const EnvelopeConfig& cfg) {
  validate(model);
  cfg.validate();

  std::vector<PointPattern> draws;
  draws.reserve(cfg.n_sim);
  for (int i = 0; i < cfg.n_sim; ++i)
    draws.push_back(simulate(model, pattern.window(),
                             derive_seed(cfg.seed, "envelope-sim",
                                         static_cast<std::uint64_t>(i)),
                             cfg.mcmc));

  if (cfg.metric == EnvelopeMetric::l) {
    const DistanceGrid grid =
        cfg.grid ? *cfg.grid : DistanceGrid::default_for(pattern.window());
    const SummaryCurve observed = l_function(pattern, grid);
    std::vector<SummaryCurve> sims;
    sims.reserve(draws.size());
    for (const auto& d : draws)
      sims.push_back(detail::l_curve_or_zero(d, grid));
    std::optional<std::vector<double>> expected;
    if (std::holds_alternative<PoissonProcess>(model))
      expected = grid.values();  // L(r) = r exactly
    return envelope_from_curves(observed, sims, cfg.rank, expected);
  }

  const SummaryCurve observed = coverage_curve(
      pattern, cfg.radio, derive_seed(cfg.seed, "envelope-observed", 0));
  std::vector<SummaryCurve> sims;
  sims.reserve(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i)
    sims.push_back(detail::coverage_or_degenerate(
        draws[i], cfg.radio, derive_seed(cfg.seed, "envelope-coverage", i)));
  return envelope_from_curves(observed, sims, cfg.rank);
}

// Fraction of patterns whose L estimate exceeds r, per grid value: the
// probability that a region looks clustered at that range.
inline SummaryCurve clustering_probability(
    const std::vector<PointPattern>& patterns, const DistanceGrid& grid) {
  if (patterns.empty())
    throw std::invalid_argument("clustering_probability: no patterns");
  SummaryCurve curve{grid.values(), std::vector<double>(grid.size(), 0.0)};
  for (const auto& p : patterns) {
    if (p.size() < 2)
      throw std::invalid_argument(
          "clustering_probability: pattern with fewer than two points");
    const SummaryCurve l = l_function(p, grid);
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (l.values[k] > grid.values()[k]) curve.values[k] += 1.0;
  }
  for (double& v : curve.values) v /= static_cast<double>(patterns.size());
  return curve;
}

enum class RegionOutcome { accepted, rejected, skipped, failed };

inline std::string_view outcome_name(RegionOutcome o) {
  switch (o) {
    case RegionOutcome::accepted: return "accepted";
    case RegionOutcome::rejected: return "rejected";
    case RegionOutcome::skipped: return "skipped";
    case RegionOutcome::failed: return "failed";
  }
  return "unknown";
}

// Verdict of one candidate model on one region.
struct ModelVerdict {
  RegionOutcome outcome = RegionOutcome::skipped;
  std::string detail;                 // reason when skipped or failed
  std::optional<ProcessModel> fitted; // present when a fit succeeded
};

struct RegionRow {
  std::size_t index = 0;
  Window region{0, 0, 1, 1};
  std::size_t n_points = 0;
  bool usable = false;  // at least two points, L curve computed
  std::vector<double> l_values;
  std::vector<ModelVerdict> verdicts;  // parallel to candidates
};

struct ModelScore {
  std::size_t tested = 0;  // accepted + rejected
  std::size_t rejected = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  // Fraction of tested regions whose envelope test rejects the fitted model.
  double outage() const {
    return tested == 0 ? 0.0
                       : static_cast<double>(rejected) /
                             static_cast<double>(tested);
  }
};

struct BatchConfig {
  std::vector<ModelKind> candidates{ModelKind::poisson,  ModelKind::hardcore,
                                    ModelKind::strauss,  ModelKind::geyer,
                                    ModelKind::matern,   ModelKind::thomas};
  int n_sim = 199;
  int rank = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;  // 0 = hardware concurrency
  std::size_t grid_size = 512;
  std::size_t min_cluster_points = 10;  // contrast fits need a real K curve
  McmcConfig mcmc;
  std::string label = "all";

  void validate() const {
    if (candidates.empty())
      throw std::invalid_argument("BatchConfig: no candidate models");
    if (n_sim < 1 || rank < 1 || rank > n_sim)
      throw std::invalid_argument("BatchConfig: bad envelope settings");
    if (grid_size < 2)
      throw std::invalid_argument("BatchConfig: grid_size must be >= 2");
  }
};

struct BatchReport {
  std::string label;
  std::vector<ModelKind> candidates;
  std::vector<RegionRow> rows;          // one per region, in region order
  std::vector<ModelScore> scores;       // parallel to candidates
  SummaryCurve clustering;              // P(L(r) > r) over usable regions
  int n_sim = 0;
  int rank = 10;
  std::uint64_t seed = 0;
};

// Regions either cut from one observed parent pattern or simulated fresh
// from a generating model.
using RegionSource = std::variant<PointPattern, ProcessModel>;

// Fits and envelope-tests every candidate on every region. All randomness is
// derived from (seed, region index, candidate index), so results do not
// depend on the job count.
inline BatchReport run_batch(const std::vector<Window>& regions,
                             const RegionSource& source,
                             const BatchConfig& cfg) {
  cfg.validate();
  if (regions.empty())
    throw std::invalid_argument("run_batch: no regions");

  double min_side = std::numeric_limits<double>::infinity();
  for (const auto& w : regions) min_side = std::min(min_side, w.shorter_side());
  const DistanceGrid grid = DistanceGrid::linspace(min_side / 4.0, cfg.grid_size);

  const std::size_t n_models = cfg.candidates.size();
  BatchReport report;
  report.label = cfg.label;
  report.candidates = cfg.candidates;
  report.rows.resize(regions.size());
  report.n_sim = cfg.n_sim;
  report.rank = cfg.rank;
  report.seed = cfg.seed;

  detail::parallel_for(regions.size(), cfg.jobs, [&](std::size_t i) {
    RegionRow row;
    row.index = i;
    row.region = regions[i];
    row.verdicts.resize(n_models);

    std::optional<PointPattern> pattern;
    std::string region_problem;
    if (const auto* parent = std::get_if<PointPattern>(&source)) {
      try {
        pattern = clip(*parent, regions[i]);
      } catch (const std::exception& e) {
        region_problem = e.what();
      }
    } else {
      pattern = simulate(std::get<ProcessModel>(source), regions[i],
                         derive_seed(cfg.seed, "region-sim", i), cfg.mcmc);
    }

    if (!pattern || pattern->size() < 2) {
      row.n_points = pattern ? pattern->size() : 0;
      const std::string why =
          region_problem.empty() ? "fewer than two points" : region_problem;
      for (auto& v : row.verdicts) {
        v.outcome = RegionOutcome::skipped;
        v.detail = why;
      }
      report.rows[i] = std::move(row);
      return;
    }

    row.n_points = pattern->size();
    row.usable = true;
    row.l_values = l_function(*pattern, grid).values;

    for (std::size_t j = 0; j < n_models; ++j) {
      ModelVerdict& verdict = row.verdicts[j];
      const ModelKind kind = cfg.candidates[j];
      if ((kind == ModelKind::matern || kind == ModelKind::thomas) &&
          pattern->size() < cfg.min_cluster_points) {
        verdict.outcome = RegionOutcome::skipped;
        verdict.detail = "too few points for a contrast fit";
        continue;
      }
      try {
        const FitResult fit = fit_model(*pattern, kind);
        verdict.fitted = fit.model;
        EnvelopeConfig env;
        env.metric = EnvelopeMetric::l;
        env.n_sim = cfg.n_sim;
        env.rank = cfg.rank;
        env.grid = grid;
        env.mcmc = cfg.mcmc;
        env.seed = derive_seed(cfg.seed, "region-envelope", i * n_models + j);
        const EnvelopeResult env_result =
            envelope_test(*pattern, fit.model, env);
        verdict.outcome = env_result.reject ? RegionOutcome::rejected
                                            : RegionOutcome::accepted;
      } catch (const std::exception& e) {
        verdict.outcome = RegionOutcome::failed;
        verdict.detail = e.what();
      }
    }
    report.rows[i] = std::move(row);
  });

  std::vector<PointPattern> usable;
  report.scores.assign(n_models, ModelScore{});
  for (const auto& row : report.rows) {
    for (std::size_t j = 0; j < n_models; ++j) {
      switch (row.verdicts[j].outcome) {
        case RegionOutcome::accepted: ++report.scores[j].tested; break;
        case RegionOutcome::rejected:
          ++report.scores[j].tested;
          ++report.scores[j].rejected;
          break;
        case RegionOutcome::skipped: ++report.scores[j].skipped; break;
        case RegionOutcome::failed: ++report.scores[j].failed; break;
      }
    }
  }

  std::size_t n_usable = 0;
  report.clustering =
      SummaryCurve{grid.values(), std::vector<double>(grid.size(), 0.0)};
  for (const auto& row : report.rows) {
    if (!row.usable) continue;
    ++n_usable;
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (row.l_values[k] > grid.values()[k])
        report.clustering.values[k] += 1.0;
  }
  if (n_usable == 0)
    throw std::runtime_error("run_batch: zero admissible regions");
  for (double& v : report.clustering.values)
    v /= static_cast<double>(n_usable);
  return report;
}

}  // namespace spatnet
