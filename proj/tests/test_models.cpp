#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "spatnet/geometry.hpp"
#include "spatnet/models.hpp"
#include "spatnet/process_model.hpp"
#include "spatnet/rng.hpp"
#include "spatnet/summaries.hpp"

using namespace spatnet;

namespace {

PointPattern with_extra(const PointPattern& z, Point u) {
  std::vector<Point> pts = z.points();
  pts.push_back(u);
  return PointPattern(z.window(), std::move(pts));
}

PointPattern uniform_points(const Window& w, std::size_t n, Rng& rng) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back({rng.uniform(w.x_min(), w.x_max()),
                   rng.uniform(w.y_min(), w.y_max())});
  return PointPattern(w, std::move(pts));
}

}  // namespace

TEST_CASE("model validation rejects bad parameters") {
  REQUIRE_NOTHROW(validate(StraussProcess{1.0, 0.0, 0.2}));
  REQUIRE_NOTHROW(validate(StraussProcess{1.0, 1.0, 0.2}));
  REQUIRE_THROWS_AS(validate(PoissonProcess{0.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(validate(StraussProcess{1.0, 1.2, 0.2}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(validate(StraussProcess{1.0, -0.1, 0.2}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(validate(StraussProcess{1.0, 0.5, 0.0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(validate(GeyerProcess{1.0, 0.0, 0.2, 2}),
                    std::invalid_argument);
  REQUIRE_NOTHROW(validate(GeyerProcess{1.0, 1.7, 0.2, 2}));
  REQUIRE_THROWS_AS(validate(HardcoreProcess{-1.0, 0.2}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(validate(MaternProcess{0.0, 5.0, 0.1}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(validate(ThomasProcess{1.0, 5.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("log density matches hand-computed cases") {
  const Window w(0, 0, 4, 4);
  const PointPattern z(w, {{1, 1}, {1.3, 1}, {3, 3}});  // one pair within 0.5

  const double strauss =
      log_density_unnormalized(StraussProcess{2.0, 0.25, 0.5}, z);
  REQUIRE_THAT(strauss, Catch::Matchers::WithinRel(
                            3.0 * std::log(2.0) + std::log(0.25), 1e-12));

  REQUIRE(std::isinf(
      log_density_unnormalized(HardcoreProcess{2.0, 0.5}, z)));
  REQUIRE_THAT(log_density_unnormalized(HardcoreProcess{2.0, 0.2}, z),
               Catch::Matchers::WithinRel(3.0 * std::log(2.0), 1e-12));

  // gamma = 0 forbids any close pair outright.
  REQUIRE(std::isinf(
      log_density_unnormalized(StraussProcess{2.0, 0.0, 0.5}, z)));
  REQUIRE_THAT(log_density_unnormalized(StraussProcess{2.0, 0.0, 0.1}, z),
               Catch::Matchers::WithinRel(3.0 * std::log(2.0), 1e-12));

  REQUIRE_THROWS_AS(log_density_unnormalized(PoissonProcess{1.0}, z),
                    std::invalid_argument);
}

TEST_CASE("Geyer log density uses per-point saturated counts") {
  const Window w(0, 0, 2, 2);
  // Chain 0 - 1 - 2 at spacing 0.3 with r = 0.35: neighbour counts 1, 2, 1.
  const PointPattern z(w, {{0.5, 1}, {0.8, 1}, {1.1, 1}});
  const GeyerProcess g{1.5, 2.0, 0.35, 1};  // sat clips every count to 1
  REQUIRE_THAT(log_density_unnormalized(g, z),
               Catch::Matchers::WithinRel(
                   3.0 * std::log(1.5) + 3.0 * std::log(2.0), 1e-12));
  const GeyerProcess g2{1.5, 2.0, 0.35, 2};  // counts 1,2,1 sum to 4
  REQUIRE_THAT(log_density_unnormalized(g2, z),
               Catch::Matchers::WithinRel(
                   3.0 * std::log(1.5) + 4.0 * std::log(2.0), 1e-12));
}

TEST_CASE("papangelou equals the density ratio on random instances") {
  const Window w(0, 0, 3, 3);
  Rng rng(404);
  int checked = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = rng.uniform_index(8);
    const PointPattern z = uniform_points(w, n, rng);
    const Point u{rng.uniform(0, 3), rng.uniform(0, 3)};

    ProcessModel model;
    switch (rep % 3) {
      case 0:
        model = StraussProcess{rng.uniform(0.5, 3.0), rng.uniform(0.05, 1.0),
                               rng.uniform(0.1, 0.8)};
        break;
      case 1:
        model = GeyerProcess{rng.uniform(0.5, 3.0), rng.uniform(0.2, 3.0),
                             rng.uniform(0.1, 0.8),
                             static_cast<int>(rng.uniform_index(4))};
        break;
      default:
        model = HardcoreProcess{rng.uniform(0.5, 3.0), rng.uniform(0.1, 0.8)};
        break;
    }

    const double before = log_density_unnormalized(model, z);
    if (std::isinf(before)) continue;  // infeasible hardcore start
    const double after = log_density_unnormalized(model, with_extra(z, u));
    const double lambda = papangelou(model, z, u);
    if (std::isinf(after)) {
      REQUIRE(lambda == 0.0);
    } else {
      REQUIRE_THAT(lambda,
                   Catch::Matchers::WithinRel(std::exp(after - before), 1e-9));
    }
    ++checked;
  }
  REQUIRE(checked > 200);
}

TEST_CASE("papangelou rejects misuse") {
  const Window w(0, 0, 1, 1);
  const PointPattern z(w, {{0.5, 0.5}});
  REQUIRE_THROWS_AS(papangelou(StraussProcess{1, 0.5, 0.1}, z, {2, 2}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(papangelou(PoissonProcess{1.0}, z, {0.2, 0.2}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(papangelou(ThomasProcess{1, 5, 0.1}, z, {0.2, 0.2}),
                    std::invalid_argument);
}

TEST_CASE("poisson sampler: counts, support, determinism") {
  const Window w(2, 3, 12, 8);  // area 50
  double total = 0.0;
  const int reps = 400;
  for (int i = 0; i < reps; ++i) {
    const PointPattern p = simulate_poisson(1.0, w, 1000 + i);
    for (const Point& q : p.points()) REQUIRE(w.contains(q));
    total += static_cast<double>(p.size());
  }
  // mean 50, sd sqrt(50): the sample mean over 400 draws has se ~ 0.35.
  REQUIRE_THAT(total / reps, Catch::Matchers::WithinAbs(50.0, 1.5));

  const PointPattern a = simulate_poisson(1.0, w, 9);
  const PointPattern b = simulate_poisson(1.0, w, 9);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a.points()[i].x == b.points()[i].x);
    REQUIRE(a.points()[i].y == b.points()[i].y);
  }
  REQUIRE_THROWS_AS(simulate_poisson(0.0, w, 1), std::invalid_argument);
}

TEST_CASE("poisson sampler: disjoint halves are uncorrelated") {
  const Window w(0, 0, 10, 10);
  std::vector<double> nl, nr;
  for (int i = 0; i < 4000; ++i) {
    const PointPattern p = simulate_poisson(0.8, w, 5000 + i);
    double l = 0, r = 0;
    for (const Point& q : p.points()) (q.x < 5.0 ? l : r) += 1.0;
    nl.push_back(l);
    nr.push_back(r);
  }
  double ml = 0, mr = 0;
  for (std::size_t i = 0; i < nl.size(); ++i) {
    ml += nl[i];
    mr += nr[i];
  }
  ml /= nl.size();
  mr /= nr.size();
  double cov = 0, vl = 0, vr = 0;
  for (std::size_t i = 0; i < nl.size(); ++i) {
    cov += (nl[i] - ml) * (nr[i] - mr);
    vl += (nl[i] - ml) * (nl[i] - ml);
    vr += (nr[i] - mr) * (nr[i] - mr);
  }
  REQUIRE_THAT(cov / std::sqrt(vl * vr), Catch::Matchers::WithinAbs(0.0, 0.08));
}

TEST_CASE("gibbs sampler with gamma 1 reproduces Poisson counts") {
  const Window w(0, 0, 10, 6);  // beta |W| = 60
  McmcConfig cfg;
  cfg.n_steps = 4000;
  cfg.burn_in = 4000;
  double total = 0.0;
  const int reps = 150;
  for (int i = 0; i < reps; ++i) {
    cfg.seed = 40 + i;
    total += static_cast<double>(
        simulate_gibbs(StraussProcess{1.0, 1.0, 0.3}, w, cfg).size());
  }
  // se of the mean is sqrt(60/150) ~ 0.63.
  REQUIRE_THAT(total / reps, Catch::Matchers::WithinAbs(60.0, 2.2));
}

TEST_CASE("hardcore sampler never violates the core") {
  const Window w(0, 0, 6, 6);
  McmcConfig cfg;
  cfg.n_steps = 3000;
  cfg.burn_in = 3000;
  for (int i = 0; i < 40; ++i) {
    cfg.seed = 900 + i;
    const PointPattern p = simulate_gibbs(HardcoreProcess{2.0, 0.4}, w, cfg);
    if (p.size() >= 2) REQUIRE(min_interpoint_distance(p) >= 0.4);
    for (const Point& q : p.points()) REQUIRE(w.contains(q));
  }
}

TEST_CASE("strauss inhibition pushes L below the Poisson line") {
  const Window w(0, 0, 10, 10);
  McmcConfig cfg;
  cfg.n_steps = 20000;
  cfg.burn_in = 20000;
  const DistanceGrid grid(std::vector<double>{0.0, 0.5});
  double l_sum = 0.0, count = 0.0;
  for (int i = 0; i < 25; ++i) {
    cfg.seed = 7000 + i;
    const PointPattern p =
        simulate_gibbs(StraussProcess{2.0, 0.1, 0.5}, w, cfg);
    count += static_cast<double>(p.size());
    l_sum += l_function(p, grid).values[1];
  }
  REQUIRE(l_sum / 25.0 < 0.4);   // strongly repulsive at the interaction range
  REQUIRE(count / 25.0 < 180.0); // and thinner than Poisson(beta)
}

TEST_CASE("geyer attraction raises counts over its gamma-1 baseline") {
  const Window w(0, 0, 10, 10);
  McmcConfig cfg;
  cfg.n_steps = 20000;
  cfg.burn_in = 20000;
  double attracted = 0.0, baseline = 0.0;
  for (int i = 0; i < 30; ++i) {
    cfg.seed = 100 + i;
    attracted += static_cast<double>(
        simulate_gibbs(GeyerProcess{0.3, 1.6, 0.4, 2}, w, cfg).size());
    cfg.seed = 60000 + i;
    baseline += static_cast<double>(
        simulate_gibbs(GeyerProcess{0.3, 1.0, 0.4, 2}, w, cfg).size());
  }
  REQUIRE_THAT(baseline / 30.0, Catch::Matchers::WithinAbs(30.0, 3.5));
  REQUIRE(attracted / 30.0 > baseline / 30.0 * 1.2);
}

TEST_CASE("gibbs sampler is deterministic and validates inputs") {
  const Window w(0, 0, 5, 5);
  McmcConfig cfg;
  cfg.n_steps = 500;
  cfg.burn_in = 500;
  cfg.seed = 77;
  const PointPattern a = simulate_gibbs(StraussProcess{1.0, 0.5, 0.3}, w, cfg);
  const PointPattern b = simulate_gibbs(StraussProcess{1.0, 0.5, 0.3}, w, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    REQUIRE(a.points()[i].x == b.points()[i].x);

  REQUIRE_THROWS_AS(simulate_gibbs(PoissonProcess{1.0}, w, cfg),
                    std::invalid_argument);
  McmcConfig bad = cfg;
  bad.p_birth = 0.7;  // probabilities no longer sum to one
  REQUIRE_THROWS_AS(simulate_gibbs(StraussProcess{1.0, 0.5, 0.3}, w, bad),
                    std::invalid_argument);
}

// The sharpest sampler check: on a tiny window the Strauss state distribution
// over (n, close pairs) is computable by brute-force integration. The chain's
// empirical distribution must match within a small total-variation distance.
TEST_CASE("gibbs chain matches the exact state distribution") {
  const Window w(0, 0, 1, 1);
  const double beta = 0.5, gamma = 0.5, r = 0.45;
  const StraussProcess model{beta, gamma, r};

  // Unnormalized mass of {n = k, pairs = p} is beta^k / k! * P(pairs = p)
  // for k uniform points; probabilities estimated by plain Monte Carlo.
  std::map<std::pair<int, int>, double> mass;
  mass[{0, 0}] = 1.0;
  mass[{1, 0}] = beta;
  Rng oracle(31415);
  double factorial = 1.0, beta_k = 1.0;
  for (int k = 2; k <= 6; ++k) {
    factorial *= k;
    beta_k = std::pow(beta, k);
    const int samples = k <= 3 ? 2000000 : 400000;
    std::map<int, int> pair_counts;
    std::vector<Point> pts(k);
    for (int s = 0; s < samples; ++s) {
      for (int i = 0; i < k; ++i)
        pts[i] = {oracle.uniform(), oracle.uniform()};
      int pairs = 0;
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
          if (squared_distance(pts[i], pts[j]) <= r * r) ++pairs;
      ++pair_counts[pairs];
    }
    for (const auto& [pairs, cnt] : pair_counts)
      mass[{k, pairs}] = beta_k / factorial *
                         static_cast<double>(cnt) / samples;
  }
  double z_total = 0.0;
  for (const auto& [state, m] : mass) z_total += m;

  // Lump states: (n, pairs) for n <= 2, then by n alone, then a tail bucket.
  auto category = [](int n, int pairs) {
    if (n <= 1) return n;             // 0, 1
    if (n == 2) return pairs == 0 ? 2 : 3;
    if (n == 3) return 4;
    return 5;
  };
  std::vector<double> expected(6, 0.0);
  for (const auto& [state, m] : mass)
    expected[category(state.first, state.second)] += m / z_total;

  McmcConfig cfg;
  cfg.n_steps = 1500;
  cfg.burn_in = 1500;
  const int runs = 4000;
  std::vector<double> observed(6, 0.0);
  for (int i = 0; i < runs; ++i) {
    cfg.seed = 42000 + i;
    const PointPattern p = simulate_gibbs(model, w, cfg);
    const int pairs = static_cast<int>(close_pair_count(p, r));
    observed[category(static_cast<int>(p.size()), pairs)] += 1.0;
  }
  for (double& o : observed) o /= runs;

  double tv = 0.0;
  for (int c = 0; c < 6; ++c) tv += std::abs(observed[c] - expected[c]);
  tv /= 2.0;
  INFO("total variation " << tv);
  REQUIRE(tv < 0.04);
}

TEST_CASE("matern offspring stay within R of a parent") {
  const ProcessModel model = MaternProcess{0.4, 5.0, 0.8};
  const Window w(0, 0, 8, 8);
  for (int rep = 0; rep < 10; ++rep) {
    const ClusterDraw draw = simulate_cluster_with_parents(model, w, 60 + rep);
    for (const Point& child : draw.pattern.points()) {
      double nearest = 1e9;
      for (const Point& parent : draw.parents)
        nearest = std::min(nearest, distance(child, parent));
      REQUIRE(nearest <= 0.8 + 1e-12);
      REQUIRE(w.contains(child));
    }
  }
}

TEST_CASE("cluster samplers satisfy Campbell's mean count formula") {
  const Window w(0, 0, 10, 10);
  const int reps = 300;
  double matern_total = 0.0, thomas_total = 0.0;
  for (int i = 0; i < reps; ++i) {
    matern_total += static_cast<double>(
        simulate_cluster(MaternProcess{0.4, 5.0, 1.0}, w, 100 + i).size());
    thomas_total += static_cast<double>(
        simulate_cluster(ThomasProcess{0.4, 5.0, 0.5}, w, 900 + i).size());
  }
  // Both means are lambda_p * lambda_c * |W| = 200; a missing edge halo
  // would bite ~7% off, far outside this band.
  REQUIRE_THAT(matern_total / reps, Catch::Matchers::WithinRel(200.0, 0.03));
  REQUIRE_THAT(thomas_total / reps, Catch::Matchers::WithinRel(200.0, 0.03));
}

TEST_CASE("thomas dispersion degenerates with sigma") {
  // With sigma tiny every offspring sits on its parent.
  const ClusterDraw draw = simulate_cluster_with_parents(
      ThomasProcess{0.5, 4.0, 1e-9}, Window(0, 0, 6, 6), 8);
  for (const Point& child : draw.pattern.points()) {
    double nearest = 1e9;
    for (const Point& parent : draw.parents)
      nearest = std::min(nearest, distance(child, parent));
    REQUIRE(nearest < 1e-6);
  }

  // More offspring per parent means more points.
  double few = 0.0, many = 0.0;
  for (int i = 0; i < 60; ++i) {
    few += static_cast<double>(
        simulate_cluster(ThomasProcess{0.5, 2.0, 0.3}, Window(0, 0, 8, 8), i)
            .size());
    many += static_cast<double>(
        simulate_cluster(ThomasProcess{0.5, 8.0, 0.3}, Window(0, 0, 8, 8),
                         5000 + i)
            .size());
  }
  REQUIRE(many > 2.5 * few);
}

TEST_CASE("simulate dispatches on the model kind") {
  const Window w(0, 0, 5, 5);
  McmcConfig cfg;
  cfg.n_steps = 200;
  cfg.burn_in = 200;
  cfg.seed = 12345;  // overridden by the explicit seed argument

  const PointPattern gibbs = simulate(StraussProcess{1.0, 0.5, 0.3}, w, 3, cfg);
  McmcConfig direct = cfg;
  direct.seed = 3;
  const PointPattern gibbs2 =
      simulate_gibbs(StraussProcess{1.0, 0.5, 0.3}, w, direct);
  REQUIRE(gibbs.size() == gibbs2.size());

  const PointPattern pois = simulate(PoissonProcess{2.0}, w, 4);
  const PointPattern pois2 = simulate_poisson(2.0, w, 4);
  REQUIRE(pois.size() == pois2.size());

  const PointPattern cluster = simulate(ThomasProcess{0.5, 4.0, 0.2}, w, 5);
  const PointPattern cluster2 = simulate_cluster(ThomasProcess{0.5, 4.0, 0.2}, w, 5);
  REQUIRE(cluster.size() == cluster2.size());
}
