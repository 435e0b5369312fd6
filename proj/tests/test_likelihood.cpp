#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bbis/likelihood.hpp"
#include "bbis/oracle.hpp"
#include "test_oracles.hpp"

using namespace bbis;

namespace {

FieldList quad_fields() { return make_field_list({quadratic_distance_field({0.0, 0.0})}); }

FieldList default_fields() {
  return make_field_list({generate_perlin_field(1, 0.05, GridSpec{}),
                          generate_perlin_field(2, 0.05, GridSpec{}),
                          quadratic_distance_field({0.0, 0.0})});
}

const OUParams kOU = OUParams::from_quadratic(-0.1, {0.0, 0.0}, 5.0);

struct Interval {
  Point2 a, b;
};

std::vector<Interval> ou_intervals(std::size_t n, double dt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Interval> out;
  const double s0 = std::sqrt(kOU.stationary_variance());
  const double s1 = std::sqrt(ou_transition_variance(kOU, dt));
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a{s0 * nd(rng), s0 * nd(rng)};
    const Point2 b = ou_transition_mean(kOU, a, dt) + Point2{s1 * nd(rng), s1 * nd(rng)};
    out.push_back({a, b});
  }
  return out;
}

Track regular_track(const std::vector<Point2>& pts, double dt) {
  Track t;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t.times.push_back(static_cast<double>(i) * dt);
    t.points.push_back(pts[i]);
  }
  return t;
}

Track ou_track(std::size_t n, double dt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const double s1 = std::sqrt(ou_transition_variance(kOU, dt));
  std::vector<Point2> pts{{0.5, -0.5}};
  for (std::size_t i = 1; i < n; ++i)
    pts.push_back(ou_transition_mean(kOU, pts.back(), dt) + Point2{s1 * nd(rng), s1 * nd(rng)});
  return regular_track(pts, dt);
}

}  // namespace

TEST(EMTransition, ZeroDriftSpotValues) {
  const RSFModel m(quad_fields(), {0.0}, 5.0);
  EXPECT_NEAR(em_transition_logdensity(m, {1.0, 2.0}, {1.0, 2.0}, 0.2), -1.8378770664093453,
              1e-12);
  EXPECT_NEAR(em_transition_logdensity(m, {1.0, 2.0}, {2.0, 2.0}, 0.2), -2.3378770664093453,
              1e-12);
  EXPECT_THROW(em_transition_logdensity(m, {0, 0}, {0, 0}, 0.0), Error);
}

TEST(EMTransition, QuadraticDriftMeanShift) {
  const RSFModel m(quad_fields(), {-0.1}, 5.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const double dt = 0.3;
  for (int i = 0; i < 10; ++i) {
    const Point2 y{u(rng), u(rng)}, x{u(rng), u(rng)};
    const Point2 mean = y + (5.0 * dt * -0.1) * y;  // y + gamma^2 dt beta (y - c)
    const double var = 5.0 * dt;
    const double hand = -std::log(2 * M_PI * var) - squared_norm(x - mean) / (2 * var);
    EXPECT_NEAR(em_transition_logdensity(m, y, x, dt), hand, 1e-12 * (1 + std::abs(hand)));
  }
}

TEST(BBISInterval, NoNodesReducesToEulerMaruyama) {
  const auto fields = default_fields();
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-30.0, 30.0), b(-5.0, 5.0), g(0.5, 10.0),
      d(0.01, 2.0);
  LikelihoodConfig cfg;
  cfg.N = 0;
  for (int i = 0; i < 50; ++i) {
    const RSFModel m(fields, {b(rng), b(rng), -std::abs(b(rng)) / 10}, g(rng));
    const Point2 x0{u(rng), u(rng)}, x1{u(rng), u(rng)};
    const double dt = d(rng);
    EXPECT_NEAR(bbis_interval_logdensity(m, x0, x1, dt, cfg), em_transition_logdensity(m, x0, x1, dt),
                1e-12);
  }
}

TEST(BBISInterval, ZeroDriftIsExactForAnyBridgeCount) {
  const RSFModel m(quad_fields(), {0.0}, 5.0);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (std::size_t bridges : {1u, 5u, 50u}) {
    const BridgeEnsemble e(bridges, 19, 1.0 / 20.0, 3);
    for (int i = 0; i < 100; ++i) {
      const Point2 a{u(rng), u(rng)};
      const Point2 b = a + Point2{0.5 * u(rng), 0.5 * u(rng)};
      EXPECT_NEAR(bbis_interval_logdensity(m, a, b, 1.0, e), bm_transition_logdensity(5.0, a, b, 1.0),
                  1e-6);
    }
  }
}

TEST(BBISInterval, BrownianMeanAbsoluteError) {
  const RSFModel m(quad_fields(), {0.0}, 5.0);
  const BridgeEnsemble e(200, 20, 1.0 / 21.0, 8);
  std::mt19937_64 rng(14);
  std::normal_distribution<double> nd(0.0, std::sqrt(5.0));
  double err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Point2 a{nd(rng), nd(rng)};
    const Point2 b = a + Point2{nd(rng), nd(rng)};
    err += std::abs(bbis_interval_logdensity(m, a, b, 1.0, e) - bm_transition_logdensity(5.0, a, b, 1.0));
  }
  EXPECT_LT(err / 100, 0.05);
}

TEST(BBISInterval, ConvergesToOrnsteinUhlenbeck) {
  const RSFModel m(quad_fields(), {-0.1}, 5.0);
  const BridgeEnsemble e(200, 100, 1.0 / 101.0, 21);
  const auto ivs = ou_intervals(100, 1.0, 22);
  double bbis_err = 0.0, em_err = 0.0;
  for (const auto& iv : ivs) {
    const double exact = ou_transition_logdensity(kOU, iv.a, iv.b, 1.0);
    bbis_err += std::abs(bbis_interval_logdensity(m, iv.a, iv.b, 1.0, e) - exact);
    em_err += std::abs(em_transition_logdensity(m, iv.a, iv.b, 1.0) - exact);
  }
  EXPECT_LT(bbis_err / 100, 0.05);
  EXPECT_GT(em_err, bbis_err);
}

TEST(BBISInterval, RejectsMismatchedGeometry) {
  const RSFModel m(quad_fields(), {-0.1}, 5.0);
  const BridgeEnsemble e(10, 9, 0.1, 1);
  EXPECT_NO_THROW(bbis_interval_logdensity(m, {0, 0}, {1, 1}, 1.0, e));
  EXPECT_THROW(bbis_interval_logdensity(m, {0, 0}, {1, 1}, 1.1, e), Error);
}

TEST(BBISInterval, FiniteForDistantEndpoints) {
  // Long sub-step chains between far-apart points must not underflow.
  const RSFModel m(default_fields(), {4.0, 2.0, -0.1}, 5.0);
  const BridgeEnsemble e(50, 99, 0.01, 2);
  const double v = bbis_interval_logdensity(m, {-20.0, 15.0}, {25.0, -30.0}, 1.0, e);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(v, -100.0);
}

TEST(BBISInterval, MonteCarloVarianceShrinksLikeInverseM) {
  const RSFModel m(quad_fields(), {-0.1}, 5.0);
  const Point2 a{2.0, -1.0}, b{-0.5, 1.5};
  const std::vector<std::size_t> ms{5, 10, 50, 100, 200};
  std::vector<double> log_m, log_var;
  for (std::size_t bridges : ms) {
    std::vector<double> est;
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
      const BridgeEnsemble e(bridges, 20, 1.0 / 21.0, seed * 7919);
      est.push_back(bbis_interval_logdensity(m, a, b, 1.0, e));
    }
    log_m.push_back(std::log(static_cast<double>(bridges)));
    log_var.push_back(std::log(oracle::sample_variance(est)));
  }
  const double slope = oracle::ls_slope(log_m, log_var);
  EXPECT_GE(slope, -1.3);
  EXPECT_LE(slope, -0.7);
}

TEST(TrackLoglik, TwoObservationsEqualSingleInterval) {
  const RSFModel m(default_fields(), {4.0, 2.0, -0.1}, 5.0);
  const Track t = regular_track({{1.0, 2.0}, {2.5, 0.5}}, 0.5);
  LikelihoodConfig cfg;
  cfg.M = 30;
  cfg.h_target = 0.01;
  cfg.seed = 17;
  const BridgeEnsemble e(30, 49, 0.5 / 50.0, 17);
  EXPECT_EQ(bbis_track_loglik(m, t, cfg), bbis_interval_logdensity(m, t.points[0], t.points[1], 0.5, e));
}

TEST(TrackLoglik, AdditiveOverConcatenation) {
  const RSFModel m(default_fields(), {4.0, 2.0, -0.1}, 5.0);
  const Track whole = ou_track(41, 1.0, 5);
  Track first, second;
  for (std::size_t i = 0; i <= 20; ++i) {
    first.times.push_back(whole.times[i]);
    first.points.push_back(whole.points[i]);
  }
  for (std::size_t i = 20; i < whole.size(); ++i) {
    second.times.push_back(whole.times[i]);
    second.points.push_back(whole.points[i]);
  }
  LikelihoodConfig cfg;
  cfg.M = 20;
  cfg.N = 19;
  cfg.seed = 4;
  const double sum = bbis_track_loglik(m, first, cfg) + bbis_track_loglik(m, second, cfg);
  EXPECT_NEAR(bbis_track_loglik(m, whole, cfg), sum, 1e-9 * std::abs(sum));
}

TEST(TrackLoglik, DeterministicAndThreadCountInvariant) {
  const RSFModel m(default_fields(), {4.0, 2.0, -0.1}, 5.0);
  const Track t = ou_track(200, 0.5, 9);
  LikelihoodConfig cfg;
  cfg.M = 20;
  cfg.h_target = 0.05;
  const double a = bbis_track_loglik(m, t, cfg);
  const double b = bbis_track_loglik(m, t, cfg);
  EXPECT_EQ(a, b);
  cfg.threads = 4;
  EXPECT_NEAR(bbis_track_loglik(m, t, cfg), a, 1e-10);
}

TEST(TrackLoglik, IrregularGapsUsePerIntervalNodes) {
  LikelihoodConfig cfg;
  cfg.h_target = 0.01;
  EXPECT_EQ(cfg.nodes_for(1.0), 99u);
  EXPECT_EQ(cfg.nodes_for(0.05), 4u);
  EXPECT_EQ(cfg.nodes_for(0.013), 1u);
  EXPECT_EQ(cfg.nodes_for(0.001), 1u);

  Track t;
  t.times = {0.0, 0.1, 0.35, 1.35, 1.4};
  t.points = {{0, 0}, {0.3, 0.1}, {0.2, 0.9}, {-1.0, 1.5}, {-1.1, 1.4}};
  cfg.M = 10;
  const TrackLikelihood lik(t, cfg);
  EXPECT_EQ(lik.ensembles().size(), 4u);
  const RSFModel m(default_fields(), {4.0, 2.0, -0.1}, 5.0);
  EXPECT_TRUE(std::isfinite(lik(m)));
}

TEST(TrackLoglik, InitialDensityFlag) {
  const RSFModel m(quad_fields(), {-0.1}, 5.0);
  const Track t = ou_track(10, 1.0, 2);
  LikelihoodConfig cfg;
  cfg.N = 0;
  const double without = bbis_track_loglik(m, t, cfg);
  cfg.include_initial_density = true;
  EXPECT_NEAR(bbis_track_loglik(m, t, cfg) - without, m.log_rsf_unnormalized(t.points[0]), 1e-9);
}

TEST(EMTrackLoglik, ReductionAndZeroDriftExactness) {
  const RSFModel m(default_fields(), {4.0, 2.0, -0.1}, 5.0);
  const Track t = ou_track(50, 0.7, 6);
  LikelihoodConfig cfg;
  cfg.N = 0;
  EXPECT_EQ(em_track_loglik(m, t), bbis_track_loglik(m, t, cfg));

  const RSFModel flat(quad_fields(), {0.0}, 5.0);
  double exact = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i)
    exact += bm_transition_logdensity(5.0, t.points[i - 1], t.points[i], 0.7);
  EXPECT_NEAR(em_track_loglik(flat, t), exact, 1e-9 * std::abs(exact));
}

TEST(EMTrackLoglik, DiscretizationErrorGrowsWithGap) {
  const RSFModel m(quad_fields(), {-0.1}, 5.0);
  std::vector<double> gap_error;
  for (double dt : {0.1, 1.0}) {
    const Track t = ou_track(500, dt, 31);
    double exact = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i)
      exact += ou_transition_logdensity(kOU, t.points[i - 1], t.points[i], dt);
    gap_error.push_back(std::abs(em_track_loglik(m, t) - exact));
  }
  EXPECT_GT(gap_error[0], 0.0);
  EXPECT_GT(gap_error[1], gap_error[0]);
}

TEST(TrackLoglik, FiniteDifferenceGradientIsStable) {
  const auto fields = default_fields();
  const Track t = ou_track(60, 0.5, 77);
  LikelihoodConfig cfg;
  cfg.M = 20;
  cfg.h_target = 0.05;
  const TrackLikelihood lik(t, cfg);
  const std::vector<double> p0{4.0, 2.0, -0.1, std::log(5.0)};
  auto f = [&](const std::vector<double>& p) {
    return lik(RSFModel(fields, {p[0], p[1], p[2]}, std::exp(p[3])));
  };
  for (std::size_t k = 0; k < p0.size(); ++k) {
    double grads[2];
    const double steps[2] = {1e-4, 1e-5};
    for (int s = 0; s < 2; ++s) {
      auto hi = p0, lo = p0;
      hi[k] += steps[s];
      lo[k] -= steps[s];
      grads[s] = (f(hi) - f(lo)) / (2 * steps[s]);
    }
    EXPECT_NEAR(grads[0], grads[1], 1e-3 * std::abs(grads[0])) << "parameter " << k;
  }
}
