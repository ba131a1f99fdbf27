#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "sdprel/gp.hpp"
#include "sdprel/tuner.hpp"
#include "support/oracles.hpp"

using namespace sdprel;

namespace {

GpState one_dim_state(std::vector<double> xs, std::vector<double> ys, double ls, double sv, double noise) {
  GpState s;
  for (double x : xs) s.X.push_back({x});
  s.y = std::move(ys);
  s.kernel.log_lengthscales = {std::log(ls)};
  s.kernel.log_signal_var = std::log(sv);
  s.kernel.log_noise_var = std::log(noise);
  return s;
}

SearchSpace unit_interval() { return SearchSpace({Dimension::real("x", 0.0, 1.0)}); }

}  // namespace

TEST(GpPosterior, EmptyStateReturnsPrior) {
  GpState s;
  s.kernel = KernelParams::defaults(2);
  s.kernel.log_signal_var = std::log(2.5);
  auto p = gp_posterior(s, {0.3, 0.7});
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_NEAR(p.sigma, std::sqrt(2.5), 1e-15);
}

TEST(GpPosterior, InterpolatesObservationsWithTinyNoise) {
  auto s = one_dim_state({0.1, 0.5, 0.9}, {1.0, -2.0, 0.5}, 0.3, 1.0, 1e-10);
  for (std::size_t i = 0; i < 3; ++i) {
    auto p = gp_posterior(s, s.X[i]);
    EXPECT_NEAR(p.mean, s.y[i], 1e-6);
    EXPECT_LT(p.sigma, 1e-3);
  }
}

TEST(GpPosterior, MatchesExplicitThreeByThreeSolve) {
  const double ls = 0.4, sv = 1.7, noise = 1e-6;
  const std::vector<double> xs{0.1, 0.45, 0.8}, ys{0.3, 1.1, -0.4};
  auto s = one_dim_state(xs, ys, ls, sv, noise);

  // standardize with the population standard deviation
  const double mean = (ys[0] + ys[1] + ys[2]) / 3;
  double var = 0;
  for (double y : ys) var += (y - mean) * (y - mean) / 3;
  const double sd = std::sqrt(var);
  std::array<std::array<double, 3>, 3> K{};
  std::array<double, 3> z{};
  for (int i = 0; i < 3; ++i) {
    z[static_cast<std::size_t>(i)] = (ys[static_cast<std::size_t>(i)] - mean) / sd;
    for (int j = 0; j < 3; ++j)
      K[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          oracle::matern52_reference(xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)], ls, sv) +
          (i == j ? noise : 0.0);
  }
  const auto alpha = oracle::cramer_solve(K, z);
  for (double x : {0.0, 0.3, 0.45, 0.62, 1.0}) {
    std::array<double, 3> k{};
    for (std::size_t i = 0; i < 3; ++i) k[i] = oracle::matern52_reference(x - xs[i], ls, sv);
    const auto v = oracle::cramer_solve(K, k);
    const double mu = mean + sd * (k[0] * alpha[0] + k[1] * alpha[1] + k[2] * alpha[2]);
    const double sigma = sd * std::sqrt(std::max(sv - (k[0] * v[0] + k[1] * v[1] + k[2] * v[2]), 0.0));
    auto p = gp_posterior(s, {x});
    EXPECT_NEAR(p.mean, mu, 1e-10) << x;
    EXPECT_NEAR(p.sigma, sigma, 1e-7) << x;
  }
}

TEST(GpPosterior, PosteriorSigmaNeverExceedsPrior) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    GpState s;
    s.kernel = KernelParams::defaults(3);
    for (int i = 0; i < 8; ++i) {
      s.X.push_back({u(rng), u(rng), u(rng)});
      s.y.push_back(u(rng));
    }
    GpPosterior post(s);
    for (int q = 0; q < 20; ++q) {
      auto p = post.predict_standardized({u(rng), u(rng), u(rng)});
      EXPECT_GE(p.sigma, 0.0);
      EXPECT_LE(p.sigma, 1.0 + 1e-12);
    }
  }
}

TEST(GpPosterior, DuplicatePointsNeedJitter) {
  auto s = one_dim_state({0.5, 0.5, 0.5}, {1, 2, 3}, 0.5, 1.0, 1e-300);
  GpPosterior post(s);
  EXPECT_GT(post.jitter(), 0.0);
  EXPECT_LE(post.jitter(), kMaxJitter);
}

TEST(GpPosterior, LikelihoodGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  GpState s;
  s.kernel.log_lengthscales = {std::log(0.3), std::log(0.8)};
  s.kernel.log_signal_var = std::log(1.4);
  s.kernel.log_noise_var = std::log(0.05);
  for (int i = 0; i < 7; ++i) {
    s.X.push_back({u(rng), u(rng)});
    s.y.push_back(std::sin(5 * s.X.back()[0]) + s.X.back()[1]);
  }
  const auto g = GpPosterior(s).lml_gradient();
  auto theta = [&](GpState& st) -> std::vector<double*> {
    return {&st.kernel.log_lengthscales[0], &st.kernel.log_lengthscales[1], &st.kernel.log_signal_var,
            &st.kernel.log_noise_var};
  };
  const double h = 1e-5;
  for (std::size_t i = 0; i < 4; ++i) {
    GpState up = s, down = s;
    *theta(up)[i] += h;
    *theta(down)[i] -= h;
    const double fd = (GpPosterior(up).log_marginal_likelihood() - GpPosterior(down).log_marginal_likelihood()) / (2 * h);
    EXPECT_NEAR(g[i], fd, 1e-6 + 1e-5 * std::abs(fd)) << i;
  }
}

TEST(GpPosterior, FittingDoesNotLowerLikelihood) {
  std::mt19937_64 data_rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  GpState s;
  s.kernel = KernelParams::defaults(1);
  for (int i = 0; i < 12; ++i) {
    s.X.push_back({u(data_rng)});
    s.y.push_back(-(s.X.back()[0] - 0.3) * (s.X.back()[0] - 0.3));
  }
  const double before = GpPosterior(s).log_marginal_likelihood();
  Rng rng(1);
  GpState fitted = s;
  fitted.kernel = fit_kernel(s, rng);
  EXPECT_GE(GpPosterior(fitted).log_marginal_likelihood(), before);
  EXPECT_GE(fitted.kernel.log_noise_var, std::log(kNoiseFloor) - 1e-12);
}

TEST(ExpectedImprovement, ClosedFormValues) {
  EXPECT_EQ(expected_improvement(0.5, 0.0, 1.0, 0.0), 0.0);
  EXPECT_EQ(expected_improvement(1.0, 0.0, 1.0, 0.0), 0.0);
  EXPECT_NEAR(expected_improvement(1.5, 0.0, 1.0, 0.0), 0.5, 1e-15);
  EXPECT_NEAR(expected_improvement(3.0, 2.0, 3.0, 0.0), 2.0 / std::sqrt(2 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(expected_improvement(3.0, 2.0, 3.0, 0.0), 0.7979, 1e-4);
}

TEST(ExpectedImprovement, AgreesWithMonteCarlo) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2, 2), s(0.05, 2);
  for (int trial = 0; trial < 5; ++trial) {
    const double mu = u(rng), sigma = s(rng), best = u(rng), xi = 0.01;
    const double mc = oracle::monte_carlo_ei(mu, sigma, best, xi, 1000000, rng);
    EXPECT_NEAR(expected_improvement(mu, sigma, best, xi), mc, 1e-2);
  }
}

TEST(ExpectedImprovement, MonotoneInMeanAndSigma) {
  double prev = 0.0;
  for (double mu = -3; mu <= 3; mu += 0.25) {
    const double ei = expected_improvement(mu, 0.7, 0.0);
    EXPECT_GE(ei, prev);
    EXPECT_GE(ei, 0.0);
    prev = ei;
  }
  prev = 0.0;
  for (double sigma = 0.1; sigma <= 3; sigma += 0.1) {
    const double ei = expected_improvement(0.0, sigma, 0.5);
    EXPECT_GT(ei, prev);
    prev = ei;
  }
}

TEST(Tuner, SingletonSpaceEvaluatesOnce) {
  SearchSpace space({Dimension::categorical("c", {"only"}), Dimension::integer("i", 4, 4)});
  int calls = 0;
  TuneOptions opt;
  opt.iterations = 20;
  auto r = tune([&](const Point&) { ++calls; return 0.7; }, space, opt);
  EXPECT_EQ(calls, 1);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.best, (Point{0, 4}));
  EXPECT_EQ(r.best_value, 0.7);
}

TEST(Tuner, FindsOneDimensionalOptimum) {
  TuneOptions opt;
  opt.iterations = 30;
  opt.seed = 4;
  int calls = 0;
  auto r = tune([&](const Point& p) { ++calls; return -(p[0] - 0.3) * (p[0] - 0.3); }, unit_interval(), opt);
  EXPECT_EQ(calls, 30);
  EXPECT_EQ(r.trace.size(), 30u);
  EXPECT_NEAR(r.best[0], 0.3, 0.05);
}

TEST(Tuner, DeterministicTraceAndMonotoneBest) {
  TuneOptions opt;
  opt.iterations = 15;
  opt.seed = 21;
  auto f = [](const Point& p) { return std::sin(6 * p[0]) * p[1] - p[2]; };
  SearchSpace space({Dimension::real("a", 0, 1), Dimension::log_real("b", 0.1, 10), Dimension::integer("c", 0, 3)});
  auto a = tune(f, space, opt);
  auto b = tune(f, space, opt);
  EXPECT_EQ(format_trace(space, a), format_trace(space, b));
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].iteration, static_cast<int>(i) + 1);
    EXPECT_NO_THROW(space.check(a.trace[i].point));
    if (i > 0) { EXPECT_GE(a.trace[i].best_so_far, a.trace[i - 1].best_so_far); }
  }
  opt.seed = 22;
  EXPECT_NE(format_trace(space, tune(f, space, opt)), format_trace(space, a));
}

TEST(Tuner, FailedEvaluationsAreRecorded) {
  TuneOptions opt;
  opt.iterations = 14;
  opt.seed = 8;
  auto r = tune(
      [](const Point& p) {
        if (p[0] > 0.6) throw TooFewInstances("synthetic failure");
        return p[0];
      },
      unit_interval(), opt);
  ASSERT_EQ(r.trace.size(), 14u);
  int failures = 0;
  for (const auto& e : r.trace)
    if (e.failed) {
      ++failures;
      EXPECT_TRUE(std::isinf(e.value));
      EXPECT_EQ(e.error, "synthetic failure");
    }
  EXPECT_GT(failures, 0);
  EXPECT_TRUE(std::isfinite(r.best_value));
  EXPECT_LE(r.best[0], 0.6);
  EXPECT_NE(format_trace(unit_interval(), r).find("-inf"), std::string::npos);
}

TEST(Tuner, HaltonDesignCoversTheCube) {
  Rng rng(1);
  auto pts = initial_design(SearchSpace({Dimension::real("a", 0, 1), Dimension::real("b", 0, 1)}), 16, rng);
  ASSERT_EQ(pts.size(), 16u);
  // every quarter of each axis is visited
  for (std::size_t d = 0; d < 2; ++d) {
    std::set<int> cells;
    for (const auto& p : pts) cells.insert(static_cast<int>(p[d] * 4));
    EXPECT_EQ(cells.size(), 4u);
  }
}
