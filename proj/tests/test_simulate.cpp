#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "vhmv/oracle.hpp"
#include "vhmv/presets.hpp"
#include "vhmv/simulate.hpp"

namespace {

using namespace vhmv;

SimConfig small_config(std::size_t paths = 200, std::uint64_t seed = 11) {
  SimConfig c;
  c.n_paths = paths;
  c.n_steps = 100;
  c.seed = seed;
  return c;
}

// Classical Heston full-truncation Euler on the same increments.
std::vector<double> heston_euler(const ModelParams& p, const VariancePaths& paths, std::size_t path) {
  const std::size_t N = paths.grid.steps();
  const double h = paths.grid.step();
  std::vector<double> v(N + 1, p.V0);
  double raw = p.V0;
  for (std::size_t n = 0; n < N; ++n) {
    const double vp = std::max(raw, 0.0);
    const double dB = p.rho * paths.w1(path)[n] + std::sqrt(1.0 - p.rho * p.rho) * paths.w2(path)[n];
    raw += p.kappa * (p.phi - vp) * h + p.sigma * std::sqrt(vp) * dB;
    v[n + 1] = std::max(raw, 0.0);
  }
  return v;
}

TEST(SimConfig, Validation) {
  SimConfig c;
  c.n_paths = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SimConfig{};
  c.lifted_spacing = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SimConfig{};
  c.threads = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_scheme("lifted"), Scheme::Lifted);
  EXPECT_EQ(parse_scheme(to_string(Scheme::VolterraEuler)), Scheme::VolterraEuler);
  EXPECT_FALSE(parse_scheme("euler").has_value());
}

TEST(Brownian, SeedDeterminesIncrements) {
  std::vector<double> a1(50), a2(50), b1(50), b2(50);
  brownian_increments(5, 3, 50, 0.01, a1, a2);
  brownian_increments(5, 3, 50, 0.01, b1, b2);
  EXPECT_EQ(a1, b1);
  EXPECT_EQ(a2, b2);
  brownian_increments(5, 4, 50, 0.01, b1, b2);
  EXPECT_NE(a1, b1);
  brownian_increments(6, 3, 50, 0.01, b1, b2);
  EXPECT_NE(a1, b1);
}

TEST(VolterraEuler, Reproducible) {
  const ModelParams p = presets::fig3_example();
  SimConfig c = small_config(40);
  const auto a = simulate_variance(p, c);
  c.threads = 3;
  const auto b = simulate_variance(p, c);
  EXPECT_EQ(a.V, b.V);
  EXPECT_EQ(a.dW1, b.dW1);
  EXPECT_EQ(a.clipped_nodes, b.clipped_nodes);
}

TEST(VolterraEuler, NonnegativeAndStartsAtV0) {
  const ModelParams p = presets::fig3_example();
  const auto v = simulate_variance(p, small_config(100));
  for (std::size_t k = 0; k < v.n_paths; ++k) EXPECT_EQ(v.path(k)[0], p.V0);
  for (double x : v.V) EXPECT_GE(x, 0.0);
}

TEST(VolterraEuler, NoiselessMatchesDeterministicOracle) {
  for (double alpha : {0.6, 0.85}) {
    ModelParams p = presets::fig4(alpha);
    p.sigma = 0.0;
    p.V0 = 0.1;
    SimConfig c;
    c.n_paths = 1;
    c.n_steps = 2000;
    const auto v = simulate_variance(p, c);
    const auto ref = oracle::deterministic_volterra(p, v.grid);
    for (std::size_t n = 0; n < ref.size(); ++n) EXPECT_NEAR(v.V[n], ref[n], 1e-3) << alpha << " " << n;
  }
}

TEST(VolterraEuler, ConstantKernelIsHestonEuler) {
  ModelParams p = presets::fig3_example();
  p.kernel = KernelSpec::constant();
  p.sigma = 0.6;  // forces truncation on some paths
  const auto v = simulate_variance(p, small_config(50));
  EXPECT_GT(v.clipped_nodes, 0u);
  for (std::size_t k = 0; k < v.n_paths; ++k) {
    const auto ref = heston_euler(p, v, k);
    for (std::size_t n = 0; n < ref.size(); ++n) ASSERT_NEAR(v.path(k)[n], ref[n], 1e-10) << k << " " << n;
  }
}

TEST(VolterraEuler, StrongMeanReversion) {
  ModelParams p = presets::fig3_example();
  p.kernel = KernelSpec::constant();
  p.kappa = 25.0;
  p.V0 = p.phi;
  SimConfig c = small_config(2000);
  const auto v = simulate_variance(p, c);
  std::vector<double> vt;
  for (std::size_t k = 0; k < v.n_paths; ++k) vt.push_back(v.path(k).back());
  const double mean = std::accumulate(vt.begin(), vt.end(), 0.0) / static_cast<double>(vt.size());
  const double se = detail::sample_sd(vt) / std::sqrt(static_cast<double>(vt.size()));
  EXPECT_LE(std::abs(mean - p.phi), 3.0 * se);
}

TEST(Lifted, SingleFactorDegenerations) {
  const auto c = lifted_kernel(KernelSpec::constant(2.0), 20);
  ASSERT_EQ(c.weights.size(), 1u);
  EXPECT_EQ(c.nodes[0], 0.0);
  EXPECT_EQ(c(3.0), 2.0);
  const auto one = lifted_kernel(KernelSpec::fractional(1.0), 20);
  EXPECT_EQ(one.nodes[0], 0.0);
  const auto e = lifted_kernel(KernelSpec::exponential(1.5, 0.7), 20);
  EXPECT_EQ(e.nodes[0], 1.5);
  EXPECT_DOUBLE_EQ(e.primitive(2.0), kernel_integral(KernelSpec::exponential(1.5, 0.7), 2.0));
}

TEST(Lifted, WeightsAndNodes) {
  const double alpha = 0.6;
  const auto k = lifted_kernel(KernelSpec::fractional(alpha), 20);
  ASSERT_EQ(k.weights.size(), 20u);
  const double r = 1.0 + 10.0 * std::pow(20.0, -0.9);
  const double norm = std::tgamma(alpha) * std::tgamma(1.0 - alpha);
  for (std::size_t i = 0; i < 20; ++i) {
    const double lo = std::pow(r, static_cast<double>(i) - 10.0), hi = lo * r;
    EXPECT_GT(k.nodes[i], lo);
    EXPECT_LT(k.nodes[i], hi);
    const double mass = oracle::brute_quadrature([&](double x) { return std::pow(x, -alpha) / norm; }, lo, hi);
    EXPECT_NEAR(k.weights[i] / mass, 1.0, 1e-11);
    const double mean = oracle::brute_quadrature([&](double x) { return std::pow(x, 1.0 - alpha) / norm; }, lo, hi);
    EXPECT_NEAR(k.nodes[i] / (mean / mass), 1.0, 1e-11);
  }
}

TEST(Lifted, KernelErrorShrinksAsFactorsDouble) {
  for (double alpha : {0.6, 0.8}) {
    const KernelSpec ks = KernelSpec::fractional(alpha);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {5u, 10u, 20u, 40u, 80u}) {
      const double e = lifted_l2_error(ks, lifted_kernel(ks, n), 0.01, 1.0).absolute;
      EXPECT_LT(e, prev) << alpha << " " << n;
      prev = e;
    }
  }
}

TEST(Lifted, CoarseLiftWarns) {
  const ModelParams p = presets::fig3_example();
  SimConfig c = small_config(2);
  c.scheme = Scheme::Lifted;
  c.lifted_factors = 2;
  EXPECT_FALSE(simulate_variance(p, c).warnings.empty());
  c.lifted_factors = 20;
  c.lifted_tolerance = 0.5;
  EXPECT_TRUE(simulate_variance(p, c).warnings.empty());
}

TEST(Lifted, AlphaOneIsHestonEuler) {
  ModelParams p = presets::fig3_example();
  p.kernel = KernelSpec::fractional(1.0);
  SimConfig c = small_config(30);
  c.scheme = Scheme::Lifted;
  const auto v = simulate_variance(p, c);
  for (std::size_t k = 0; k < v.n_paths; ++k) {
    const auto ref = heston_euler(p, v, k);
    for (std::size_t n = 0; n < ref.size(); ++n) ASSERT_NEAR(v.path(k)[n], ref[n], 1e-10);
  }
}

TEST(Lifted, MeanPathMatchesVolterraEuler) {
  const ModelParams p = presets::fig3_example();
  SimConfig c;
  c.n_paths = 2000;
  c.seed = 21;
  const auto direct = simulate_variance(p, c);
  c.scheme = Scheme::Lifted;
  c.seed = 22;
  const auto lifted = simulate_variance(p, c);
  const auto a = bootstrap_bands(direct.V, c.n_paths, direct.nodes(), {200, 0.95, 1});
  const auto b = bootstrap_bands(lifted.V, c.n_paths, lifted.nodes(), {200, 0.95, 2});
  for (std::size_t n = 25; n < direct.nodes(); n += 25) {
    const double se = std::hypot(a.std_error[n], b.std_error[n]);
    EXPECT_LE(std::abs(a.mean[n] - b.mean[n]), 3.0 * se) << n;
  }
}

double mean_pvariation(double alpha, Scheme scheme) {
  ModelParams p = presets::fig3_example();
  p.kernel = KernelSpec::fractional(alpha);
  SimConfig c;
  c.n_paths = 200;
  c.n_steps = 250;
  c.seed = 3;
  c.scheme = scheme;
  const auto v = simulate_variance(p, c);
  double s = 0.0;
  for (std::size_t k = 0; k < v.n_paths; ++k) s += p_variation(v.path(k), 2.0);
  return s / static_cast<double>(v.n_paths);
}

TEST(Roughness, PVariationGrowsAsAlphaDrops) {
  for (Scheme s : {Scheme::Lifted, Scheme::VolterraEuler}) {
    const double a6 = mean_pvariation(0.6, s), a8 = mean_pvariation(0.8, s), a10 = mean_pvariation(1.0, s);
    EXPECT_GT(a6, a8);
    EXPECT_GT(a8, a10);
  }
  EXPECT_THROW(p_variation(std::vector<double>{1.0, 2.0}, 0.5), DomainError);
  EXPECT_DOUBLE_EQ(p_variation(std::vector<double>{0.0, 1.0, -1.0}, 2.0), 5.0);
}

TEST(Truncation, Fig4FractionSmall) {
  for (double alpha : presets::fig4_alpha_grid()) {
    SimConfig c;
    c.n_paths = 500;
    c.seed = 8;
    EXPECT_LT(simulate_variance(presets::fig4(alpha), c).clipped_fraction(), 0.05) << alpha;
  }
}

// ---------------------------------------------------------------- forward variance

TEST(ForwardVariance, NoiselessCurveIsFrozen) {
  ModelParams p = presets::fig4(0.6);
  p.sigma = 0.0;
  const UniformGrid g(p.T, 50);
  const auto table = resolvent_table(p, g);
  const auto start = xi0(p, g);
  auto xi = start;
  for (std::size_t n = 0; n < g.steps(); ++n) {
    EXPECT_EQ(update_forward_variance(xi, table, p, 0.3, 0.1), 0u);
    EXPECT_EQ(xi.anchor, n + 1);
    for (std::size_t m = xi.anchor; m < g.size(); ++m) EXPECT_EQ(xi.at(m), start.at(m));
  }
  EXPECT_THROW(update_forward_variance(xi, table, p, 0.3, 0.1), DomainError);
}

TEST(ForwardVariance, ConstantKernelMatchesClosedForm) {
  // xi_t(s) = e^{-lambda(s-t)} V_t + kappa phi/lambda (1 - e^{-lambda(s-t)}) for K = 1, along the Euler path
  ModelParams p = presets::fig4();
  p.kernel = KernelSpec::constant();
  const UniformGrid g(p.T, 40);
  const auto table = resolvent_table(p, g);
  auto xi = xi0(p, g);
  const double lambda = p.lambda();
  EXPECT_NEAR(table[3], std::exp(-lambda * g.time(3)), 1e-15);
  const double dB = 0.05, V = 0.04;
  update_forward_variance(xi, table, p, V, dB);
  const double shock = p.sigma * std::sqrt(V) * (dB + 2.0 * p.theta * p.rho * std::sqrt(V) * g.step());
  for (std::size_t m = 1; m < g.size(); ++m) {
    const double s = g.time(m);
    const double base = std::exp(-lambda * s) * p.V0 + p.kappa * p.phi / lambda * (1.0 - std::exp(-lambda * s));
    EXPECT_NEAR(xi.at(m), base + std::exp(-lambda * (s - 0.0)) * shock, 1e-15);
  }
}

TEST(ForwardVariance, ClipsNegativeValues) {
  const ModelParams p = presets::fig4(0.6);
  const UniformGrid g(p.T, 20);
  auto xi = xi0(p, g);
  EXPECT_GT(update_forward_variance(xi, resolvent_table(p, g), p, 1.0, -50.0), 0u);
  for (double v : xi.values) EXPECT_GE(v, 0.0);
}

// ---------------------------------------------------------------- portfolio

MVSolution mv_for(const ModelParams& p, std::size_t steps) {
  MVOptions o;
  o.steps = steps;
  return solve_mv(p, o);
}

TEST(Portfolio, ZeroControlCompoundsRiskFree) {
  ModelParams p = presets::fig3_example();
  p.rate = RateCurve({0.0, 0.3, 0.7}, {0.01, 0.04, 0.02});
  const SimConfig c = small_config(20);
  PortfolioOptions o;
  o.zero_control = true;
  o.track_M = false;
  const auto b = simulate_portfolio(p, mv_for(p, 200), c, o);
  for (double x : b.terminal_wealth()) EXPECT_NEAR(x / (p.x0 * std::exp(p.rate_integral())), 1.0, 1e-14);
  for (double u : b.u) EXPECT_EQ(u, 0.0);
  EXPECT_TRUE(b.M.empty());
}

TEST(Portfolio, StrategyConsistentWithState) {
  const ModelParams p = presets::fig3_example();
  const auto mv = mv_for(p, 200);
  const auto b = simulate_portfolio(p, mv, small_config(10));
  for (std::size_t k = 0; k < b.n_paths; ++k)
    for (std::size_t n = 0; n < b.nodes(); n += 7) {
      const double t = b.grid.time(n), v = b.at(b.V, k, n), x = b.at(b.X, k, n);
      EXPECT_NEAR(b.at(b.u, k, n), optimal_u(mv, t, v, x), 1e-12);
      if (v > 0.0) {
        EXPECT_NEAR(b.at(b.pi, k, n), optimal_pi(mv, t, v, x), 1e-12);
      }
    }
}

TEST(Portfolio, StockLogEuler) {
  const ModelParams p = presets::fig3_example();
  SimConfig c = small_config(3);
  c.s0 = 2.0;
  const auto b = simulate_portfolio(p, mv_for(p, 200), c);
  const double h = b.grid.step();
  for (std::size_t k = 0; k < b.n_paths; ++k) {
    double logs = std::log(2.0);
    for (std::size_t n = 0; n < b.grid.steps(); ++n) {
      const double v = b.at(b.V, k, n);
      logs += p.rate.integral(b.grid.time(n), b.grid.time(n + 1)) + (p.theta - 0.5) * v * h +
              std::sqrt(v) * b.dW1[k * b.grid.steps() + n];
    }
    EXPECT_NEAR(std::log(b.at(b.S, k, b.grid.steps())), logs, 1e-12);
  }
}

TEST(Portfolio, MPathBounds) {
  for (double alpha : {0.6, 1.0}) {
    const ModelParams p = presets::fig4(alpha);
    SimConfig c = small_config(100);
    const auto b = simulate_portfolio(p, mv_for(p, 200), c);
    for (std::size_t k = 0; k < b.n_paths; ++k) {
      for (std::size_t n = 0; n < b.grid.steps(); ++n) {
        const double m = b.at(b.M, k, n);
        ASSERT_GT(m, 0.0);
        ASSERT_LT(m, 2.0 * std::exp(2.0 * p.rate.integral(b.grid.time(n), p.T)));
      }
      ASSERT_EQ(b.at(b.M, k, b.grid.steps()), 2.0);
    }
    EXPECT_NEAR(b.at(b.M, 0, 0), solve_mv(p).M0, 1e-4);
  }
}

TEST(Portfolio, RequiresRefiningPsiGrid) {
  const ModelParams p = presets::fig4(0.7);
  EXPECT_THROW(simulate_portfolio(p, mv_for(p, 150), small_config(2)), DomainError);
  PortfolioOptions o;
  o.track_M = false;
  EXPECT_NO_THROW(simulate_portfolio(p, mv_for(p, 150), small_config(2), o));
}

TEST(Portfolio, MeanWealthReachesTarget) {
  const ModelParams p = presets::fig3_example();
  const auto mv = mv_for(p, 500);
  SimConfig c;
  c.n_paths = 1000;
  c.seed = 2024;
  PortfolioOptions o;
  o.track_M = false;
  const auto b = simulate_portfolio(p, mv, c, o);
  BootstrapOptions bo;
  bo.resamples = 400;
  const auto s = terminal_stats(b.terminal_wealth(), mv.zeta_star, bo);
  EXPECT_LE(std::abs(s.mean.value - p.c), 3.0 * s.mean.std_error);
  EXPECT_LE(std::abs(s.variance.value - mv.variance_opt), 3.0 * s.variance.std_error);
  EXPECT_LE(std::abs(s.square_error.value - mv.terminal_square_error()), 3.0 * s.square_error.std_error);
}

TEST(Portfolio, Reproducible) {
  const ModelParams p = presets::fig3_example();
  const auto mv = mv_for(p, 200);
  SimConfig c = small_config(30);
  const auto a = simulate_portfolio(p, mv, c);
  c.threads = 4;
  const auto b = simulate_portfolio(p, mv, c);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.M, b.M);
  EXPECT_EQ(a.S, b.S);
}

// ---------------------------------------------------------------- bootstrap and tests

TEST(Bootstrap, IdenticalPathsGiveZeroWidth) {
  std::vector<double> data;
  for (int p = 0; p < 20; ++p)
    for (int n = 0; n < 5; ++n) data.push_back(0.5 * n);
  const auto b = bootstrap_bands(data, 20, 5);
  for (int n = 0; n < 5; ++n) {
    EXPECT_EQ(b.lower[n], b.upper[n]);
    EXPECT_EQ(b.mean[n], 0.5 * n);
    EXPECT_EQ(b.std_error[n], 0.0);
  }
}

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> d;
  std::vector<double> x(n);
  for (auto& v : x) v = d(eng);
  return x;
}

TEST(Bootstrap, CltHalfWidth) {
  const auto x = normals(3000, 99);
  const auto b = bootstrap_bands(x, 3000, 1);
  const double half = 0.5 * (b.upper[0] - b.lower[0]);
  EXPECT_NEAR(half / (1.96 / std::sqrt(3000.0)), 1.0, 0.15);
  EXPECT_LE(b.lower[0], b.mean[0]);
  EXPECT_GE(b.upper[0], b.mean[0]);
}

TEST(Bootstrap, StableUnderDoubling) {
  const auto x = normals(3000, 5);
  BootstrapOptions a, d;
  a.resamples = 1000;
  d.resamples = 2000;
  d.seed = 1;
  const auto ba = bootstrap_bands(x, 3000, 1, a), bd = bootstrap_bands(x, 3000, 1, d);
  EXPECT_NEAR((bd.upper[0] - bd.lower[0]) / (ba.upper[0] - ba.lower[0]), 1.0, 0.05);
}

TEST(Bootstrap, BadArguments) {
  EXPECT_THROW(bootstrap_bands(std::vector<double>{1.0}, 1, 1), DomainError);
  BootstrapOptions o;
  o.level = 1.0;
  EXPECT_THROW(bootstrap_bands(std::vector<double>{1.0, 2.0}, 2, 1, o), DomainError);
}

TEST(TerminalStats, MatchSampleMoments) {
  const auto x = normals(500, 4);
  const auto s = terminal_stats(x, 0.3);
  double m = 0.0;
  for (double v : x) m += v;
  m /= 500.0;
  EXPECT_NEAR(s.mean.value, m, 1e-14);
  EXPECT_NEAR(s.mean.std_error, detail::sample_sd(x) / std::sqrt(500.0), 0.1 * s.mean.std_error);
  EXPECT_NEAR(s.square_error.value, s.variance.value * 499.0 / 500.0 + (m - 0.3) * (m - 0.3), 1e-12);
}

TEST(Ks, IdenticalAndShiftedSamples) {
  const auto x = normals(1000, 1);
  const auto same = ks_two_sample(x, x);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  auto y = normals(1000, 2);
  EXPECT_GT(ks_two_sample(x, y).p_value, 0.01);
  for (auto& v : y) v += 0.5;
  EXPECT_LT(ks_two_sample(x, y).p_value, 1e-6);
  EXPECT_NEAR(ks_two_sample({1.0, 2.0}, {3.0, 4.0}).statistic, 1.0, 0.0);
}

TEST(Ks, SchemesAgreeForConstantKernel) {
  ModelParams p = presets::fig3_example();
  p.kernel = KernelSpec::constant();
  const auto mv = mv_for(p, 500);
  SimConfig c;
  c.n_paths = 3000;
  c.seed = 17;
  PortfolioOptions o;
  o.track_M = false;
  const auto a = simulate_portfolio(p, mv, c, o);
  c.scheme = Scheme::Lifted;
  c.seed = 18;
  const auto b = simulate_portfolio(p, mv, c, o);
  EXPECT_GT(ks_two_sample(a.terminal_wealth(), b.terminal_wealth()).p_value, 0.01);
}

TEST(Summary, BandsOrdered) {
  const ModelParams p = presets::fig3_example();
  BootstrapOptions bo;
  bo.resamples = 200;
  const auto mv = mv_for(p, 200);
  const auto s = summarize(simulate_portfolio(p, mv, small_config(100)), mv.zeta_star, bo);
  ASSERT_EQ(s.times.size(), 101u);
  for (const BandCurve* c : {&s.wealth, &s.strategy, &s.amount, &s.variance})
    for (std::size_t n = 0; n < s.times.size(); ++n) {
      EXPECT_LE(c->lower[n], c->mean[n]);
      EXPECT_LE(c->mean[n], c->upper[n]);
    }
}

}  // namespace
