#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "expoarb/error.hpp"
#include "expoarb/rng.hpp"
#include "expoarb/sde.hpp"
#include "expoarb/stats.hpp"

using namespace expoarb;

TEST(TimeGrid, EndsExactlyAtHorizon) {
  const sde::TimeGrid g(3.0, 7);
  EXPECT_EQ(g.n_points(), 8u);
  EXPECT_DOUBLE_EQ(g.time(0), 0.0);
  EXPECT_EQ(g.time(7), 3.0);
  const auto h = sde::TimeGrid::with_step(1.0, 0.3);
  EXPECT_EQ(h.n_steps(), 3u);
  EXPECT_DOUBLE_EQ(h.dt(), 1.0 / 3.0);
}

TEST(TimeGrid, RejectsDegenerateGrids) {
  EXPECT_THROW(sde::TimeGrid(1.0, 1), ConfigError);
  EXPECT_THROW(sde::TimeGrid(0.0, 10), ConfigError);
}

TEST(Rng, StreamsDependOnlyOnKey) {
  NormalStream a(7, 3, StreamDomain::kPrice), b(7, 3, StreamDomain::kPrice);
  NormalStream c(7, 4, StreamDomain::kPrice), d(7, 3, StreamDomain::kOrthogonal);
  int same_c = 0, same_d = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = a(), y = b();
    EXPECT_EQ(x, y);
    same_c += x == c();
    same_d += x == d();
  }
  EXPECT_EQ(same_c, 0);
  EXPECT_EQ(same_d, 0);
}

TEST(Rng, NormalMoments) {
  NormalStream n(11, 0, StreamDomain::kPrice);
  std::vector<double> x(200000);
  for (auto& v : x) v = n();
  const auto m = stats::mean_estimate(x);
  EXPECT_NEAR(m.mean, 0.0, 4.0 * m.se);
  EXPECT_NEAR(m.variance, 1.0, 0.02);
}

TEST(Stats, TailMatchesErfc) {
  for (double x : {-2.0, 0.0, 0.5, 4.5, 10.0}) {
    EXPECT_NEAR(stats::normal_tail(x), 0.5 * std::erfc(x / std::sqrt(2.0)), 1e-16);
  }
  EXPECT_NEAR(stats::normal_tail(0.5), 0.3085375387259869, 1e-15);
}

TEST(Models, ValidateCatchesBadShapes) {
  auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  EXPECT_NO_THROW(sde::validate(m));
  m.initial_state = {1.0, 2.0};
  EXPECT_THROW(sde::validate(m), ConfigError);
  auto o = sde::ou_phi_model(1.0, 1.0, 1.0, 0.2, 1.0);
  EXPECT_NO_THROW(sde::validate(o));
  o.phi = nullptr;
  EXPECT_THROW(sde::validate(o), ConfigError);
}

TEST(Simulate, DecompositionIsExact) {
  const auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  const sde::TimeGrid g(5.0, 500);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto p = sde::simulate_path(m, g, 3, i);
    for (std::size_t k = 0; k < g.n_points(); ++k) {
      EXPECT_EQ(p.S[k], m.initial_state[0] + p.M[k] + p.A[k]);
    }
  }
}

TEST(Simulate, ConstantPhiTradeoffIsClosedForm) {
  const auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  const sde::TimeGrid g(10.0, 1000);
  const auto p = sde::simulate_path(m, g, 1, 0);
  for (std::size_t k = 0; k < g.n_points(); ++k) {
    EXPECT_DOUBLE_EQ(p.K[k], 0.36 * g.time(k));
  }
  EXPECT_EQ(p.K.back(), 0.36 * 10.0);
}

TEST(Simulate, OuTradeoffIsIntegratedPhiSquared) {
  const auto m = sde::ou_phi_model(1.0, 1.0, 1.0, 0.2, 1.0);
  const sde::TimeGrid g(4.0, 400);
  const auto p = sde::simulate_path(m, g, 5, 2);
  double k = 0.0;
  for (std::size_t j = 0; j < g.n_steps(); ++j) {
    const double y = p.factors[j];
    k += y * y * g.dt();
    EXPECT_NEAR(p.K[j + 1], k, 1e-12);
  }
}

TEST(Simulate, OuFactorIsEulerOu) {
  // Independent Euler oracle on the same increments.
  const double kappa = 2.0, eta = 0.5;
  const auto m = sde::ou_phi_model(kappa, eta, 0.7, 0.2, 1.0);
  const sde::TimeGrid g(2.0, 200);
  const auto p = sde::simulate_path(m, g, 9, 1);
  double y = 0.7;
  for (std::size_t j = 0; j < g.n_steps(); ++j) {
    EXPECT_NEAR(p.factors[j], y, 1e-12);
    y += -kappa * y * g.dt() + eta * p.dW[j * 2 + 1];
  }
}

TEST(Simulate, GbmMeanUnderP) {
  // E[S_T] = S0 exp(vol phi T) under P.
  const auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  const sde::TimeGrid g(1.0, 200);
  const auto st = sde::map_paths(m, g, 20000, 4, 1,
                                 [](const sde::PathBundle& p, std::size_t) { return p.S.back(); });
  const auto e = stats::mean_estimate(st);
  EXPECT_NEAR(e.mean, std::exp(0.12), 3.0 * e.se + 1e-3);
}

TEST(Simulate, ThreadCountDoesNotChangeResults) {
  const auto m = sde::ou_phi_model(1.0, 1.0, 1.0, 0.2, 1.0);
  const sde::TimeGrid g(2.0, 100);
  auto last = [](const sde::PathBundle& p, std::size_t) { return p.S.back() + p.K.back(); };
  const auto a = sde::map_paths(m, g, 257, 42, 1, last);
  const auto b = sde::map_paths(m, g, 257, 42, 3, last);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  const auto e1 = sde::simulate_paths(m, g, 10, 42, 1);
  const auto e2 = sde::simulate_paths(m, g, 10, 42, 4);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(e1.paths[i].S, e2.paths[i].S);
}

TEST(Simulate, WorkerExceptionsPropagate) {
  const auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  const sde::TimeGrid g(1.0, 10);
  auto boom = [](const sde::PathBundle&, std::size_t i) -> int {
    if (i == 5) throw std::runtime_error("boom");
    return 0;
  };
  EXPECT_THROW(sde::map_paths(m, g, 20, 1, 2, boom), std::runtime_error);
}

TEST(Simulate, ExplosionNamesPathAndStep) {
  auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  m.sigma = [](sde::StateView x, std::span<double> out) { out[0] = 1e200 * x[0]; };
  const sde::TimeGrid g(1.0, 100);
  try {
    sde::simulate_path(m, g, 1, 3);
    FAIL() << "expected SimulationError";
  } catch (const SimulationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("path 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("step"), std::string::npos) << msg;
  }
}

TEST(StochasticExponential, MatchesEulerForLinearSde) {
  // dZ = Z dL solved by Euler on a fine grid converges to exp(L - <L>/2).
  NormalStream n(3, 0, StreamDomain::kPrice);
  const std::size_t steps = 200000;
  const double dt = 1.0 / static_cast<double>(steps);
  const double vol = 0.8;
  std::vector<double> L(steps + 1, 0.0), br(steps + 1, 0.0);
  double z_euler = 1.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double dl = vol * std::sqrt(dt) * n();
    z_euler += z_euler * dl;
    L[k + 1] = L[k] + dl;
    br[k + 1] = br[k] + vol * vol * dt;
  }
  const auto z = sde::stochastic_exponential(L, br);
  EXPECT_EQ(z[0], 1.0);
  EXPECT_NEAR(z.back(), z_euler, 5e-3 * z.back());
  EXPECT_THROW(sde::stochastic_exponential(L, std::span<const double>(br).subspan(1)), ShapeError);
}

TEST(QuadraticVariation, BrownianPathApproachesTime) {
  NormalStream n(8, 0, StreamDomain::kPrice);
  const std::size_t steps = 100000;
  std::vector<double> w(steps + 1, 0.0);
  for (std::size_t k = 0; k < steps; ++k) w[k + 1] = w[k] + std::sqrt(2.0 / steps) * n();
  const auto qv = sde::realized_quadratic_variation(w);
  EXPECT_NEAR(qv.back(), 2.0, 0.03);
  EXPECT_THROW(sde::realized_quadratic_variation(std::vector<double>{1.0}), ShapeError);
}

TEST(Glue, MatchesBruteForceAssignment) {
  const std::size_t u = 4;
  std::vector<std::vector<double>> seg(3);
  for (std::size_t k = 0; k < 3; ++k) {
    seg[k].resize((k + 1) * u + 1);
    for (std::size_t j = 0; j < seg[k].size(); ++j) seg[k][j] = 100.0 * (k + 1) + j;
  }
  const auto glued = sde::glue_market_price_of_risk(seg, u);
  ASSERT_EQ(glued.size(), 3 * u + 1);
  for (std::size_t j = 0; j < glued.size(); ++j) {
    const double t = static_cast<double>(j) / u;
    std::size_t k = 1;
    while (static_cast<double>(k) < t) ++k;  // t in (k-1, k]
    EXPECT_EQ(glued[j], seg[k - 1][j]) << "j = " << j;
  }
  seg[2].resize(5);
  EXPECT_THROW(sde::glue_market_price_of_risk(seg, u), ConfigError);
}

TEST(Tradeoff, FromLambdaAndRealizedBracket) {
  const std::vector<double> lam = {1.0, 2.0, 3.0};
  const std::vector<double> db = {0.5, 0.25};
  const auto k = sde::tradeoff_from_lambda(lam, db);
  EXPECT_EQ(k, (std::vector<double>{0.0, 0.5, 1.5}));
  EXPECT_THROW(sde::tradeoff_from_lambda(lam, lam), ShapeError);

  // lambda^2 d<M> for GBM equals phi^2 dt; the realised bracket estimate converges.
  const auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  const sde::TimeGrid g(4.0, 40000);
  const auto p = sde::simulate_path(m, g, 2, 0);
  const auto kr = sde::tradeoff_from_realized_bracket(p, m);
  EXPECT_NEAR(kr.back(), p.K.back(), 0.05 * p.K.back());
}

TEST(MinimalMartingaleMeasure, RemovesTradedDrift) {
  const auto m = sde::ou_phi_model(1.0, 1.0, 1.0, 0.2, 1.0);
  const auto q = sde::minimal_martingale_measure(m);
  std::vector<double> state = {1.0, 0.8}, ph(2);
  q.phi(state, ph);
  EXPECT_EQ(ph[0], 0.0);
  // Under Q the S-martingale has mean S0.
  const sde::TimeGrid g(1.0, 100);
  const auto st = sde::map_paths(q, g, 20000, 6, 1,
                                 [](const sde::PathBundle& p, std::size_t) { return p.S.back(); });
  const auto e = stats::mean_estimate(st);
  EXPECT_NEAR(e.mean, 1.0, 3.0 * e.se);
}
