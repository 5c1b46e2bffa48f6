#include <gtest/gtest.h>

#include <cmath>

#include "expoarb/error.hpp"
#include "expoarb/measure.hpp"
#include "expoarb/sde.hpp"
#include "expoarb/stats.hpp"

using namespace expoarb;

namespace {

double tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

struct PqRun {
  measure::PqEstimate pq;
  stats::MeanEstimate stopped_mean;
  double stopped_var = 0.0;
};

PqRun run_pq(const sde::ModelSpec& m, double T, std::size_t per_unit, std::size_t n, double c1,
             double delta, std::uint64_t seed) {
  const sde::TimeGrid g(T, static_cast<std::size_t>(T) * per_unit);
  const measure::FailureSetParams params{c1, delta, 2.0};
  const auto a = sde::map_paths(m, g, n, seed, 1, [&](const sde::PathBundle& p, std::size_t i) {
    return measure::analyze_path(p, m, measure::OrthogonalSpec::none(), params, seed, i);
  });
  std::vector<measure::FailureSample> s;
  std::vector<double> stopped;
  for (const auto& x : a) {
    s.push_back(x.sample);
    stopped.push_back(x.record.stopped_L);
  }
  PqRun r;
  r.pq = measure::estimate_pq_probabilities(s);
  r.stopped_mean = stats::mean_estimate(stopped);
  r.stopped_var = r.stopped_mean.variance;
  return r;
}

}  // namespace

TEST(Density, BracketIsTradeoffPlusOrthogonal) {
  const auto m = sde::ou_phi_model(1.0, 1.0, 1.0, 0.2, 1.0);
  const sde::TimeGrid g(3.0, 300);
  const auto p = sde::simulate_path(m, g, 4, 0);
  const auto none = measure::density_process(p, m, measure::OrthogonalSpec::none(), 4, 0);
  const auto orth =
      measure::density_process(p, m, measure::OrthogonalSpec::independent_bm(0.5), 4, 0);
  for (std::size_t k = 0; k < g.n_points(); ++k) {
    EXPECT_EQ(none.bracket[k], p.K[k]);
    EXPECT_EQ(orth.bracket[k], p.K[k] + 0.25 * g.time(k));
    EXPECT_GE(orth.bracket[k], p.K[k]);
    EXPECT_EQ(none.Z[k], std::exp(none.L[k] - 0.5 * none.bracket[k]));
  }
  EXPECT_NE(none.L.back(), orth.L.back());
}

TEST(Density, GbmExponentIsMinusPhiW) {
  const auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  const sde::TimeGrid g(2.0, 200);
  const auto p = sde::simulate_path(m, g, 1, 7);
  const auto d = measure::density_process(p, m, measure::OrthogonalSpec::none(), 1, 7);
  double w = 0.0;
  for (std::size_t k = 0; k < g.n_steps(); ++k) w += p.dW[k];
  EXPECT_NEAR(d.L.back(), -0.6 * w, 1e-12);
}

TEST(Density, ShapeMismatchThrows) {
  const auto gbm = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  const auto ou = sde::ou_phi_model(1.0, 1.0, 1.0, 0.2, 1.0);
  const auto p = sde::simulate_path(gbm, sde::TimeGrid(1.0, 10), 1, 0);
  EXPECT_THROW(measure::density_process(p, ou, measure::OrthogonalSpec::none(), 1, 0), ShapeError);
}

TEST(Density, ZIsAMartingaleInEveryModel) {
  struct Case {
    sde::ModelSpec model;
    measure::OrthogonalSpec orth;
  };
  const std::vector<Case> cases = {
      {sde::constant_phi_gbm(0.2, 0.6, 1.0), measure::OrthogonalSpec::none()},
      {sde::constant_phi_gbm(0.2, 0.6, 1.0), measure::OrthogonalSpec::independent_bm(0.5)},
      {sde::ou_phi_model(1.0, 1.0, 1.0, 0.2, 1.0), measure::OrthogonalSpec::none()},
  };
  for (const auto& c : cases) {
    const sde::TimeGrid g(2.0, 200);
    const auto z = sde::map_paths(c.model, g, 20000, 13, 1,
                                  [&](const sde::PathBundle& p, std::size_t i) {
                                    return measure::density_process(p, c.model, c.orth, 13, i)
                                        .Z.back();
                                  });
    const auto e = stats::mean_estimate(z);
    EXPECT_NEAR(e.mean, 1.0, 3.0 * e.se) << c.model.name << " nu " << c.orth.nu;
  }
}

TEST(Extension, ContinuesFromTerminalValue) {
  const auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  const sde::TimeGrid g(2.0, 200);
  const auto p = sde::simulate_path(m, g, 1, 0);
  const auto d = measure::density_process(p, m, measure::OrthogonalSpec::none(), 1, 0);

  const auto same = measure::extend_martingale(d, p, 2.0, m, 1, 0);
  EXPECT_EQ(same.L, d.L);
  EXPECT_EQ(same.horizon, 2.0);

  const auto ext = measure::extend_martingale(d, p, 5.0, m, 1, 0);
  EXPECT_EQ(ext.horizon, 5.0);
  EXPECT_EQ(ext.L.size(), 501u);
  for (std::size_t k = 0; k <= 200; ++k) EXPECT_EQ(ext.L[k], d.L[k]);
  // bracket continues at rate phi^2 with no jump at T
  EXPECT_NEAR(ext.bracket[201] - ext.bracket[200], 0.36 * 0.01, 1e-12);
  EXPECT_NEAR(ext.bracket.back(), 0.36 * 5.0, 1e-12);
  EXPECT_NEAR(ext.time(500), 5.0, 0.0);
  EXPECT_THROW(measure::extend_martingale(d, p, 1.0, m, 1, 0), PreconditionError);
}

TEST(Extension, NonConstantModelSimulatesForward) {
  const auto m = sde::ou_phi_model(1.0, 1.0, 1.0, 0.2, 1.0);
  const sde::TimeGrid g(2.0, 200);
  const auto p = sde::simulate_path(m, g, 1, 0);
  const auto d = measure::density_process(p, m, measure::OrthogonalSpec::none(), 1, 0);
  const auto ext = measure::extend_martingale(d, p, 4.0, m, 1, 0);
  EXPECT_EQ(ext.L.size(), 401u);
  EXPECT_EQ(ext.L[200], d.L.back());
  for (std::size_t k = 1; k < ext.bracket.size(); ++k) EXPECT_GE(ext.bracket[k], ext.bracket[k - 1]);
}

TEST(TimeChange, FirstCrossingAndErrors) {
  measure::ExtendedMartingale e;
  e.dt = 0.5;
  e.base_steps = 4;
  e.base_horizon = 2.0;
  e.horizon = 3.0;
  e.L = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  e.bracket = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  const auto r = measure::time_change(e, 1.2);
  ASSERT_TRUE(r.reached());
  EXPECT_EQ(*r.tau_index, 3u);
  EXPECT_DOUBLE_EQ(r.tau_time, 1.5);
  EXPECT_DOUBLE_EQ(r.stopped_L, 0.3);

  const auto late = measure::time_change(e, 2.7);
  EXPECT_EQ(*late.tau_index, 6u);
  // Z is frozen at T when tau is past the horizon
  EXPECT_DOUBLE_EQ(late.stopped_Z, std::exp(0.4 - 1.0));

  const auto never = measure::time_change(e, 10.0);
  EXPECT_FALSE(never.reached());
  EXPECT_TRUE(std::isinf(never.tau_time));
  EXPECT_THROW(measure::time_change(e, 0.0), PreconditionError);
}

TEST(TimeChange, StoppedValueIsGaussianWithVarianceLevel) {
  // DDS: L at the first time <L> reaches v is N(0, v).
  const auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  const auto r = run_pq(m, 16.0, 50, 20000, 0.25, 0.1, 21);
  EXPECT_NEAR(r.stopped_mean.mean, 0.0, 3.0 * r.stopped_mean.se);
  EXPECT_NEAR(r.stopped_var / 4.0, 1.0, 0.05);
}

TEST(TimeChange, StoppedValueOuWithExtension) {
  const auto m = sde::ou_phi_model(1.0, 1.0, 1.0, 0.2, 1.0);
  const double T = 8.0, c1 = 0.5;
  const sde::TimeGrid g(T, 800);
  const measure::FailureSetParams params{c1, 0.1, 3.0};
  const auto a = sde::map_paths(m, g, 10000, 5, 1, [&](const sde::PathBundle& p, std::size_t i) {
    return measure::analyze_path(p, m, measure::OrthogonalSpec::none(), params, 5, i);
  });
  std::vector<double> stopped;
  std::size_t beyond = 0;
  for (const auto& x : a) {
    ASSERT_TRUE(x.record.reached());
    if (x.record.tau_time > T) ++beyond;
    stopped.push_back(x.record.stopped_L);
  }
  EXPECT_GT(beyond, 0u);  // the extension matters for some paths
  const auto e = stats::mean_estimate(stopped);
  EXPECT_NEAR(e.mean, 0.0, 3.0 * e.se);
  EXPECT_NEAR(e.variance / (c1 * T), 1.0, 0.05);
}

TEST(FailureSet, ProbabilitiesMatchClosedForm) {
  const double c1 = 0.25, delta = 0.1, T = 16.0;
  const auto m = sde::constant_phi_gbm(0.2, 0.6, 1.0);
  const auto r = run_pq(m, T, 50, 20000, c1, delta, 3);
  const double p_exact = tail((c1 - 2 * delta) * std::sqrt(T) / (2 * std::sqrt(c1)));
  const double q_exact = 1.0 - tail((c1 + 2 * delta) * std::sqrt(T) / (2 * std::sqrt(c1)));
  EXPECT_NEAR(r.pq.p_hat, p_exact, 3.0 * r.pq.p_se);
  EXPECT_NEAR(r.pq.q_hat, q_exact, 3.0 * r.pq.q_se);
  EXPECT_NEAR(r.pq.q_direct, q_exact, 3.0 * r.pq.q_direct_se);
  // bounds of the density argument
  const double gamma1 = std::min((c1 - 2 * delta) * (c1 - 2 * delta) / (8 * c1), 0.5);
  const double ct = std::sqrt(2 * c1) / ((c1 - 2 * delta) * std::sqrt(M_PI)) + 1.0;
  EXPECT_LE(r.pq.p_hat, ct * std::exp(-gamma1 * T) + 3 * r.pq.p_se);
  EXPECT_GE(r.pq.q_hat, 1.0 - std::exp(-delta * T) - 3 * r.pq.q_se);
}

TEST(FailureSet, IndicatorUsesStoppedDensity) {
  measure::DensityPath d{sde::TimeGrid(1.0, 2), {0, 0, 0}, {0, 0, 0}, {1.0, 0.5, 0.01}, {0, 0, 0}};
  measure::TimeChangeRecord r;
  r.tau_index = 1;
  EXPECT_TRUE(measure::failure_set_indicator(d, r, 1.0, 1.0));   // 0.5 > e^-1
  r.tau_index = 5;                                               // past T -> index 2
  EXPECT_FALSE(measure::failure_set_indicator(d, r, 1.0, 1.0));  // 0.01 < e^-1
  EXPECT_EQ(measure::stopped_index(r, d), 2u);
}

TEST(PqEstimate, ComplementRouteAndMinimumSize) {
  std::vector<measure::FailureSample> s(100);
  for (std::size_t i = 0; i < 100; ++i) {
    s[i].in_failure_set = i < 30;
    s[i].z_stopped = i < 30 ? 3.0 : 0.1 / 0.7;
  }
  const auto e = measure::estimate_pq_probabilities(s);
  EXPECT_DOUBLE_EQ(e.p_hat, 0.3);
  EXPECT_NEAR(e.complement_mass, 0.1, 1e-13);
  EXPECT_NEAR(e.q_hat, 0.9, 1e-13);
  EXPECT_NEAR(e.q_direct, 0.9, 1e-13);
  EXPECT_NEAR(e.total_mass, 1.0, 1e-13);
  s.pop_back();
  EXPECT_THROW(measure::estimate_pq_probabilities(s), ConfigError);
}
