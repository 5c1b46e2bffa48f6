#include "expoarb/arbitrage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "expoarb/error.hpp"
#include "expoarb/stats.hpp"

namespace expoarb::arb {

namespace {
constexpr const char* kModule = "arbitrage-engine";

void require_gbm(const sde::ModelSpec& model) {
  if (model.kind != sde::ModelKind::kConstantPhiGbm || model.d != 1 || model.n_noise != 1) {
    throw UnsupportedModelError(kModule,
                                "digital replication needs the complete 1-d constant-phi model");
  }
}
}  // namespace

DigitalCutoff digital_cutoff(const sde::ModelSpec& model, double delta, double horizon,
                             double tau) {
  require_gbm(model);
  const double phi = model.phi_value;
  const double vol = model.vol;
  if (phi == 0.0) throw ModelMismatchError(kModule, "phi = 0 gives no cutoff");
  DigitalCutoff c;
  c.tau = tau;
  c.w_cutoff = (delta * horizon - 0.5 * phi * phi * tau) / std::abs(phi);
  c.price_cutoff = model.initial_state[0] *
                   std::exp(vol * c.w_cutoff + (vol * phi - 0.5 * vol * vol) * tau);
  return c;
}

HedgingStrategy digital_replication_strategy(const sde::ModelSpec& model, double delta, double c1,
                                             double horizon, const sde::TimeGrid& grid,
                                             double freeze_fraction) {
  require_gbm(model);
  const double phi = model.phi_value;
  const double phi_sq = phi * phi;
  if (!(phi_sq > c1)) {
    throw ModelMismatchError(kModule, "|phi|^2 = " + std::to_string(phi_sq) + " <= c1 = " +
                                          std::to_string(c1) +
                                          ": the bracket never crosses c1 T before T");
  }
  if (!(freeze_fraction >= 0.0 && freeze_fraction < 1.0)) {
    throw ConfigError(kModule, "freeze fraction must lie in [0, 1)");
  }
  if (grid.horizon() != horizon) throw ConfigError(kModule, "grid horizon differs from T");

  HedgingStrategy s;
  s.grid_ = grid;
  s.vol_ = model.vol;
  s.phi_ = phi;
  s.tau_continuous_ = c1 * horizon / phi_sq;
  const double level = c1 * horizon;
  std::size_t lo = 0;
  std::size_t hi = grid.n_steps();
  while (lo < hi) {  // first k with |phi|^2 t_k >= level
    const std::size_t mid = (lo + hi) / 2;
    if (phi_sq * grid.time(mid) >= level) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  s.tau_index_ = lo;
  s.tau_grid_ = grid.time(lo);
  s.w_cutoff_ = (delta * horizon - 0.5 * phi_sq * s.tau_grid_) / std::abs(phi);
  s.barrier_ = s.w_cutoff_ + std::abs(phi) * s.tau_grid_;
  s.price_cutoff_ = digital_cutoff(model, delta, horizon, s.tau_continuous_).price_cutoff;
  s.initial_cost_ = stats::normal_tail(s.barrier_ / std::sqrt(s.tau_grid_));
  s.freeze_fraction_ = freeze_fraction;
  s.freeze_from_ = s.tau_index_ - static_cast<std::size_t>(
                                       std::floor(freeze_fraction * static_cast<double>(s.tau_index_)));
  return s;
}

HedgePath HedgingStrategy::run(const sde::PathBundle& path) const {
  if (!(path.grid == grid_) || path.d != 1 || path.n_noise != 1) {
    throw ShapeError(kModule, "path does not match the strategy grid or model");
  }
  const std::size_t points = grid_.n_points();
  const double sign = phi_ > 0.0 ? 1.0 : -1.0;
  const double drift = std::abs(phi_);
  HedgePath h;
  h.position.assign(points, 0.0);
  h.value.resize(points);
  h.value[0] = initial_cost_;

  // U = sign(phi) W^Q is a Q-Brownian motion and dS = sigma(S) sign(phi) dU.
  double w = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k + 1 < points; ++k) {
    if (k < tau_index_) {
      if (k < freeze_from_) {
        const double remaining = tau_grid_ - grid_.time(k);
        const double u = sign * w + drift * grid_.time(k);
        const double sd = std::sqrt(remaining);
        const double dvdu = stats::normal_pdf((u - barrier_) / sd) / sd;
        theta = sign * dvdu / (vol_ * path.S[k]);
      }
    } else {
      theta = 0.0;
    }
    h.position[k] = theta;
    h.value[k + 1] = h.value[k] + theta * (path.S[k + 1] - path.S[k]);
    w += path.dW[k];
  }
  double w_tau = 0.0;
  for (std::size_t k = 0; k < tau_index_; ++k) w_tau += path.dW[k];
  h.payoff = sign * w_tau >= w_cutoff_ ? 1.0 : 0.0;
  h.claim = h.value.back() - initial_cost_;
  h.replication_error = h.value[tau_index_] - h.payoff;
  return h;
}

std::vector<double> scaled_payoff(std::span<const double> claims, double gamma2, double gamma3,
                                  double horizon) {
  if (!(gamma3 > 0.0) || !(2.0 * gamma3 < gamma2 / 2.0)) {
    throw PreconditionError(kModule, "scaling needs 0 < 2 gamma3 < gamma2 / 2");
  }
  const double factor = std::exp((gamma2 / 2.0 - gamma3) * horizon);
  if (!std::isfinite(factor)) {
    throw OverflowError(kModule, "scale factor e^{(gamma2/2 - gamma3) T} overflows at T = " +
                                     std::to_string(horizon) + "; report in log space");
  }
  std::vector<double> out(claims.size());
  for (std::size_t i = 0; i < claims.size(); ++i) out[i] = factor * claims[i];
  return out;
}

ArbitrageCertificate verify_definition(std::span<const HorizonSamples> samples, double gamma3,
                                       double gamma4, double C) {
  if (samples.size() < 2) {
    throw ConfigError(kModule, "certificate needs at least 2 horizons, got " +
                                   std::to_string(samples.size()));
  }
  ArbitrageCertificate cert;
  cert.pass = true;
  for (const auto& s : samples) {
    if (s.X.size() < 1000) {
      throw ConfigError(kModule, "horizon T = " + std::to_string(s.horizon) + " has " +
                                     std::to_string(s.X.size()) + " samples, needs >= 1000");
    }
    HorizonCheck c;
    c.horizon = s.horizon;
    c.gamma3 = gamma3;
    c.gamma4 = gamma4;
    c.C = C;
    c.tolerance = s.tolerance;
    c.min_X = *std::min_element(s.X.begin(), s.X.end());
    c.floor = -std::exp(-gamma3 * s.horizon);
    const double target = std::exp(gamma3 * s.horizon);
    std::vector<double> fail(s.X.size());
    for (std::size_t i = 0; i < s.X.size(); ++i) fail[i] = s.X[i] <= target ? 1.0 : 0.0;
    const auto m = stats::mean_estimate(fail);
    c.failure_prob = m.mean;
    c.failure_se = m.se;
    c.log_bound = std::log(C) - gamma4 * s.horizon;
    c.bound = std::exp(c.log_bound);
    c.log_failure = m.mean > 0.0 ? std::log(m.mean) : -std::numeric_limits<double>::infinity();
    c.pass_floor = c.min_X >= c.floor - c.tolerance;
    c.pass_failure = c.failure_prob <= c.bound + 3.0 * c.failure_se;
    cert.pass = cert.pass && c.pass_floor && c.pass_failure;
    cert.horizons.push_back(c);
  }
  cert.failure_non_increasing = true;
  for (std::size_t i = 1; i < cert.horizons.size(); ++i) {
    if (cert.horizons[i].failure_prob > cert.horizons[i - 1].failure_prob) {
      cert.failure_non_increasing = false;
    }
  }
  return cert;
}

bool admissibility_check(std::span<const double> value_path, double floor, double tolerance) {
  return std::all_of(value_path.begin(), value_path.end(),
                     [&](double v) { return v >= -floor - tolerance; });
}

}  // namespace expoarb::arb
