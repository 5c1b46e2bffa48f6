#include "expoarb/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "expoarb/error.hpp"
#include "expoarb/stats.hpp"

namespace expoarb::ldp {

namespace {
constexpr const char* kModule = "ldp-bounds";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_gamma3(const BoundConstants& c, double gamma3) {
  if (!(gamma3 > 0.0) || !(2.0 * gamma3 < c.gamma2 / 2.0)) {
    throw PreconditionError(kModule, "gamma3 must satisfy 0 < 2 gamma3 < gamma2 / 2, got gamma3 = " +
                                         std::to_string(gamma3) +
                                         ", gamma2 = " + std::to_string(c.gamma2));
  }
}
}  // namespace

std::string to_string(LdpStatus status) {
  switch (status) {
    case LdpStatus::kEstimated:
      return "estimated";
    case LdpStatus::kBoundOnly:
      return "bound_only";
    case LdpStatus::kConsistentWithAnyRate:
      return "decay consistent with any c2";
    case LdpStatus::kInconclusive:
      return "inconclusive";
  }
  return "unknown";
}

LdpEstimate estimate_ldp_rate(std::span<const TradeoffSamples> samples, double c1,
                              bool zero_count_bound) {
  if (samples.size() < 3) {
    throw ConfigError(kModule, "LDP estimate needs at least 3 horizons, got " +
                                   std::to_string(samples.size()));
  }
  if (!(c1 > 0.0)) throw DomainError(kModule, "c1 must be positive");
  LdpEstimate est;
  est.c1 = c1;
  for (std::size_t h = 0; h < samples.size(); ++h) {
    const auto& s = samples[h];
    if (h > 0 && !(s.horizon > samples[h - 1].horizon)) {
      throw ConfigError(kModule, "LDP horizons must be strictly increasing");
    }
    if (s.K.size() < 1000) {
      throw ConfigError(kModule, "LDP horizon T = " + std::to_string(s.horizon) +
                                     " has " + std::to_string(s.K.size()) +
                                     " samples, needs >= 1000");
    }
    if (!s.weights.empty() && s.weights.size() != s.K.size()) {
      throw ShapeError(kModule, "weights and K samples differ in length");
    }
    const double threshold = c1 * s.horizon;
    std::vector<double> hits(s.K.size());
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.K.size(); ++i) {
      if (s.K[i] <= threshold) {
        ++count;
        hits[i] = s.weights.empty() ? 1.0 : s.weights[i];
      }
    }
    const auto m = stats::mean_estimate(hits);
    est.horizons.push_back(s.horizon);
    est.p_hat.push_back(m.mean);
    est.p_se.push_back(m.se);
    const bool zero = count == 0;
    est.zero_count.push_back(zero);
    if (zero) {
      est.log_probs.emplace_back(std::nullopt);
      est.zero_count_bounds.push_back(std::log(3.0 / static_cast<double>(s.K.size())) /
                                      s.horizon);
    } else {
      est.log_probs.emplace_back(std::log(m.mean) / s.horizon);
      est.zero_count_bounds.push_back(kNaN);
    }
  }

  const std::size_t n = est.horizons.size();
  const std::size_t first = n - (n + 1) / 2;
  std::optional<double> proxy;
  bool upper_has_value = false;
  for (std::size_t h = first; h < n; ++h) {
    if (est.log_probs[h]) {
      upper_has_value = true;
      proxy = proxy ? std::max(*proxy, *est.log_probs[h]) : *est.log_probs[h];
    } else if (zero_count_bound) {
      proxy = proxy ? std::max(*proxy, est.zero_count_bounds[h]) : est.zero_count_bounds[h];
    }
  }
  const bool all_zero = std::all_of(est.zero_count.begin(), est.zero_count.end(),
                                    [](bool z) { return z; });
  if (all_zero) {
    est.status = zero_count_bound ? LdpStatus::kConsistentWithAnyRate : LdpStatus::kInconclusive;
  } else if (upper_has_value) {
    est.status = LdpStatus::kEstimated;
  } else {
    est.status = zero_count_bound ? LdpStatus::kBoundOnly : LdpStatus::kInconclusive;
  }
  est.rate_estimate = proxy;
  return est;
}

TradeoffSamples tradeoff_samples(const sde::ModelSpec& model, const sde::TimeGrid& grid,
                                 std::size_t n_paths, std::uint64_t seed, unsigned threads) {
  sde::validate(model);
  TradeoffSamples out;
  out.horizon = grid.horizon();
  out.K = sde::map_paths(model, grid, n_paths, seed, threads,
                         [](const sde::PathBundle& p, std::size_t) { return p.K.back(); });
  return out;
}

TradeoffSamples tilted_ou_tradeoff_samples(const sde::ModelSpec& model, double tilted_kappa,
                                           const sde::TimeGrid& grid, std::size_t n_paths,
                                           std::uint64_t seed, unsigned threads) {
  if (model.kind != sde::ModelKind::kOuPhi) {
    throw UnsupportedModelError(kModule, "tilted sampling needs the OU market-price-of-risk model");
  }
  if (!(tilted_kappa > 0.0)) throw ConfigError(kModule, "tilted kappa must be positive");
  const sde::ModelSpec tilted = sde::ou_phi_model(tilted_kappa, model.eta, model.phi_value,
                                                  model.vol, model.initial_state[0]);
  // Under P' the factor noise is dB' = dB + theta dt with
  // theta = (kappa' - kappa) Y / eta, so dP/dP' = exp(int theta dB' - 1/2 int theta^2 dt).
  const double shift = (tilted_kappa - model.kappa) / model.eta;
  const double dt = grid.dt();
  struct Draw {
    double K;
    double weight;
  };
  const auto draws = sde::map_paths(
      tilted, grid, n_paths, seed, threads, [shift, dt](const sde::PathBundle& p, std::size_t) {
        double log_w = 0.0;
        for (std::size_t k = 0; k < p.grid.n_steps(); ++k) {
          const double theta = shift * p.factors[k];
          log_w += theta * p.dW[k * p.n_noise + 1] - 0.5 * theta * theta * dt;
        }
        return Draw{p.K.back(), std::exp(log_w)};
      });
  TradeoffSamples out;
  out.horizon = grid.horizon();
  out.K.reserve(n_paths);
  out.weights.reserve(n_paths);
  for (const auto& d : draws) {
    out.K.push_back(d.K);
    out.weights.push_back(d.weight);
  }
  return out;
}

BoundConstants bound_constants(double c1, double c2, double delta, const LdpEstimate* estimate,
                               double search_cap) {
  if (!(c1 > 0.0)) throw DomainError(kModule, "constraint violated: c1 > 0");
  if (!(c2 > 0.0)) throw DomainError(kModule, "constraint violated: c2 > 0");
  if (!(delta > 0.0) || !(delta < c1 / 2.0)) {
    throw DomainError(kModule, "constraint violated: 0 < delta < c1/2 (delta = " +
                                   std::to_string(delta) + ", c1 = " + std::to_string(c1) + ")");
  }
  BoundConstants c;
  c.c1 = c1;
  c.c2 = c2;
  c.delta = delta;
  const double gap = c1 - 2.0 * delta;
  c.gamma1 = std::min(gap * gap / (8.0 * c1), c2 / 2.0);
  c.gamma2 = delta;
  c.c_tilde = std::sqrt(2.0 * c1) / (gap * std::sqrt(std::numbers::pi)) + 1.0;

  // Smallest integer T >= 1 with log C~ - gamma1 T < 0.
  double t0 = std::max(1.0, std::floor(std::log(c.c_tilde) / c.gamma1) + 1.0);
  while (t0 > 1.0 && std::log(c.c_tilde) - c.gamma1 * (t0 - 1.0) < 0.0) t0 -= 1.0;
  while (!(std::log(c.c_tilde) - c.gamma1 * t0 < 0.0)) t0 += 1.0;

  if (estimate != nullptr) {
    for (std::size_t h = 0; h < estimate->horizons.size(); ++h) {
      const double T = estimate->horizons[h];
      if (estimate->p_hat[h] > std::exp(-0.5 * c2 * T)) t0 = std::max(t0, std::floor(T) + 1.0);
    }
  }
  if (t0 > search_cap) {
    throw SearchExhaustedError(kModule, "T0 exceeds the search cap " + std::to_string(search_cap));
  }
  c.T0 = t0;
  return c;
}

double gaussian_tail_bound(double a, double b) {
  if (!(a > 0.0)) throw DomainError(kModule, "tail bound needs a > 0");
  if (!(b >= 1.0)) throw DomainError(kModule, "tail bound needs b >= 1");
  return std::exp(-0.5 * a * a * b * b) / (std::sqrt(2.0 * std::numbers::pi) * a);
}

bool growth_condition(const BoundConstants& c, double gamma3, double T) {
  // e^{aT} - 1 >= e^{bT}  <=>  aT + log(1 - e^{(b-a)T}) >= 0, with b < a.
  const double a = c.gamma2 / 2.0 - gamma3;
  const double b = gamma3;
  return a * T + std::log1p(-std::exp((b - a) * T)) >= 0.0;
}

bool failure_condition(const BoundConstants& c, double T) {
  return (1.0 + c.gamma1 / c.gamma2) * std::numbers::ln2 +
             0.5 * (std::log(c.c_tilde) - c.gamma1 * T) <
         0.0;
}

Gamma3Choice find_gamma3_Ttilde(const BoundConstants& constants, std::optional<double> gamma3,
                                double search_cap) {
  Gamma3Choice out;
  out.gamma3 = gamma3.value_or(constants.gamma2 / 8.0);
  check_gamma3(constants, out.gamma3);
  const auto both = [&](double T) {
    return growth_condition(constants, out.gamma3, T) && failure_condition(constants, T);
  };
  const double start = std::max(1.0, std::ceil(constants.T0));
  // Scan downward from the cap: T~ is one past the last failing horizon.
  double candidate = start;
  for (double T = std::floor(search_cap); T >= start; T -= 1.0) {
    if (!both(T)) {
      candidate = T + 1.0;
      break;
    }
  }
  if (candidate > search_cap || !both(candidate)) {
    throw SearchExhaustedError(kModule, "no T~ found below the search cap " +
                                            std::to_string(search_cap));
  }
  out.T_tilde = candidate;
  return out;
}

CascadeParams cascade_params(const BoundConstants& constants, double T, double gamma3,
                             double search_cap) {
  check_gamma3(constants, gamma3);
  const double log_ct = std::log(constants.c_tilde);
  if (!(constants.gamma1 * T > log_ct)) {
    throw PreconditionError(kModule, "horizon too small: gamma1 T = " +
                                         std::to_string(constants.gamma1 * T) +
                                         " <= log C~ = " + std::to_string(log_ct));
  }
  CascadeParams p;
  p.T = T;
  p.alpha = (log_ct - constants.gamma1 * T) / (-constants.gamma2 * T);
  p.eps1 = constants.c_tilde * std::exp(-constants.gamma1 * T);
  p.eps2 = std::exp(-constants.gamma2 * T);
  const double two_pow = std::exp2(1.0 + constants.gamma1 / constants.gamma2);
  p.eps1_tilde = two_pow * std::sqrt(p.eps1);
  p.eps2_tilde = std::sqrt(p.eps2);
  p.gamma3 = gamma3;
  p.gamma4 = constants.gamma1 / 2.0;
  p.C = two_pow * std::sqrt(constants.c_tilde);
  try {
    p.T_tilde = find_gamma3_Ttilde(constants, gamma3, std::max(search_cap, T)).T_tilde;
    p.beyond_T_tilde = T >= p.T_tilde;
  } catch (const SearchExhaustedError&) {
    p.T_tilde = std::numeric_limits<double>::infinity();
    p.beyond_T_tilde = false;
  }
  return p;
}

bool check_eps_arbitrage_condition(double eps1, double eps2, double eps1_tilde, double eps2_tilde,
                                   double alpha) {
  for (double e : {eps1, eps2, eps1_tilde, eps2_tilde}) {
    if (!(e > 0.0 && e < 1.0)) {
      throw DomainError(kModule, "epsilon values must lie in (0, 1), got " + std::to_string(e));
    }
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError(kModule, "alpha must be positive and finite");
  }
  const double lhs = std::exp2(1.0 + alpha) * std::max(eps1, std::pow(eps2, alpha));
  const double rhs = eps1_tilde * std::pow(eps2_tilde, alpha);
  return lhs <= rhs;
}

}  // namespace expoarb::ldp
