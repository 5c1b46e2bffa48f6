#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "expoarb/sde.hpp"

namespace expoarb::ldp {

/// K_T draws for one horizon. `weights` is empty for plain Monte Carlo, or
/// holds the likelihood ratio dP/dP' of each draw when the draws come from
/// a tilted measure P'.
struct TradeoffSamples {
  double horizon = 0.0;
  std::vector<double> K;
  std::vector<double> weights;
};

enum class LdpStatus {
  kEstimated,           // proxy computed from non-zero horizons
  kBoundOnly,           // upper half all zero-count; proxy uses the rule-of-three bounds
  kConsistentWithAnyRate,  // every horizon zero-count
  kInconclusive,        // every horizon zero-count and no bound requested
};

std::string to_string(LdpStatus status);

struct LdpEstimate {
  double c1 = 0.0;
  std::vector<double> horizons;
  std::vector<double> p_hat;
  std::vector<double> p_se;
  std::vector<std::optional<double>> log_probs;  // (1/T) log p_hat, empty if flagged
  std::vector<bool> zero_count;
  std::vector<double> zero_count_bounds;  // (1/T) log(3/n) for flagged horizons, NaN otherwise
  std::optional<double> rate_estimate;
  LdpStatus status = LdpStatus::kInconclusive;

  bool strictly_negative() const { return rate_estimate && *rate_estimate < 0.0; }
};

/// p_hat_T = P[K_T <= c1 T] per horizon and the limsup proxy: the maximum of
/// (1/T) log p_hat_T over the largest ceil(n/2) horizons. Needs >= 3 strictly
/// increasing horizons with >= 1000 samples each.
LdpEstimate estimate_ldp_rate(std::span<const TradeoffSamples> samples, double c1,
                              bool zero_count_bound = true);

/// K_T samples of a model under P, one per path.
TradeoffSamples tradeoff_samples(const sde::ModelSpec& model, const sde::TimeGrid& grid,
                                 std::size_t n_paths, std::uint64_t seed, unsigned threads = 1);

/// K_T samples of an OU market-price-of-risk model drawn with the factor's
/// mean reversion raised to `tilted_kappa`, weighted by dP/dP'.
TradeoffSamples tilted_ou_tradeoff_samples(const sde::ModelSpec& model, double tilted_kappa,
                                           const sde::TimeGrid& grid, std::size_t n_paths,
                                           std::uint64_t seed, unsigned threads = 1);

struct BoundConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double delta = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double c_tilde = 0.0;
  double T0 = 0.0;
};

inline constexpr double kDefaultSearchCap = 1e4;

/// gamma1 = min{(c1 - 2 delta)^2 / (8 c1), c2 / 2}, gamma2 = delta,
/// C~ = sqrt(2 c1) / ((c1 - 2 delta) sqrt(pi)) + 1.
///
/// T0 is the smallest integer T >= 1 with C~ e^{-gamma1 T} < 1. When an
/// estimate is given, T0 is also pushed past every estimated horizon h with
/// p_hat_h > e^{-c2 h / 2}.
BoundConstants bound_constants(double c1, double c2, double delta,
                               const LdpEstimate* estimate = nullptr,
                               double search_cap = kDefaultSearchCap);

/// e^{-a^2 b^2 / 2} / (sqrt(2 pi) a), an upper bound for P[U > ab] when
/// a > 0 and b >= 1.
double gaussian_tail_bound(double a, double b);

struct CascadeParams {
  double T = 0.0;
  double alpha = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps1_tilde = 0.0;
  double eps2_tilde = 0.0;
  double gamma3 = 0.0;
  double gamma4 = 0.0;
  double C = 0.0;
  double T_tilde = 0.0;
  bool beyond_T_tilde = false;
};

CascadeParams cascade_params(const BoundConstants& constants, double T, double gamma3,
                             double search_cap = kDefaultSearchCap);

/// 2^{1+alpha} max(eps1, eps2^alpha) <= eps1_tilde * eps2_tilde^alpha.
bool check_eps_arbitrage_condition(double eps1, double eps2, double eps1_tilde,
                                   double eps2_tilde, double alpha);

struct Gamma3Choice {
  double gamma3 = 0.0;
  double T_tilde = 0.0;
};

/// The two horizon conditions that define T~ for a given gamma3.
bool growth_condition(const BoundConstants& c, double gamma3, double T);
bool failure_condition(const BoundConstants& c, double T);

/// gamma3 defaults to gamma2 / 8. T~ is the smallest integer >= T0 from
/// which both conditions hold on every integer horizon up to the cap.
Gamma3Choice find_gamma3_Ttilde(const BoundConstants& constants,
                                std::optional<double> gamma3 = std::nullopt,
                                double search_cap = kDefaultSearchCap);

}  // namespace expoarb::ldp
