#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "expoarb/sde.hpp"

namespace expoarb::measure {

/// Orthogonal part N^Q of the density exponent. Only independent Brownian
/// components with constant volatility are sampled.
struct OrthogonalSpec {
  enum class Mode { kNone, kIndependentBm };
  Mode mode = Mode::kNone;
  double nu = 0.0;

  static OrthogonalSpec none() { return {}; }
  static OrthogonalSpec independent_bm(double nu);
};

/// L^Q, <L^Q>, Z^Q and <N^Q> along one path.
struct DensityPath {
  sde::TimeGrid grid{1.0, 2};
  std::vector<double> L;
  std::vector<double> bracket;
  std::vector<double> Z;
  std::vector<double> orth_bracket;
};

/// L increments -phi(S_t) dW_t + nu dB_t with B independent of W. B is drawn
/// from the orthogonal stream of (seed, path_index).
DensityPath density_process(const sde::PathBundle& path, const sde::ModelSpec& model,
                            const OrthogonalSpec& orth, std::uint64_t seed,
                            std::uint64_t path_index);

std::vector<DensityPath> density_process(const sde::PathEnsemble& paths,
                                         const sde::ModelSpec& model,
                                         const OrthogonalSpec& orth);

/// L-bar on [0, target]: equal to L up to base_steps, continued afterwards.
struct ExtendedMartingale {
  double dt = 0.0;
  std::size_t base_steps = 0;
  double base_horizon = 0.0;
  double horizon = 0.0;
  std::vector<double> L;
  std::vector<double> bracket;

  double time(std::size_t k) const;
};

/// Continues L past T. Constant-phi models get a Brownian continuation with
/// bracket rate |phi|^2 (unit rate if phi = 0); other models are simulated
/// forward from the terminal state of `path` and contribute -phi(S) dW.
ExtendedMartingale extend_martingale(const DensityPath& density, const sde::PathBundle& path,
                                     double target_horizon, const sde::ModelSpec& model,
                                     std::uint64_t seed, std::uint64_t path_index);

struct TimeChangeRecord {
  double level = 0.0;
  std::optional<std::size_t> tau_index;  // empty: level not reached on the extended grid
  double tau_time = 0.0;                 // +inf when not reached
  double stopped_L = 0.0;                // L-bar at tau (at the extended end if not reached)
  double stopped_Z = 0.0;                // Z at tau ^ T

  bool reached() const { return tau_index.has_value(); }
};

/// First grid index with bracket >= level.
TimeChangeRecord time_change(const ExtendedMartingale& extended, double level);

/// Grid index of tau^Q = tau_{level} ^ T.
std::size_t stopped_index(const TimeChangeRecord& record, const DensityPath& density);

/// Membership in A = {Z_{tau^Q} > e^{-delta T}}.
bool failure_set_indicator(const DensityPath& density, const TimeChangeRecord& record,
                           double delta, double horizon);

struct FailureSample {
  bool in_failure_set = false;
  double z_stopped = 1.0;
};

struct PqEstimate {
  std::size_t n = 0;
  double p_hat = 0.0;
  double p_se = 0.0;
  /// Q[A] = 1 - E_P[Z 1_{A^c}].
  double q_hat = 0.0;
  double q_se = 0.0;
  /// Direct weighting (1/n) sum Z 1_A; unbiased but its variance grows like
  /// E_P[Z^2] and is unusable at long horizons.
  double q_direct = 0.0;
  double q_direct_se = 0.0;
  double complement_mass = 0.0;  // (1/n) sum Z 1_{A^c}
  double complement_se = 0.0;
  double total_mass = 0.0;  // (1/n) sum Z
  double total_mass_se = 0.0;
};

/// Requires at least 100 samples.
PqEstimate estimate_pq_probabilities(std::span<const FailureSample> samples);

/// Everything the probability checks need from one path.
struct PathAnalysis {
  double tradeoff_T = 0.0;
  double bracket_T = 0.0;
  double z_T = 1.0;
  TimeChangeRecord record;
  FailureSample sample;
};

struct FailureSetParams {
  double c1 = 0.0;
  double delta = 0.0;
  double extension_factor = 2.0;  // extended horizon = factor * T
};

PathAnalysis analyze_path(const sde::PathBundle& path, const sde::ModelSpec& model,
                          const OrthogonalSpec& orth, const FailureSetParams& params,
                          std::uint64_t seed, std::uint64_t path_index);

}  // namespace expoarb::measure
