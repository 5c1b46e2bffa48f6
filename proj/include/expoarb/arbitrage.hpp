#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "expoarb/sde.hpp"

namespace expoarb::arb {

/// Cutoffs of the complement of the failure set for a stopping time tau in
/// the constant-phi GBM model: A^c = {sign(phi) W_tau >= w_cutoff}, equivalently
/// {S_tau >= price_cutoff} for the exact GBM solution (phi > 0).
struct DigitalCutoff {
  double tau = 0.0;
  double w_cutoff = 0.0;
  double price_cutoff = 0.0;
};

DigitalCutoff digital_cutoff(const sde::ModelSpec& model, double delta, double horizon,
                             double tau);

struct HedgePath {
  std::vector<double> position;  // units of S held over (t_k, t_{k+1}]
  std::vector<double> value;     // self-financing portfolio value at t_k
  double payoff = 0.0;           // 1_{A^c}
  double claim = 0.0;            // value_T - initial cost
  double replication_error = 0.0;  // value at maturity - payoff
};

/// Delta hedge of the digital 1_{A^c} under the martingale measure, started
/// from its price Q[A^c]. After the maturity tau the portfolio holds cash.
class HedgingStrategy {
 public:
  double maturity() const { return tau_grid_; }
  double maturity_continuous() const { return tau_continuous_; }
  std::size_t maturity_index() const { return tau_index_; }
  /// Cutoff on sign(phi) W_tau, consistent with the grid maturity.
  double w_cutoff() const { return w_cutoff_; }
  /// Continuous-time state-space cutoff K*.
  double threshold() const { return price_cutoff_; }
  double initial_cost() const { return initial_cost_; }
  const sde::TimeGrid& grid() const { return grid_; }
  double freeze_fraction() const { return freeze_fraction_; }

  /// Runs the hedge along a path simulated from the same model and grid.
  HedgePath run(const sde::PathBundle& path) const;

 private:
  friend HedgingStrategy digital_replication_strategy(const sde::ModelSpec&, double, double,
                                                      double, const sde::TimeGrid&, double);
  sde::TimeGrid grid_{1.0, 2};
  double vol_ = 0.0;
  double phi_ = 0.0;
  double tau_continuous_ = 0.0;
  double tau_grid_ = 0.0;
  std::size_t tau_index_ = 0;
  double w_cutoff_ = 0.0;
  double barrier_ = 0.0;  // cutoff on sign(phi) W^Q_tau
  double price_cutoff_ = 0.0;
  double initial_cost_ = 0.0;
  double freeze_fraction_ = 0.0;
  std::size_t freeze_from_ = 0;
};

/// Requires the complete 1-d constant-phi model with phi^2 > c1. The grid
/// maturity is the first grid time where |phi|^2 t >= c1 T, the same crossing
/// the density time change uses.
HedgingStrategy digital_replication_strategy(const sde::ModelSpec& model, double delta, double c1,
                                             double horizon, const sde::TimeGrid& grid,
                                             double freeze_fraction = 0.0);

/// X_T = e^{(gamma2/2 - gamma3) T} X-bar_T.
std::vector<double> scaled_payoff(std::span<const double> claims, double gamma2, double gamma3,
                                  double horizon);

struct HorizonSamples {
  double horizon = 0.0;
  std::vector<double> X;
  double tolerance = 0.0;  // slack on the floor, in units of X
};

struct HorizonCheck {
  double horizon = 0.0;
  double gamma3 = 0.0;
  double gamma4 = 0.0;
  double C = 0.0;
  double min_X = 0.0;
  double floor = 0.0;  // -e^{-gamma3 T}
  double tolerance = 0.0;
  double failure_prob = 0.0;  // P[X_T <= e^{gamma3 T}]
  double failure_se = 0.0;
  double bound = 0.0;          // C e^{-gamma4 T}
  double log_bound = 0.0;      // log C - gamma4 T
  double log_failure = 0.0;    // -inf when no failures
  bool pass_floor = false;
  bool pass_failure = false;
};

struct ArbitrageCertificate {
  std::vector<HorizonCheck> horizons;
  bool failure_non_increasing = false;
  bool pass = false;
};

/// Checks X_T >= -e^{-gamma3 T} (less tolerance) and
/// P[X_T <= e^{gamma3 T}] <= C e^{-gamma4 T} + 3 SE at every horizon.
ArbitrageCertificate verify_definition(std::span<const HorizonSamples> samples, double gamma3,
                                       double gamma4, double C);

/// value >= -floor - tolerance at every point.
bool admissibility_check(std::span<const double> value_path, double floor,
                         double tolerance = 0.0);

}  // namespace expoarb::arb
