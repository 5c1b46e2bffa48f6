#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "expoarb/rng.hpp"

namespace expoarb::sde {

/// Uniform grid 0 = t_0 < t_1 < ... < t_n = T.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t n_steps);

  /// Grid with n = round(T / dt) steps; the realised step is T / n.
  static TimeGrid with_step(double horizon, double dt);

  double horizon() const { return horizon_; }
  double dt() const { return dt_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_points() const { return n_steps_ + 1; }
  double time(std::size_t k) const {
    return k == n_steps_ ? horizon_ : static_cast<double>(k) * dt_;
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  std::size_t n_steps_;
  double dt_;
};

using StateView = std::span<const double>;
/// Writes a model coefficient evaluated at a state into `out`.
using CoefficientMap = std::function<void(StateView state, std::span<double> out)>;

enum class ModelKind { kConstantPhiGbm, kOuPhi, kCustom };

/// Diffusion market dS = sigma(X)(dW + phi(X) dt) on d traded coordinates,
/// optionally driven by non-traded factors dY = b(X) dt + v(X) dW appended to
/// the state X = (S, Y).
struct ModelSpec {
  std::string name = "custom";
  ModelKind kind = ModelKind::kCustom;
  std::size_t d = 1;          // traded assets
  std::size_t n_noise = 1;    // Brownian dimension N
  std::size_t n_factors = 0;  // non-traded state coordinates

  CoefficientMap sigma;         // d x N, row-major
  CoefficientMap phi;           // N, market price of risk in noise coordinates
  CoefficientMap lambda;        // d, market price of risk in asset coordinates (may be empty)
  CoefficientMap factor_drift;  // n_factors
  CoefficientMap factor_vol;    // n_factors x N, row-major

  std::vector<double> initial_state;  // d + n_factors
  bool constant_phi = false;
  bool complete = false;

  // Parameters of the factory models; zero for custom models.
  double vol = 0.0;
  double phi_value = 0.0;
  double kappa = 0.0;
  double eta = 0.0;

  std::size_t state_dim() const { return d + n_factors; }
};

/// Throws ConfigError if dimensions or maps are inconsistent.
void validate(const ModelSpec& model);

/// Black-Scholes market dS = vol S (dW + phi dt), d = N = 1, complete.
ModelSpec constant_phi_gbm(double vol, double phi, double s0);

/// dS = vol S (dW1 + Y dt), dY = -kappa Y dt + eta dW2, Y_0 = phi0.
/// Market price of risk (Y, 0); incomplete (d = 1, N = 2).
ModelSpec ou_phi_model(double kappa, double eta, double phi0, double vol, double s0);

/// Same model written under its minimal martingale measure: phi = 0 for the
/// traded part, factor drift b - v phi.
ModelSpec minimal_martingale_measure(const ModelSpec& model);

/// One simulated scenario. Matrices are stored row-major by grid index.
struct PathBundle {
  TimeGrid grid{1.0, 2};
  std::size_t d = 0;
  std::size_t n_noise = 0;
  std::size_t n_factors = 0;
  std::vector<double> dW;       // n_steps x N
  std::vector<double> S;        // n_points x d
  std::vector<double> factors;  // n_points x n_factors
  std::vector<double> M;        // n_points x d
  std::vector<double> A;        // n_points x d
  std::vector<double> K;        // n_points

  std::span<const double> price(std::size_t k) const { return {S.data() + k * d, d}; }
  std::span<const double> increment(std::size_t k) const {
    return {dW.data() + k * n_noise, n_noise};
  }
  std::span<const double> factor(std::size_t k) const {
    return {factors.data() + k * n_factors, n_factors};
  }
  /// Full state (S, Y) at grid index k, written into `out`.
  void state(std::size_t k, std::span<double> out) const;
};

struct PathEnsemble {
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> stream_ids;
  std::vector<PathBundle> paths;
};

/// Euler-Maruyama path for stream `path_index` of `seed`. Reuses the buffers
/// in `out`.
void simulate_path_into(PathBundle& out, const ModelSpec& model, const TimeGrid& grid,
                        std::uint64_t seed, std::uint64_t path_index,
                        StreamDomain domain = StreamDomain::kPrice);

/// As simulate_path_into, started from an explicit state instead of the
/// model's initial state.
void simulate_path_from(PathBundle& out, const ModelSpec& model, StateView start,
                        const TimeGrid& grid, std::uint64_t seed, std::uint64_t path_index,
                        StreamDomain domain);

PathBundle simulate_path(const ModelSpec& model, const TimeGrid& grid, std::uint64_t seed,
                         std::uint64_t path_index);

PathEnsemble simulate_paths(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
                            std::uint64_t seed, unsigned threads = 1);

/// Simulates n_paths paths and maps each to a result without keeping the
/// paths. result[i] depends only on (model, grid, seed, i), so the output is
/// identical for every thread count.
template <class Fn>
auto map_paths(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
               std::uint64_t seed, unsigned threads, Fn&& fn)
    -> std::vector<decltype(fn(std::declval<const PathBundle&>(), std::size_t{}))> {
  using Result = decltype(fn(std::declval<const PathBundle&>(), std::size_t{}));
  std::vector<Result> results(n_paths);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n_paths, 1))));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned slot, std::size_t begin, std::size_t end) {
    try {
      PathBundle buffer;
      for (std::size_t i = begin; i < end; ++i) {
        simulate_path_into(buffer, model, grid, seed, i);
        results[i] = fn(static_cast<const PathBundle&>(buffer), i);
      }
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0, 0, n_paths);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n_paths + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(n_paths, t * chunk);
      const std::size_t end = std::min(n_paths, begin + chunk);
      if (begin < end) pool.emplace_back(work, t, begin, end);
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

/// Z_t = exp(L_t - <L>_t / 2).
std::vector<double> stochastic_exponential(std::span<const double> L,
                                           std::span<const double> bracket);

/// Running sum of squared increments, starting at 0.
std::vector<double> realized_quadratic_variation(std::span<const double> path);

/// Glues per-horizon segments: segment k (horizon k) supplies the values on
/// ((k-1), k]. t = 0 takes segment 1's value. Each segment is sampled on the
/// common grid with `steps_per_unit` steps per unit time and must hold at
/// least k * steps_per_unit + 1 points.
std::vector<double> glue_market_price_of_risk(std::span<const std::vector<double>> segments,
                                              std::size_t steps_per_unit);

/// K_t = sum lambda^2 d<M> on a scalar path, left-point evaluation.
std::vector<double> tradeoff_from_lambda(std::span<const double> lambda,
                                         std::span<const double> bracket_increments);

/// K estimated through lambda^T d<M> lambda with the realised bracket of M,
/// i.e. sum (lambda(S_t) . dM_t)^2. Requires model.lambda.
std::vector<double> tradeoff_from_realized_bracket(const PathBundle& path,
                                                   const ModelSpec& model);

}  // namespace expoarb::sde
