#include "expoarb/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "expoarb/error.hpp"
#include "expoarb/rng.hpp"
#include "expoarb/stats.hpp"

namespace expoarb::measure {

namespace {
constexpr const char* kModule = "measure-lab";
}

OrthogonalSpec OrthogonalSpec::independent_bm(double nu) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw ConfigError(kModule, "orthogonal volatility nu must be >= 0");
  }
  return {Mode::kIndependentBm, nu};
}

DensityPath density_process(const sde::PathBundle& path, const sde::ModelSpec& model,
                            const OrthogonalSpec& orth, std::uint64_t seed,
                            std::uint64_t path_index) {
  if (path.d != model.d || path.n_noise != model.n_noise || path.n_factors != model.n_factors) {
    throw ShapeError(kModule, "path dimensions do not match the model");
  }
  const std::size_t points = path.grid.n_points();
  if (path.K.size() != points || path.dW.size() != path.grid.n_steps() * path.n_noise) {
    throw ShapeError(kModule, "path arrays do not match its grid");
  }
  const double nu = orth.mode == OrthogonalSpec::Mode::kIndependentBm ? orth.nu : 0.0;

  DensityPath out;
  out.grid = path.grid;
  out.L.resize(points);
  out.bracket.resize(points);
  out.orth_bracket.resize(points);
  out.L[0] = 0.0;

  std::vector<double> state(model.state_dim()), ph(model.n_noise);
  const double sqrt_dt = std::sqrt(path.grid.dt());
  std::optional<NormalStream> orth_noise;
  if (nu > 0.0) orth_noise.emplace(seed, path_index, StreamDomain::kOrthogonal);

  for (std::size_t k = 0; k < path.grid.n_steps(); ++k) {
    path.state(k, state);
    model.phi(state, ph);
    const auto dw = path.increment(k);
    double inc = 0.0;
    for (std::size_t j = 0; j < model.n_noise; ++j) inc -= ph[j] * dw[j];
    if (orth_noise) inc += nu * sqrt_dt * (*orth_noise)();
    out.L[k + 1] = out.L[k] + inc;
  }
  // <L> = K + <N>, both non-negative, so <L> >= K survives rounding.
  for (std::size_t k = 0; k < points; ++k) {
    out.orth_bracket[k] = nu * nu * path.grid.time(k);
    out.bracket[k] = path.K[k] + out.orth_bracket[k];
  }
  out.Z = sde::stochastic_exponential(out.L, out.bracket);
  return out;
}

std::vector<DensityPath> density_process(const sde::PathEnsemble& paths,
                                         const sde::ModelSpec& model,
                                         const OrthogonalSpec& orth) {
  std::vector<DensityPath> out;
  out.reserve(paths.paths.size());
  for (std::size_t i = 0; i < paths.paths.size(); ++i) {
    out.push_back(density_process(paths.paths[i], model, orth, paths.master_seed,
                                  paths.stream_ids.empty() ? i : paths.stream_ids[i]));
  }
  return out;
}

double ExtendedMartingale::time(std::size_t k) const {
  if (k < base_steps) return static_cast<double>(k) * dt;
  if (k == base_steps) return base_horizon;
  if (k + 1 == L.size()) return horizon;
  return base_horizon + static_cast<double>(k - base_steps) * dt;
}

ExtendedMartingale extend_martingale(const DensityPath& density, const sde::PathBundle& path,
                                     double target_horizon, const sde::ModelSpec& model,
                                     std::uint64_t seed, std::uint64_t path_index) {
  const double T = density.grid.horizon();
  if (!(target_horizon >= T)) {
    throw PreconditionError(kModule, "extension target " + std::to_string(target_horizon) +
                                         " is below the horizon " + std::to_string(T));
  }
  ExtendedMartingale ext;
  ext.dt = density.grid.dt();
  ext.base_steps = density.grid.n_steps();
  ext.base_horizon = T;
  ext.L = density.L;
  ext.bracket = density.bracket;

  std::size_t extra = static_cast<std::size_t>(std::llround((target_horizon - T) / ext.dt));
  if (extra == 0) {
    ext.horizon = T;
    return ext;
  }

  const double L_T = density.L.back();
  const double bracket_T = density.bracket.back();
  if (model.constant_phi) {
    std::vector<double> ph(model.n_noise);
    model.phi(model.initial_state, ph);
    double rate = 0.0;
    for (double v : ph) rate += v * v;
    if (rate == 0.0) rate = 1.0;
    const double step_sd = std::sqrt(rate * ext.dt);
    NormalStream normal(seed, path_index, StreamDomain::kExtension);
    ext.L.resize(ext.base_steps + extra + 1);
    ext.bracket.resize(ext.base_steps + extra + 1);
    double level = L_T;
    for (std::size_t j = 1; j <= extra; ++j) {
      level += step_sd * normal();
      ext.L[ext.base_steps + j] = level;
      const double offset =
          j == extra ? target_horizon - T : static_cast<double>(j) * ext.dt;
      ext.bracket[ext.base_steps + j] = bracket_T + rate * offset;
    }
    ext.horizon = target_horizon;
    return ext;
  }

  // Continuation: keep simulating the market and integrate
  // -phi(S) dW against the fresh noise.
  extra = std::max<std::size_t>(extra, 2);
  std::vector<double> start(model.state_dim());
  path.state(path.grid.n_steps(), start);
  sde::PathBundle cont;
  const sde::TimeGrid cont_grid(static_cast<double>(extra) * ext.dt, extra);
  sde::simulate_path_from(cont, model, start, cont_grid, seed, path_index,
                          StreamDomain::kExtension);
  ext.L.resize(ext.base_steps + extra + 1);
  ext.bracket.resize(ext.base_steps + extra + 1);
  std::vector<double> state(model.state_dim()), ph(model.n_noise);
  for (std::size_t j = 0; j < extra; ++j) {
    cont.state(j, state);
    model.phi(state, ph);
    const auto dw = cont.increment(j);
    double inc = 0.0;
    for (std::size_t q = 0; q < model.n_noise; ++q) inc -= ph[q] * dw[q];
    ext.L[ext.base_steps + j + 1] = ext.L[ext.base_steps + j] + inc;
    ext.bracket[ext.base_steps + j + 1] = bracket_T + cont.K[j + 1];
  }
  ext.horizon = T + cont_grid.horizon();
  return ext;
}

TimeChangeRecord time_change(const ExtendedMartingale& extended, double level) {
  if (!(level > 0.0)) throw PreconditionError(kModule, "time-change level must be positive");
  TimeChangeRecord rec;
  rec.level = level;
  const auto it = std::lower_bound(extended.bracket.begin(), extended.bracket.end(), level);
  const std::size_t base = extended.base_steps;
  std::size_t zi = base;
  if (it == extended.bracket.end()) {
    rec.tau_time = std::numeric_limits<double>::infinity();
    rec.stopped_L = extended.L.back();
  } else {
    const auto idx = static_cast<std::size_t>(it - extended.bracket.begin());
    rec.tau_index = idx;
    rec.tau_time = extended.time(idx);
    rec.stopped_L = extended.L[idx];
    zi = std::min(idx, base);
  }
  rec.stopped_Z = std::exp(extended.L[zi] - 0.5 * extended.bracket[zi]);
  return rec;
}

std::size_t stopped_index(const TimeChangeRecord& record, const DensityPath& density) {
  const std::size_t n = density.grid.n_steps();
  return record.tau_index ? std::min(*record.tau_index, n) : n;
}

bool failure_set_indicator(const DensityPath& density, const TimeChangeRecord& record,
                           double delta, double horizon) {
  return density.Z[stopped_index(record, density)] > std::exp(-delta * horizon);
}

PqEstimate estimate_pq_probabilities(std::span<const FailureSample> samples) {
  if (samples.size() < 100) {
    throw ConfigError(kModule, "P/Q estimation needs at least 100 paths, got " +
                                   std::to_string(samples.size()));
  }
  const std::size_t n = samples.size();
  std::vector<double> ind(n), weighted_in(n), weighted_out(n), weight(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = samples[i];
    ind[i] = s.in_failure_set ? 1.0 : 0.0;
    weighted_in[i] = s.in_failure_set ? s.z_stopped : 0.0;
    weighted_out[i] = s.in_failure_set ? 0.0 : s.z_stopped;
    weight[i] = s.z_stopped;
  }
  const auto p = stats::mean_estimate(ind);
  const auto direct = stats::mean_estimate(weighted_in);
  const auto comp = stats::mean_estimate(weighted_out);
  const auto total = stats::mean_estimate(weight);

  PqEstimate out;
  out.n = n;
  out.p_hat = p.mean;
  out.p_se = p.se;
  out.q_hat = 1.0 - comp.mean;
  out.q_se = comp.se;
  out.q_direct = direct.mean;
  out.q_direct_se = direct.se;
  out.complement_mass = comp.mean;
  out.complement_se = comp.se;
  out.total_mass = total.mean;
  out.total_mass_se = total.se;
  return out;
}

PathAnalysis analyze_path(const sde::PathBundle& path, const sde::ModelSpec& model,
                          const OrthogonalSpec& orth, const FailureSetParams& params,
                          std::uint64_t seed, std::uint64_t path_index) {
  const double T = path.grid.horizon();
  const DensityPath density = density_process(path, model, orth, seed, path_index);
  const ExtendedMartingale ext = extend_martingale(
      density, path, std::max(T, params.extension_factor * T), model, seed, path_index);
  PathAnalysis out;
  out.tradeoff_T = path.K.back();
  out.bracket_T = density.bracket.back();
  out.z_T = density.Z.back();
  out.record = time_change(ext, params.c1 * T);
  out.sample.in_failure_set = failure_set_indicator(density, out.record, params.delta, T);
  out.sample.z_stopped = density.Z[stopped_index(out.record, density)];
  return out;
}

}  // namespace expoarb::measure
