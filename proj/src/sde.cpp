#include "expoarb/sde.hpp"

#include <cmath>
#include <string>

#include "expoarb/error.hpp"

namespace expoarb::sde {

namespace {
constexpr const char* kModule = "sde-core";
}

TimeGrid::TimeGrid(double horizon, std::size_t n_steps) : horizon_(horizon), n_steps_(n_steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError(kModule, "grid horizon must be positive and finite, got " +
                                   std::to_string(horizon));
  }
  if (n_steps < 2) {
    throw ConfigError(kModule, "grid needs n_steps >= 2, got " + std::to_string(n_steps));
  }
  dt_ = horizon / static_cast<double>(n_steps);
}

TimeGrid TimeGrid::with_step(double horizon, double dt) {
  if (!(dt > 0.0)) throw ConfigError(kModule, "grid step must be positive");
  const double steps = std::round(horizon / dt);
  if (!(steps >= 2.0)) throw ConfigError(kModule, "grid step too coarse for horizon");
  return TimeGrid(horizon, static_cast<std::size_t>(steps));
}

void validate(const ModelSpec& m) {
  if (m.d == 0 || m.n_noise == 0) throw ConfigError(kModule, "model dimensions must be positive");
  if (!m.sigma || !m.phi) throw ConfigError(kModule, "model needs sigma and phi maps");
  if (m.n_factors > 0 && (!m.factor_drift || !m.factor_vol)) {
    throw ConfigError(kModule, "factor model needs drift and volatility maps");
  }
  if (m.initial_state.size() != m.state_dim()) {
    throw ConfigError(kModule, "initial state has " + std::to_string(m.initial_state.size()) +
                                   " entries, model state dimension is " +
                                   std::to_string(m.state_dim()));
  }
  if (m.complete && m.d != m.n_noise) {
    throw ConfigError(kModule, "complete model requires d == N");
  }
}

ModelSpec constant_phi_gbm(double vol, double phi, double s0) {
  if (!(vol > 0.0)) throw ConfigError(kModule, "volatility must be positive");
  if (!(s0 > 0.0)) throw ConfigError(kModule, "initial price must be positive");
  ModelSpec m;
  m.name = "constant_phi";
  m.kind = ModelKind::kConstantPhiGbm;
  m.d = 1;
  m.n_noise = 1;
  m.sigma = [vol](StateView x, std::span<double> out) { out[0] = vol * x[0]; };
  m.phi = [phi](StateView, std::span<double> out) { out[0] = phi; };
  m.lambda = [vol, phi](StateView x, std::span<double> out) { out[0] = phi / (vol * x[0]); };
  m.initial_state = {s0};
  m.constant_phi = true;
  m.complete = true;
  m.vol = vol;
  m.phi_value = phi;
  return m;
}

ModelSpec ou_phi_model(double kappa, double eta, double phi0, double vol, double s0) {
  if (!(kappa > 0.0) || !(eta > 0.0)) {
    throw ConfigError(kModule, "OU market price of risk needs kappa > 0 and eta > 0");
  }
  if (!(vol > 0.0)) throw ConfigError(kModule, "volatility must be positive");
  if (!(s0 > 0.0)) throw ConfigError(kModule, "initial price must be positive");
  ModelSpec m;
  m.name = "ou_phi";
  m.kind = ModelKind::kOuPhi;
  m.d = 1;
  m.n_noise = 2;
  m.n_factors = 1;
  m.sigma = [vol](StateView x, std::span<double> out) {
    out[0] = vol * x[0];
    out[1] = 0.0;
  };
  m.phi = [](StateView x, std::span<double> out) {
    out[0] = x[1];
    out[1] = 0.0;
  };
  m.lambda = [vol](StateView x, std::span<double> out) { out[0] = x[1] / (vol * x[0]); };
  m.factor_drift = [kappa](StateView x, std::span<double> out) { out[0] = -kappa * x[1]; };
  m.factor_vol = [eta](StateView, std::span<double> out) {
    out[0] = 0.0;
    out[1] = eta;
  };
  m.initial_state = {s0, phi0};
  m.vol = vol;
  m.phi_value = phi0;
  m.kappa = kappa;
  m.eta = eta;
  return m;
}

ModelSpec minimal_martingale_measure(const ModelSpec& model) {
  validate(model);
  ModelSpec q = model;
  q.name = model.name + "@Q";
  const std::size_t n = model.n_noise;
  q.phi = [n](StateView, std::span<double> out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
  };
  q.lambda = [d = model.d](StateView, std::span<double> out) {
    for (std::size_t i = 0; i < d; ++i) out[i] = 0.0;
  };
  q.constant_phi = true;
  q.phi_value = 0.0;
  if (model.n_factors > 0) {
    const std::size_t nf = model.n_factors;
    q.factor_drift = [drift = model.factor_drift, fvol = model.factor_vol, phi = model.phi, nf,
                      n](StateView x, std::span<double> out) {
      std::vector<double> v(nf * n);
      std::vector<double> p(n);
      drift(x, out);
      fvol(x, v);
      phi(x, p);
      for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t j = 0; j < n; ++j) out[f] -= v[f * n + j] * p[j];
      }
    };
  }
  return q;
}

void PathBundle::state(std::size_t k, std::span<double> out) const {
  for (std::size_t i = 0; i < d; ++i) out[i] = S[k * d + i];
  for (std::size_t f = 0; f < n_factors; ++f) out[d + f] = factors[k * n_factors + f];
}

void simulate_path_into(PathBundle& out, const ModelSpec& model, const TimeGrid& grid,
                        std::uint64_t seed, std::uint64_t path_index, StreamDomain domain) {
  simulate_path_from(out, model, model.initial_state, grid, seed, path_index, domain);
}

void simulate_path_from(PathBundle& out, const ModelSpec& model, StateView start,
                        const TimeGrid& grid, std::uint64_t seed, std::uint64_t path_index,
                        StreamDomain domain) {
  const std::size_t d = model.d;
  const std::size_t n = model.n_noise;
  const std::size_t nf = model.n_factors;
  const std::size_t steps = grid.n_steps();
  const std::size_t points = grid.n_points();
  if (start.size() != model.state_dim()) {
    throw ConfigError(kModule, "start state does not match model state dimension");
  }

  out.grid = grid;
  out.d = d;
  out.n_noise = n;
  out.n_factors = nf;
  out.dW.resize(steps * n);
  out.S.resize(points * d);
  out.factors.resize(points * nf);
  out.M.assign(points * d, 0.0);
  out.A.assign(points * d, 0.0);
  out.K.resize(points);

  std::vector<double> x(start.begin(), start.end());
  std::vector<double> sig(d * n), ph(n), fdrift(nf), fvol(nf * n);
  for (std::size_t i = 0; i < d; ++i) out.S[i] = start[i];
  for (std::size_t f = 0; f < nf; ++f) out.factors[f] = start[d + f];
  out.K[0] = 0.0;

  NormalStream normal(seed, path_index, domain);
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);

  for (std::size_t k = 0; k < steps; ++k) {
    model.sigma(x, sig);
    model.phi(x, ph);
    double* dw = out.dW.data() + k * n;
    double phi_sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dw[j] = sqrt_dt * normal();
      phi_sq += ph[j] * ph[j];
    }
    const std::size_t cur = k * d;
    const std::size_t nxt = (k + 1) * d;
    for (std::size_t i = 0; i < d; ++i) {
      double dm = 0.0;
      double da = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        dm += sig[i * n + j] * dw[j];
        da += sig[i * n + j] * ph[j] * dt;
      }
      out.M[nxt + i] = out.M[cur + i] + dm;
      out.A[nxt + i] = out.A[cur + i] + da;
      out.S[nxt + i] = start[i] + out.M[nxt + i] + out.A[nxt + i];
    }
    // Constant integrands integrate in closed form, so K_T = |phi|^2 T exactly.
    out.K[k + 1] = model.constant_phi ? phi_sq * grid.time(k + 1) : out.K[k] + phi_sq * dt;

    if (nf > 0) {
      model.factor_drift(x, fdrift);
      model.factor_vol(x, fvol);
      for (std::size_t f = 0; f < nf; ++f) {
        double dy = fdrift[f] * dt;
        for (std::size_t j = 0; j < n; ++j) dy += fvol[f * n + j] * dw[j];
        out.factors[(k + 1) * nf + f] = out.factors[k * nf + f] + dy;
      }
    }

    for (std::size_t i = 0; i < d; ++i) x[i] = out.S[nxt + i];
    for (std::size_t f = 0; f < nf; ++f) x[d + f] = out.factors[(k + 1) * nf + f];
    for (double v : x) {
      if (!std::isfinite(v)) {
        throw SimulationError(kModule, "non-finite state on path " + std::to_string(path_index) +
                                           " at step " + std::to_string(k + 1));
      }
    }
    if (!std::isfinite(out.K[k + 1])) {
      throw SimulationError(kModule, "non-finite tradeoff on path " +
                                         std::to_string(path_index) + " at step " +
                                         std::to_string(k + 1));
    }
  }
}

PathBundle simulate_path(const ModelSpec& model, const TimeGrid& grid, std::uint64_t seed,
                         std::uint64_t path_index) {
  validate(model);
  PathBundle out;
  simulate_path_into(out, model, grid, seed, path_index);
  return out;
}

PathEnsemble simulate_paths(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
                            std::uint64_t seed, unsigned threads) {
  validate(model);
  if (n_paths == 0) throw ConfigError(kModule, "n_paths must be at least 1");
  PathEnsemble ensemble;
  ensemble.master_seed = seed;
  ensemble.stream_ids.resize(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) ensemble.stream_ids[i] = i;
  ensemble.paths = map_paths(model, grid, n_paths, seed, threads,
                             [](const PathBundle& p, std::size_t) { return p; });
  return ensemble;
}

std::vector<double> stochastic_exponential(std::span<const double> L,
                                           std::span<const double> bracket) {
  if (L.size() != bracket.size()) {
    throw ShapeError(kModule, "stochastic_exponential: L has " + std::to_string(L.size()) +
                                  " points, bracket has " + std::to_string(bracket.size()));
  }
  std::vector<double> z(L.size());
  for (std::size_t k = 0; k < L.size(); ++k) z[k] = std::exp(L[k] - 0.5 * bracket[k]);
  return z;
}

std::vector<double> realized_quadratic_variation(std::span<const double> path) {
  if (path.size() < 2) throw ShapeError(kModule, "quadratic variation needs >= 2 points");
  std::vector<double> qv(path.size());
  qv[0] = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double inc = path[k] - path[k - 1];
    qv[k] = qv[k - 1] + inc * inc;
  }
  return qv;
}

std::vector<double> glue_market_price_of_risk(std::span<const std::vector<double>> segments,
                                              std::size_t steps_per_unit) {
  if (segments.empty()) throw ConfigError(kModule, "glue: no segments supplied");
  if (steps_per_unit == 0) throw ConfigError(kModule, "glue: steps_per_unit must be positive");
  const std::size_t n = segments.size();
  for (std::size_t k = 1; k <= n; ++k) {
    if (segments[k - 1].size() < k * steps_per_unit + 1) {
      throw ConfigError(kModule, "glue: segment " + std::to_string(k) +
                                     " missing or does not cover (" + std::to_string(k - 1) +
                                     ", " + std::to_string(k) + "]");
    }
  }
  std::vector<double> out(n * steps_per_unit + 1);
  out[0] = segments[0][0];
  for (std::size_t j = 1; j < out.size(); ++j) {
    const std::size_t k = (j + steps_per_unit - 1) / steps_per_unit;  // j in ((k-1)u, ku]
    out[j] = segments[k - 1][j];
  }
  return out;
}

std::vector<double> tradeoff_from_lambda(std::span<const double> lambda,
                                         std::span<const double> bracket_increments) {
  if (lambda.size() != bracket_increments.size() + 1) {
    throw ShapeError(kModule, "tradeoff: lambda needs one more point than bracket increments");
  }
  std::vector<double> k(lambda.size());
  k[0] = 0.0;
  for (std::size_t j = 0; j < bracket_increments.size(); ++j) {
    k[j + 1] = k[j] + lambda[j] * lambda[j] * bracket_increments[j];
  }
  return k;
}

std::vector<double> tradeoff_from_realized_bracket(const PathBundle& path,
                                                   const ModelSpec& model) {
  if (!model.lambda) throw ConfigError(kModule, "model has no lambda map");
  const std::size_t d = path.d;
  std::vector<double> state(model.state_dim()), lam(d);
  std::vector<double> k(path.grid.n_points());
  k[0] = 0.0;
  for (std::size_t j = 0; j < path.grid.n_steps(); ++j) {
    path.state(j, state);
    model.lambda(state, lam);
    double proj = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      proj += lam[i] * (path.M[(j + 1) * d + i] - path.M[j * d + i]);
    }
    k[j + 1] = k[j] + proj * proj;
  }
  return k;
}

}  // namespace expoarb::sde
