#include <cmath>
#include <fstream>
#include <sstream>

#include "expoarb/error.hpp"
#include "expoarb/harness.hpp"

namespace expoarb::harness {

namespace {
constexpr const char* kModule = "cli-harness";
using nlohmann::json;

template <class T>
void read(const json& block, const char* key, T& out) {
  if (block.contains(key)) out = block.at(key).get<T>();
}

void require_positive(double v, const std::string& name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(kModule, name + " must be positive, got " + std::to_string(v));
  }
}
}  // namespace

void validate(const ExperimentConfig& c) {
  const auto& m = c.model;
  if (m.kind != "constant_phi" && m.kind != "ou_phi") {
    throw ConfigError(kModule, "model.kind must be constant_phi or ou_phi, got " + m.kind);
  }
  require_positive(m.sigma, "model.sigma");
  require_positive(m.s0, "model.s0");
  if (m.kind == "ou_phi") {
    require_positive(m.kappa, "model.kappa");
    require_positive(m.eta, "model.eta");
  }

  const auto& s = c.simulation;
  if (s.horizons.empty()) throw ConfigError(kModule, "simulation.horizons must be non-empty");
  for (std::size_t i = 0; i < s.horizons.size(); ++i) {
    const double T = s.horizons[i];
    if (!(T >= 1.0) || std::floor(T) != T) {
      throw ConfigError(kModule, "simulation.horizons must be positive integers, got " +
                                     std::to_string(T));
    }
    if (i > 0 && !(T > s.horizons[i - 1])) {
      throw ConfigError(kModule, "simulation.horizons must be increasing");
    }
  }
  if (s.steps_per_unit < 2) throw ConfigError(kModule, "simulation.steps_per_unit must be >= 2");
  if (s.n_paths < 100) throw ConfigError(kModule, "simulation.n_paths must be >= 100");
  if (!(s.orthogonal_nu >= 0.0)) throw ConfigError(kModule, "simulation.orthogonal_nu must be >= 0");
  if (!(s.extension_factor >= 1.0)) {
    throw ConfigError(kModule, "simulation.extension_factor must be >= 1");
  }

  const auto& b = c.bounds;
  require_positive(b.c1, "bounds.c1");
  require_positive(b.c2, "bounds.c2");
  const double delta = c.delta();
  if (!(delta > 0.0) || !(delta < b.c1 / 2.0)) {
    throw ConfigError(kModule, "bounds.delta violates 0 < δ < c₁/2 (delta = " +
                                   std::to_string(delta) + ", c1 = " + std::to_string(b.c1) + ")");
  }
  if (b.gamma3) {
    if (!(*b.gamma3 > 0.0) || !(2.0 * *b.gamma3 < delta / 2.0)) {
      throw ConfigError(kModule, "bounds.gamma3 violates 0 < 2 γ₃ < γ₂/2");
    }
  }
  if (c.ldp.tilted_kappa) {
    if (m.kind != "ou_phi") throw ConfigError(kModule, "ldp.tilted_kappa needs model.kind ou_phi");
    require_positive(*c.ldp.tilted_kappa, "ldp.tilted_kappa");
  }
  if (!(c.hedge.freeze_fraction >= 0.0 && c.hedge.freeze_fraction < 1.0)) {
    throw ConfigError(kModule, "hedge.freeze_fraction must lie in [0, 1)");
  }
  for (const auto& f : c.output.formats) parse_format(f);
  if (c.threads == 0) throw ConfigError(kModule, "threads must be >= 1");
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("model")) {
      const auto& m = j.at("model");
      read(m, "kind", c.model.kind);
      read(m, "sigma", c.model.sigma);
      read(m, "phi", c.model.phi);
      read(m, "kappa", c.model.kappa);
      read(m, "eta", c.model.eta);
      read(m, "phi0", c.model.phi0);
      read(m, "s0", c.model.s0);
    }
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      read(s, "horizons", c.simulation.horizons);
      read(s, "steps_per_unit", c.simulation.steps_per_unit);
      read(s, "n_paths", c.simulation.n_paths);
      read(s, "seed", c.simulation.seed);
      read(s, "orthogonal_nu", c.simulation.orthogonal_nu);
      read(s, "extension_factor", c.simulation.extension_factor);
    }
    if (j.contains("bounds")) {
      const auto& b = j.at("bounds");
      read(b, "c1", c.bounds.c1);
      read(b, "c2", c.bounds.c2);
      if (b.contains("delta") && !b.at("delta").is_null()) {
        if (b.at("delta").is_string()) {
          if (b.at("delta").get<std::string>() != "auto") {
            throw ConfigError(kModule, "bounds.delta must be a number or \"auto\"");
          }
        } else {
          c.bounds.delta = b.at("delta").get<double>();
        }
      }
      if (b.contains("gamma3") && !b.at("gamma3").is_null()) {
        if (b.at("gamma3").is_string()) {
          if (b.at("gamma3").get<std::string>() != "auto") {
            throw ConfigError(kModule, "bounds.gamma3 must be a number or \"auto\"");
          }
        } else {
          c.bounds.gamma3 = b.at("gamma3").get<double>();
        }
      }
      read(b, "search_cap", c.bounds.search_cap);
    }
    if (j.contains("ldp")) {
      const auto& l = j.at("ldp");
      if (l.contains("tilted_kappa") && !l.at("tilted_kappa").is_null()) {
        c.ldp.tilted_kappa = l.at("tilted_kappa").get<double>();
      }
    }
    if (j.contains("hedge")) read(j.at("hedge"), "freeze_fraction", c.hedge.freeze_fraction);
    if (j.contains("output")) {
      const auto& o = j.at("output");
      read(o, "directory", c.output.directory);
      read(o, "formats", c.output.formats);
    }
    read(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(kModule, std::string("malformed config: ") + e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(kModule, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(kModule, "cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = {{"kind", c.model.kind}, {"sigma", c.model.sigma}, {"phi", c.model.phi},
                {"kappa", c.model.kappa}, {"eta", c.model.eta}, {"phi0", c.model.phi0},
                {"s0", c.model.s0}};
  j["simulation"] = {{"horizons", c.simulation.horizons},
                     {"steps_per_unit", c.simulation.steps_per_unit},
                     {"n_paths", c.simulation.n_paths},
                     {"seed", c.simulation.seed},
                     {"orthogonal_nu", c.simulation.orthogonal_nu},
                     {"extension_factor", c.simulation.extension_factor}};
  j["bounds"] = {{"c1", c.bounds.c1},
                 {"c2", c.bounds.c2},
                 {"delta", c.delta()},
                 {"gamma3", c.bounds.gamma3 ? json(*c.bounds.gamma3) : json("auto")},
                 {"search_cap", c.bounds.search_cap}};
  j["ldp"] = {{"tilted_kappa", c.ldp.tilted_kappa ? json(*c.ldp.tilted_kappa) : json(nullptr)}};
  j["hedge"] = {{"freeze_fraction", c.hedge.freeze_fraction}};
  j["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
  return j;
}

sde::ModelSpec build_model(const ModelBlock& b) {
  if (b.kind == "constant_phi") return sde::constant_phi_gbm(b.sigma, b.phi, b.s0);
  if (b.kind == "ou_phi") return sde::ou_phi_model(b.kappa, b.eta, b.phi0, b.sigma, b.s0);
  throw ConfigError(kModule, "unknown model kind " + b.kind);
}

}  // namespace expoarb::harness
