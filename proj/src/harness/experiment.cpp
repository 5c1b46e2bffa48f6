#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "expoarb/error.hpp"
#include "expoarb/harness.hpp"
#include "expoarb/stats.hpp"

#ifndef EXPOARB_VERSION
#define EXPOARB_VERSION "0.0.0"
#endif

namespace expoarb::harness {

namespace {

using Clock = std::chrono::steady_clock;

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Per-path output of one horizon.
struct PathRecord {
  measure::PathAnalysis analysis;
  bool bracket_below_tradeoff = false;
  bool hedged = false;
  double claim = 0.0;
  double replication_error = 0.0;
  double min_value = 0.0;
};

struct HorizonRun {
  double T = 0.0;
  std::vector<PathRecord> records;
  std::optional<arb::HedgingStrategy> strategy;
};

bool hedge_applicable(const sde::ModelSpec& model, const ExperimentConfig& c) {
  return model.kind == sde::ModelKind::kConstantPhiGbm &&
         model.phi_value * model.phi_value > c.bounds.c1;
}

HorizonRun run_horizon(const sde::ModelSpec& model, const ExperimentConfig& c, double T) {
  const sde::TimeGrid grid(T, static_cast<std::size_t>(T) * c.simulation.steps_per_unit);
  const auto orth = c.simulation.orthogonal_nu > 0.0
                        ? measure::OrthogonalSpec::independent_bm(c.simulation.orthogonal_nu)
                        : measure::OrthogonalSpec::none();
  const measure::FailureSetParams params{c.bounds.c1, c.delta(), c.simulation.extension_factor};
  HorizonRun run;
  run.T = T;
  if (hedge_applicable(model, c)) {
    run.strategy = arb::digital_replication_strategy(model, c.delta(), c.bounds.c1, T, grid,
                                                     c.hedge.freeze_fraction);
  }
  const std::uint64_t seed = c.simulation.seed;
  const auto* strategy = run.strategy ? &*run.strategy : nullptr;
  run.records = sde::map_paths(
      model, grid, c.simulation.n_paths, seed, c.threads,
      [&](const sde::PathBundle& path, std::size_t i) {
        PathRecord r;
        r.analysis = measure::analyze_path(path, model, orth, params, seed, i);
        r.bracket_below_tradeoff = r.analysis.bracket_T < r.analysis.tradeoff_T;
        if (strategy != nullptr) {
          const auto h = strategy->run(path);
          r.hedged = true;
          r.claim = h.claim;
          r.replication_error = h.replication_error;
          r.min_value = *std::min_element(h.value.begin(), h.value.end());
        }
        return r;
      });
  return run;
}

ProbabilityRow probability_row(const HorizonRun& run, const ldp::BoundConstants& k) {
  std::vector<measure::FailureSample> samples;
  std::vector<double> zT;
  samples.reserve(run.records.size());
  zT.reserve(run.records.size());
  std::size_t reached = 0;
  std::size_t violations = 0;
  for (const auto& r : run.records) {
    samples.push_back(r.analysis.sample);
    zT.push_back(r.analysis.z_T);
    if (r.analysis.record.reached()) ++reached;
    if (r.bracket_below_tradeoff) ++violations;
  }
  const auto pq = measure::estimate_pq_probabilities(samples);
  const auto z = stats::mean_estimate(zT);
  ProbabilityRow row;
  row.T = run.T;
  row.p_hat = pq.p_hat;
  row.p_se = pq.p_se;
  row.p_bound = k.c_tilde * std::exp(-k.gamma1 * run.T);
  row.p_margin = row.p_bound - row.p_hat;
  row.q_hat = pq.q_hat;
  row.q_se = pq.q_se;
  row.q_bound = 1.0 - std::exp(-k.gamma2 * run.T);
  row.q_margin = row.q_bound - row.q_hat;
  row.q_direct = pq.q_direct;
  row.q_direct_se = pq.q_direct_se;
  row.total_mass = pq.total_mass;
  row.total_mass_se = pq.total_mass_se;
  row.mean_z_T = z.mean;
  row.mean_z_T_se = z.se;
  row.level_reached_fraction = static_cast<double>(reached) / static_cast<double>(samples.size());
  row.bracket_ge_tradeoff_violations = static_cast<double>(violations);
  row.pass = row.p_hat <= row.p_bound + 3.0 * row.p_se && row.q_hat >= row.q_bound - 3.0 * row.q_se;
  return row;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate(config);
  const auto started = Clock::now();
  auto lap = [last = started]() mutable {
    const auto now = Clock::now();
    const double s = std::chrono::duration<double>(now - last).count();
    last = now;
    return s;
  };

  ExperimentReport report;
  report.config = to_json(config);
  report.provenance.config_hash = fnv1a_hex(report.config.dump());
  report.provenance.seed = config.simulation.seed;
  report.provenance.version = EXPOARB_VERSION;

  const sde::ModelSpec model = build_model(config.model);

  std::vector<HorizonRun> runs;
  for (double T : config.simulation.horizons) runs.push_back(run_horizon(model, config, T));
  report.timings.emplace_back("simulate", lap());

  // Tradeoff decay. Tilted draws replace the plain ones when configured.
  if (runs.size() >= 3) {
    std::vector<ldp::TradeoffSamples> tradeoff;
    for (const auto& run : runs) {
      if (config.ldp.tilted_kappa) {
        const sde::TimeGrid grid(run.T,
                                 static_cast<std::size_t>(run.T) * config.simulation.steps_per_unit);
        tradeoff.push_back(ldp::tilted_ou_tradeoff_samples(
            model, *config.ldp.tilted_kappa, grid, config.simulation.n_paths,
            config.simulation.seed, config.threads));
      } else {
        ldp::TradeoffSamples s;
        s.horizon = run.T;
        for (const auto& r : run.records) s.K.push_back(r.analysis.tradeoff_T);
        tradeoff.push_back(std::move(s));
      }
    }
    if (config.simulation.n_paths >= 1000) {
      report.ldp = ldp::estimate_ldp_rate(tradeoff, config.bounds.c1);
    } else {
      report.ldp_note = "not run: fewer than 1000 paths per horizon";
    }
  } else {
    report.ldp_note = "not run: fewer than 3 horizons";
  }
  report.timings.emplace_back("ldp", lap());

  report.constants = ldp::bound_constants(config.bounds.c1, config.bounds.c2, config.delta(),
                                          report.ldp ? &*report.ldp : nullptr,
                                          std::max(config.bounds.search_cap, 1.0));
  try {
    report.gamma3 =
        ldp::find_gamma3_Ttilde(report.constants, config.bounds.gamma3, config.bounds.search_cap);
    report.T_tilde_found = true;
  } catch (const SearchExhaustedError&) {
    report.gamma3.gamma3 = config.bounds.gamma3.value_or(report.constants.gamma2 / 8.0);
    report.gamma3.T_tilde = std::numeric_limits<double>::infinity();
    report.T_tilde_found = false;
  }

  for (const auto& run : runs) {
    CascadeRow row;
    row.T = run.T;
    try {
      row.params = ldp::cascade_params(report.constants, run.T, report.gamma3.gamma3,
                                       config.bounds.search_cap);
      if (row.params->eps1 < 1.0 && row.params->eps1_tilde < 1.0 && row.params->eps2_tilde < 1.0) {
        row.lemma_condition = ldp::check_eps_arbitrage_condition(
            row.params->eps1, row.params->eps2, row.params->eps1_tilde, row.params->eps2_tilde,
            row.params->alpha);
      } else {
        row.note = "epsilon outside (0, 1): horizon below T~";
      }
    } catch (const PreconditionError& e) {
      row.note = e.what();
    }
    report.cascade.push_back(std::move(row));
    report.probabilities.push_back(probability_row(run, report.constants));
  }
  report.timings.emplace_back("bounds", lap());

  if (!hedge_applicable(model, config)) {
    report.certificate_status = "not_applicable";
  } else {
    std::vector<arb::HorizonSamples> samples;
    bool overflow = false;
    for (const auto& run : runs) {
      const auto& strat = *run.strategy;
      std::vector<double> claims, errors;
      HedgeRow h;
      h.T = run.T;
      h.tau = strat.maturity();
      h.initial_cost = strat.initial_cost();
      h.w_cutoff = strat.w_cutoff();
      h.price_cutoff = strat.threshold();
      double sq = 0.0;
      double shortfall = 0.0;
      double min_claim = std::numeric_limits<double>::infinity();
      for (const auto& r : run.records) {
        claims.push_back(r.claim);
        sq += r.replication_error * r.replication_error;
        shortfall = std::max(shortfall, -r.replication_error);
        min_claim = std::min(min_claim, r.claim);
        if (!(r.min_value >= -h.initial_cost - shortfall)) ++h.admissibility_violations;
      }
      h.rms_replication_error = std::sqrt(sq / static_cast<double>(run.records.size()));
      h.max_shortfall = shortfall;
      h.min_claim = min_claim;
      h.scale = std::exp((report.constants.gamma2 / 2.0 - report.gamma3.gamma3) * run.T);
      h.tolerance = h.scale * shortfall;
      report.hedges.push_back(h);
      try {
        samples.push_back({run.T,
                           arb::scaled_payoff(claims, report.constants.gamma2,
                                              report.gamma3.gamma3, run.T),
                           h.tolerance});
      } catch (const OverflowError&) {
        overflow = true;
      }
    }
    if (overflow) {
      report.certificate_status = "inconclusive";
    } else if (samples.size() < 2 || config.simulation.n_paths < 1000) {
      report.certificate_status = "inconclusive";
    } else {
      const double gamma4 = report.constants.gamma1 / 2.0;
      const double C = std::exp2(1.0 + report.constants.gamma1 / report.constants.gamma2) *
                       std::sqrt(report.constants.c_tilde);
      report.certificate = arb::verify_definition(samples, report.gamma3.gamma3, gamma4, C);
      report.certificate_status = report.certificate->pass ? "pass" : "fail";
    }
  }
  report.timings.emplace_back("certificate", lap());
  report.timings.emplace_back(
      "total", std::chrono::duration<double>(Clock::now() - started).count());
  return report;
}

int exit_code(const ExperimentReport& report) {
  if (report.certificate_status == "pass" || report.certificate_status == "not_applicable") {
    return 0;
  }
  return 2;
}

}  // namespace expoarb::harness
