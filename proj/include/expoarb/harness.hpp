#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "expoarb/arbitrage.hpp"
#include "expoarb/ldp.hpp"
#include "expoarb/measure.hpp"
#include "expoarb/sde.hpp"

namespace expoarb::harness {

struct ModelBlock {
  std::string kind = "constant_phi";  // constant_phi | ou_phi
  double sigma = 0.2;
  double phi = 0.6;
  double kappa = 1.0;
  double eta = 1.0;
  double phi0 = 1.0;
  double s0 = 1.0;
};

struct SimulationBlock {
  std::vector<double> horizons;  // integer years, increasing
  std::size_t steps_per_unit = 100;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 7;
  double orthogonal_nu = 0.0;
  double extension_factor = 2.0;
};

struct BoundsBlock {
  double c1 = 0.25;
  double c2 = 1.0;
  std::optional<double> delta;   // default c1 / 4
  std::optional<double> gamma3;  // default gamma2 / 8
  double search_cap = ldp::kDefaultSearchCap;
};

struct LdpBlock {
  std::optional<double> tilted_kappa;  // OU model only
};

struct HedgeBlock {
  double freeze_fraction = 0.0;
};

struct OutputBlock {
  std::string directory = "out";
  std::vector<std::string> formats = {"csv", "json", "human"};
};

struct ExperimentConfig {
  ModelBlock model;
  SimulationBlock simulation;
  BoundsBlock bounds;
  LdpBlock ldp;
  HedgeBlock hedge;
  OutputBlock output;
  unsigned threads = 1;  // no effect on results

  double delta() const { return bounds.delta.value_or(bounds.c1 / 4.0); }
};

/// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& config);
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

sde::ModelSpec build_model(const ModelBlock& block);

/// One row of the P/Q table. margin = bound - estimate for each side.
struct ProbabilityRow {
  double T = 0.0;
  double p_hat = 0.0;
  double p_se = 0.0;
  double p_bound = 0.0;
  double p_margin = 0.0;
  double q_hat = 0.0;
  double q_se = 0.0;
  double q_bound = 0.0;
  double q_margin = 0.0;
  double q_direct = 0.0;
  double q_direct_se = 0.0;
  double total_mass = 0.0;
  double total_mass_se = 0.0;
  double mean_z_T = 0.0;
  double mean_z_T_se = 0.0;
  double level_reached_fraction = 0.0;
  double bracket_ge_tradeoff_violations = 0.0;
  bool pass = false;
};

struct CascadeRow {
  double T = 0.0;
  std::optional<ldp::CascadeParams> params;
  bool lemma_condition = false;
  std::string note;
};

struct HedgeRow {
  double T = 0.0;
  double tau = 0.0;
  double initial_cost = 0.0;
  double w_cutoff = 0.0;
  double price_cutoff = 0.0;
  double rms_replication_error = 0.0;
  double max_shortfall = 0.0;  // max over paths of (payoff - hedge value)^+
  double min_claim = 0.0;
  double scale = 0.0;
  double tolerance = 0.0;  // scale * max_shortfall
  std::size_t admissibility_violations = 0;
};

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
};

struct ExperimentReport {
  nlohmann::json config;
  Provenance provenance;
  ldp::BoundConstants constants;
  ldp::Gamma3Choice gamma3;
  bool T_tilde_found = false;
  std::vector<CascadeRow> cascade;
  std::optional<ldp::LdpEstimate> ldp;
  std::string ldp_note;
  std::vector<ProbabilityRow> probabilities;
  std::vector<HedgeRow> hedges;
  std::optional<arb::ArbitrageCertificate> certificate;
  std::string certificate_status;  // pass | fail | inconclusive | not_applicable
  std::vector<std::pair<std::string, double>> timings;  // seconds; excluded from the body
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// 0 pass or not applicable, 2 fail or inconclusive.
int exit_code(const ExperimentReport& report);

/// Report body without timings.
nlohmann::json report_body(const ExperimentReport& report);
nlohmann::json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);

enum class Format { kCsv, kJson, kHuman };
Format parse_format(const std::string& name);

inline constexpr const char* kProbabilityCsvHeader = "T,p_hat,p_se,p_bound,q_hat,q_se,q_bound,pass";

/// Writes the report into `directory`; returns the written paths.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, Format format,
                                               const std::filesystem::path& directory);

std::string human_summary(const ExperimentReport& report);

}  // namespace expoarb::harness
