#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "expoarb/error.hpp"
#include "expoarb/harness.hpp"

using namespace expoarb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config() {
  return json::parse(R"({
    "model": {"kind": "constant_phi", "sigma": 0.2, "phi": 0.6, "s0": 1.0},
    "simulation": {"horizons": [3, 5, 7], "steps_per_unit": 50, "n_paths": 1000, "seed": 7},
    "bounds": {"c1": 0.25, "c2": 1.0, "delta": 0.1, "gamma3": "auto"},
    "output": {"directory": "unused", "formats": ["csv"]}
  })");
}

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("expoarb_" + name);
  fs::remove_all(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const harness::ExperimentReport& shared_report() {
  static const auto r = harness::run_experiment(harness::parse_config(small_config()));
  return r;
}

}  // namespace

TEST(Config, ParsesAndRoundTrips) {
  const auto c = harness::parse_config(small_config());
  EXPECT_EQ(c.model.kind, "constant_phi");
  EXPECT_EQ(c.simulation.horizons, (std::vector<double>{3, 5, 7}));
  EXPECT_EQ(c.delta(), 0.1);
  EXPECT_FALSE(c.bounds.gamma3.has_value());
  const auto again = harness::parse_config(harness::to_json(c));
  EXPECT_EQ(harness::to_json(again), harness::to_json(c));
}

TEST(Config, DeltaDefaultsToQuarterC1) {
  auto j = small_config();
  j["bounds"].erase("delta");
  EXPECT_EQ(harness::parse_config(j).delta(), 0.0625);
}

TEST(Config, DeltaAtC1NamesTheConstraint) {
  auto j = small_config();
  j["bounds"]["delta"] = 0.25;
  try {
    harness::parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("δ < c₁/2"), std::string::npos) << e.what();
    EXPECT_EQ(e.module(), "cli-harness");
  }
}

TEST(Config, RejectsInvalidBlocks) {
  auto bad = [](auto mutate) {
    auto j = small_config();
    mutate(j);
    return j;
  };
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["model"]["kind"] = "heston"; })), ConfigError);
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["model"]["sigma"] = -1; })), ConfigError);
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["simulation"]["horizons"] = json::array(); })),
               ConfigError);
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["simulation"]["horizons"] = {5, 3}; })),
               ConfigError);
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["simulation"]["horizons"] = {2.5}; })),
               ConfigError);
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["simulation"]["n_paths"] = 10; })),
               ConfigError);
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["bounds"]["gamma3"] = 0.5; })), ConfigError);
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["bounds"]["gamma3"] = "often"; })),
               ConfigError);
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["ldp"]["tilted_kappa"] = 5; })), ConfigError);
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["output"]["formats"] = {"xml"}; })),
               ConfigError);
  EXPECT_THROW(harness::parse_config(bad([](json& j) { j["simulation"]["seed"] = "seven"; })),
               ConfigError);
}

TEST(Config, LoadFromFile) {
  const auto dir = temp_dir("cfg");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "c.json");
    out << "// comment lines are allowed\n" << small_config().dump(2);
  }
  EXPECT_EQ(harness::load_config(dir / "c.json").simulation.n_paths, 1000u);
  EXPECT_THROW(harness::load_config(dir / "missing.json"), IoError);
  {
    std::ofstream out(dir / "broken.json");
    out << "{ model: ";
  }
  EXPECT_THROW(harness::load_config(dir / "broken.json"), ConfigError);
}

TEST(Experiment, AllSectionsPopulated) {
  const auto& r = shared_report();
  EXPECT_EQ(r.probabilities.size(), 3u);
  EXPECT_EQ(r.cascade.size(), 3u);
  EXPECT_EQ(r.hedges.size(), 3u);
  EXPECT_TRUE(r.ldp.has_value());
  EXPECT_TRUE(r.certificate.has_value());
  EXPECT_EQ(r.provenance.seed, 7u);
  EXPECT_EQ(r.provenance.config_hash.size(), 16u);
  EXPECT_FALSE(r.timings.empty());
  EXPECT_EQ(r.certificate_status, r.certificate->pass ? "pass" : "fail");
}

TEST(Experiment, MarginsRecomputeFromRows) {
  for (const auto& row : shared_report().probabilities) {
    EXPECT_EQ(row.p_margin, row.p_bound - row.p_hat);
    EXPECT_EQ(row.q_margin, row.q_bound - row.q_hat);
    EXPECT_EQ(row.bracket_ge_tradeoff_violations, 0.0);
  }
}

TEST(Experiment, DeterministicAcrossRunsAndThreads) {
  auto c = harness::parse_config(small_config());
  const auto a = harness::report_body(harness::run_experiment(c)).dump();
  c.threads = 3;
  const auto b = harness::report_body(harness::run_experiment(c)).dump();
  EXPECT_EQ(a, harness::report_body(shared_report()).dump());
  EXPECT_EQ(a, b);
  c.simulation.seed = 8;
  EXPECT_NE(a, harness::report_body(harness::run_experiment(c)).dump());
}

TEST(Experiment, OuModelHasNoCertificate) {
  auto j = small_config();
  j["model"] = {{"kind", "ou_phi"}, {"kappa", 1.0}, {"eta", 1.0}, {"phi0", 1.0}, {"sigma", 0.2}};
  j["bounds"]["c1"] = 0.1;
  j["bounds"]["delta"] = 0.025;
  j["ldp"]["tilted_kappa"] = 5.0;
  const auto r = harness::run_experiment(harness::parse_config(j));
  EXPECT_EQ(r.certificate_status, "not_applicable");
  EXPECT_TRUE(r.hedges.empty());
  ASSERT_TRUE(r.ldp.has_value());
  EXPECT_EQ(harness::exit_code(r), 0);
}

TEST(Experiment, SingleHorizonIsInconclusive) {
  auto j = small_config();
  j["simulation"]["horizons"] = {4};
  const auto r = harness::run_experiment(harness::parse_config(j));
  EXPECT_EQ(r.certificate_status, "inconclusive");
  EXPECT_FALSE(r.ldp.has_value());
  EXPECT_FALSE(r.ldp_note.empty());
  EXPECT_EQ(harness::exit_code(r), 2);
}

TEST(Experiment, ExitCodes) {
  harness::ExperimentReport r;
  for (const auto& [status, code] : std::vector<std::pair<std::string, int>>{
           {"pass", 0}, {"not_applicable", 0}, {"fail", 2}, {"inconclusive", 2}}) {
    r.certificate_status = status;
    EXPECT_EQ(harness::exit_code(r), code) << status;
  }
}

TEST(Report, JsonRoundTripIsExact) {
  const auto& r = shared_report();
  const auto text = harness::to_json(r).dump();
  const auto back = harness::report_from_json(json::parse(text));
  EXPECT_EQ(harness::report_body(back), harness::report_body(r));
  EXPECT_EQ(back.probabilities[1].q_hat, r.probabilities[1].q_hat);
  EXPECT_EQ(back.gamma3.T_tilde, r.gamma3.T_tilde);
  EXPECT_EQ(back.timings.size(), r.timings.size());
}

TEST(Report, NonFiniteValuesSurviveJson) {
  harness::ExperimentReport r;
  r.gamma3.T_tilde = std::numeric_limits<double>::infinity();
  r.certificate_status = "inconclusive";
  arb::ArbitrageCertificate cert;
  arb::HorizonCheck h;
  h.log_failure = -std::numeric_limits<double>::infinity();
  cert.horizons.push_back(h);
  r.certificate = cert;
  const auto back = harness::report_from_json(json::parse(harness::to_json(r).dump()));
  EXPECT_TRUE(std::isinf(back.gamma3.T_tilde));
  EXPECT_EQ(back.certificate->horizons[0].log_failure, -std::numeric_limits<double>::infinity());
}

TEST(Report, CsvSchemaAndFiles) {
  const auto dir = temp_dir("csv");
  const auto files = harness::emit_report(shared_report(), harness::Format::kCsv, dir);
  EXPECT_EQ(files.size(), 5u);
  const auto text = read_file(dir / "probability.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "T,p_hat,p_se,p_bound,q_hat,q_se,q_bound,pass");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  harness::emit_report(shared_report(), harness::Format::kJson, dir);
  harness::emit_report(shared_report(), harness::Format::kHuman, dir);
  EXPECT_EQ(harness::report_body(harness::report_from_json(json::parse(read_file(dir / "report.json")))),
            harness::report_body(shared_report()));
  EXPECT_NE(read_file(dir / "report.txt").find("certificate"), std::string::npos);
}

TEST(Report, EmptyReportWritesHeadersOnly) {
  const auto dir = temp_dir("empty");
  harness::ExperimentReport r;
  r.certificate_status = "inconclusive";
  for (const auto& f : harness::emit_report(r, harness::Format::kCsv, dir)) {
    const auto text = read_file(f);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1) << f;
  }
}

TEST(Report, UnwritablePathIsIoError) {
  const auto dir = temp_dir("blocked");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  harness::ExperimentReport r;
  EXPECT_THROW(harness::emit_report(r, harness::Format::kCsv, dir / "file" / "sub"), IoError);
  EXPECT_THROW(harness::parse_format("xml"), ConfigError);
}
