#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "expoarb/error.hpp"
#include "expoarb/harness.hpp"
#include "expoarb/ldp.hpp"
#include "expoarb/stats.hpp"

namespace {

using namespace expoarb;

int cmd_constants(double c1, double c2, double delta, double cap) {
  const auto k = ldp::bound_constants(c1, c2, delta, nullptr, cap);
  std::printf("gamma1 %.6f\ngamma2 %.6f\nc_tilde %.6f\nT0 %g\n", k.gamma1, k.gamma2, k.c_tilde,
              k.T0);
  return 0;
}

int cmd_tail_bound(double a, double b) {
  if (!(a > 0.0) || !(b >= 1.0)) {
    throw DomainError("ldp-bounds", "tail bound needs a > 0 and b >= 1");
  }
  const double bound = ldp::gaussian_tail_bound(a, b);
  const double exact = stats::normal_tail(a * b);
  std::printf("bound %.10e\nexact %.10e\nratio %.6f\n", bound, exact, bound / exact);
  return 0;
}

int cmd_cascade(double c1, double c2, double delta, double T, std::optional<double> gamma3,
                double cap) {
  const auto k = ldp::bound_constants(c1, c2, delta, nullptr, cap);
  const double g3 = gamma3.value_or(k.gamma2 / 8.0);
  const auto p = ldp::cascade_params(k, T, g3, cap);
  std::printf("T %g\nalpha %.10f\neps1 %.10e\neps2 %.10e\neps1_tilde %.10e\neps2_tilde %.10e\n",
              p.T, p.alpha, p.eps1, p.eps2, p.eps1_tilde, p.eps2_tilde);
  std::printf("gamma3 %.6g\ngamma4 %.6g\nC %.6f\nT_tilde %g\nbeyond_T_tilde %s\n", p.gamma3,
              p.gamma4, p.C, p.T_tilde, p.beyond_T_tilde ? "true" : "false");
  if (p.eps1 < 1.0 && p.eps1_tilde < 1.0 && p.eps2_tilde < 1.0) {
    const bool ok = ldp::check_eps_arbitrage_condition(p.eps1, p.eps2, p.eps1_tilde, p.eps2_tilde,
                                                       p.alpha);
    std::printf("lemma_condition %s\n", ok ? "true" : "false");
  } else {
    std::printf("lemma_condition n/a (epsilon outside (0, 1))\n");
  }
  return 0;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<unsigned> threads,
            const std::string& out_dir, const std::string& format) {
  auto config = harness::load_config(path);
  if (seed) config.simulation.seed = *seed;
  if (threads) config.threads = *threads;
  if (!out_dir.empty()) config.output.directory = out_dir;
  if (!format.empty()) config.output.formats = {format};
  harness::validate(config);
  const auto report = harness::run_experiment(config);
  for (const auto& f : config.output.formats) {
    harness::emit_report(report, harness::parse_format(f), config.output.directory);
  }
  std::cout << harness::human_summary(report);
  return harness::exit_code(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"expoarb: exponential arbitrage verification"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out_dir;
  std::string format;
  app.add_option("--seed", seed, "master seed (overrides config)");
  app.add_option("--threads", threads, "worker threads; results do not depend on it");
  app.add_option("--out-dir", out_dir, "report directory (overrides config)");
  app.add_option("--format", format, "csv | json | human (overrides config)")
      ->check(CLI::IsMember({"csv", "json", "human"}));

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("config", config_path)->required()->check(CLI::ExistingFile);

  double c1 = 0.0, c2 = 0.0, delta = 0.0, a = 0.0, b = 0.0, T = 0.0;
  double cap = ldp::kDefaultSearchCap;
  std::optional<double> gamma3;
  auto* constants = app.add_subcommand("constants", "gamma1, gamma2, C~ and T0");
  constants->add_option("--c1", c1)->required();
  constants->add_option("--c2", c2)->required();
  constants->add_option("--delta", delta)->required();
  constants->add_option("--search-cap", cap);

  auto* tail = app.add_subcommand("tail-bound", "Gaussian tail bound against the exact tail");
  tail->add_option("--a", a)->required();
  tail->add_option("--b", b)->required();

  auto* cascade = app.add_subcommand("cascade", "epsilon cascade at one horizon");
  cascade->add_option("--c1", c1)->required();
  cascade->add_option("--c2", c2)->required();
  cascade->add_option("--delta", delta)->required();
  cascade->add_option("--T", T)->required();
  cascade->add_option("--gamma3", gamma3);
  cascade->add_option("--search-cap", cap);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config_path, seed, threads, out_dir, format);
    if (*constants) return cmd_constants(c1, c2, delta, cap);
    if (*tail) return cmd_tail_bound(a, b);
    if (*cascade) return cmd_cascade(c1, c2, delta, T, gamma3, cap);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
