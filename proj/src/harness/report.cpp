#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "expoarb/error.hpp"
#include "expoarb/harness.hpp"

namespace expoarb::harness {

namespace {
constexpr const char* kModule = "cli-harness";
using nlohmann::json;

// JSON has no inf/nan; those go out as strings and come back as doubles.
json num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double as_num(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> as_nums(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(as_num(x));
  return v;
}

json constants_json(const ldp::BoundConstants& c) {
  return {{"c1", num(c.c1)},         {"c2", num(c.c2)},         {"delta", num(c.delta)},
          {"gamma1", num(c.gamma1)}, {"gamma2", num(c.gamma2)}, {"c_tilde", num(c.c_tilde)},
          {"t0", num(c.T0)}};
}

json cascade_json(const ldp::CascadeParams& p) {
  return {{"t", num(p.T)},
          {"alpha", num(p.alpha)},
          {"eps1", num(p.eps1)},
          {"eps2", num(p.eps2)},
          {"eps1_tilde", num(p.eps1_tilde)},
          {"eps2_tilde", num(p.eps2_tilde)},
          {"gamma3", num(p.gamma3)},
          {"gamma4", num(p.gamma4)},
          {"c", num(p.C)},
          {"t_tilde", num(p.T_tilde)},
          {"beyond_t_tilde", p.beyond_T_tilde}};
}

ldp::CascadeParams cascade_from(const json& j) {
  ldp::CascadeParams p;
  p.T = as_num(j.at("t"));
  p.alpha = as_num(j.at("alpha"));
  p.eps1 = as_num(j.at("eps1"));
  p.eps2 = as_num(j.at("eps2"));
  p.eps1_tilde = as_num(j.at("eps1_tilde"));
  p.eps2_tilde = as_num(j.at("eps2_tilde"));
  p.gamma3 = as_num(j.at("gamma3"));
  p.gamma4 = as_num(j.at("gamma4"));
  p.C = as_num(j.at("c"));
  p.T_tilde = as_num(j.at("t_tilde"));
  p.beyond_T_tilde = j.at("beyond_t_tilde").get<bool>();
  return p;
}

json ldp_json(const ldp::LdpEstimate& e) {
  json logs = json::array();
  for (const auto& l : e.log_probs) logs.push_back(l ? num(*l) : json(nullptr));
  return {{"c1", num(e.c1)},
          {"horizons", nums(e.horizons)},
          {"p_hat", nums(e.p_hat)},
          {"p_se", nums(e.p_se)},
          {"log_probs", logs},
          {"zero_count", e.zero_count},
          {"zero_count_bounds", nums(e.zero_count_bounds)},
          {"rate_estimate", e.rate_estimate ? num(*e.rate_estimate) : json(nullptr)},
          {"status", ldp::to_string(e.status)}};
}

ldp::LdpStatus status_from(const std::string& s) {
  for (auto st : {ldp::LdpStatus::kEstimated, ldp::LdpStatus::kBoundOnly,
                  ldp::LdpStatus::kConsistentWithAnyRate, ldp::LdpStatus::kInconclusive}) {
    if (ldp::to_string(st) == s) return st;
  }
  throw ConfigError(kModule, "unknown ldp status " + s);
}

json probability_json(const ProbabilityRow& r) {
  return {{"t", num(r.T)},
          {"p_hat", num(r.p_hat)},
          {"p_se", num(r.p_se)},
          {"p_bound", num(r.p_bound)},
          {"p_margin", num(r.p_margin)},
          {"q_hat", num(r.q_hat)},
          {"q_se", num(r.q_se)},
          {"q_bound", num(r.q_bound)},
          {"q_margin", num(r.q_margin)},
          {"q_direct", num(r.q_direct)},
          {"q_direct_se", num(r.q_direct_se)},
          {"total_mass", num(r.total_mass)},
          {"total_mass_se", num(r.total_mass_se)},
          {"mean_z_t", num(r.mean_z_T)},
          {"mean_z_t_se", num(r.mean_z_T_se)},
          {"level_reached_fraction", num(r.level_reached_fraction)},
          {"bracket_ge_tradeoff_violations", num(r.bracket_ge_tradeoff_violations)},
          {"pass", r.pass}};
}

json hedge_json(const HedgeRow& h) {
  return {{"t", num(h.T)},
          {"tau", num(h.tau)},
          {"initial_cost", num(h.initial_cost)},
          {"w_cutoff", num(h.w_cutoff)},
          {"price_cutoff", num(h.price_cutoff)},
          {"rms_replication_error", num(h.rms_replication_error)},
          {"max_shortfall", num(h.max_shortfall)},
          {"min_claim", num(h.min_claim)},
          {"scale", num(h.scale)},
          {"tolerance", num(h.tolerance)},
          {"admissibility_violations", h.admissibility_violations}};
}

json check_json(const arb::HorizonCheck& c) {
  return {{"t", num(c.horizon)},
          {"gamma3", num(c.gamma3)},
          {"gamma4", num(c.gamma4)},
          {"c", num(c.C)},
          {"min_x", num(c.min_X)},
          {"floor", num(c.floor)},
          {"tolerance", num(c.tolerance)},
          {"failure_prob", num(c.failure_prob)},
          {"failure_se", num(c.failure_se)},
          {"bound", num(c.bound)},
          {"log_bound", num(c.log_bound)},
          {"log_failure", num(c.log_failure)},
          {"pass_floor", c.pass_floor},
          {"pass_failure", c.pass_failure}};
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError(kModule, "cannot write " + p.string());
  return out;
}

}  // namespace

json report_body(const ExperimentReport& r) {
  json j;
  j["config"] = r.config;
  j["provenance"] = {{"config_hash", r.provenance.config_hash},
                     {"seed", r.provenance.seed},
                     {"version", r.provenance.version}};
  j["bound_constants"] = constants_json(r.constants);
  j["gamma3"] = {{"gamma3", num(r.gamma3.gamma3)},
                 {"t_tilde", num(r.gamma3.T_tilde)},
                 {"t_tilde_found", r.T_tilde_found}};
  json cascade = json::array();
  for (const auto& c : r.cascade) {
    cascade.push_back({{"t", num(c.T)},
                       {"cascade_params", c.params ? cascade_json(*c.params) : json(nullptr)},
                       {"lemma_condition", c.lemma_condition},
                       {"note", c.note}});
  }
  j["cascade"] = cascade;
  j["ldp_estimate"] = r.ldp ? ldp_json(*r.ldp) : json(nullptr);
  j["ldp_note"] = r.ldp_note;
  json probs = json::array();
  for (const auto& p : r.probabilities) probs.push_back(probability_json(p));
  j["probabilities"] = probs;
  json hedges = json::array();
  for (const auto& h : r.hedges) hedges.push_back(hedge_json(h));
  j["hedges"] = hedges;
  if (r.certificate) {
    json checks = json::array();
    for (const auto& c : r.certificate->horizons) checks.push_back(check_json(c));
    j["arbitrage_certificate"] = {{"horizons", checks},
                                  {"failure_non_increasing", r.certificate->failure_non_increasing},
                                  {"pass", r.certificate->pass}};
  } else {
    j["arbitrage_certificate"] = nullptr;
  }
  j["certificate_status"] = r.certificate_status;
  return j;
}

json to_json(const ExperimentReport& r) {
  json j = report_body(r);
  json t = json::object();
  for (const auto& [name, secs] : r.timings) t[name] = secs;
  j["timings"] = t;
  return j;
}

ExperimentReport report_from_json(const json& j) {
  ExperimentReport r;
  try {
    r.config = j.at("config");
    const auto& pv = j.at("provenance");
    r.provenance.config_hash = pv.at("config_hash").get<std::string>();
    r.provenance.seed = pv.at("seed").get<std::uint64_t>();
    r.provenance.version = pv.at("version").get<std::string>();

    const auto& k = j.at("bound_constants");
    r.constants.c1 = as_num(k.at("c1"));
    r.constants.c2 = as_num(k.at("c2"));
    r.constants.delta = as_num(k.at("delta"));
    r.constants.gamma1 = as_num(k.at("gamma1"));
    r.constants.gamma2 = as_num(k.at("gamma2"));
    r.constants.c_tilde = as_num(k.at("c_tilde"));
    r.constants.T0 = as_num(k.at("t0"));

    const auto& g = j.at("gamma3");
    r.gamma3.gamma3 = as_num(g.at("gamma3"));
    r.gamma3.T_tilde = as_num(g.at("t_tilde"));
    r.T_tilde_found = g.at("t_tilde_found").get<bool>();

    for (const auto& c : j.at("cascade")) {
      CascadeRow row;
      row.T = as_num(c.at("t"));
      if (!c.at("cascade_params").is_null()) row.params = cascade_from(c.at("cascade_params"));
      row.lemma_condition = c.at("lemma_condition").get<bool>();
      row.note = c.at("note").get<std::string>();
      r.cascade.push_back(std::move(row));
    }

    if (!j.at("ldp_estimate").is_null()) {
      const auto& l = j.at("ldp_estimate");
      ldp::LdpEstimate e;
      e.c1 = as_num(l.at("c1"));
      e.horizons = as_nums(l.at("horizons"));
      e.p_hat = as_nums(l.at("p_hat"));
      e.p_se = as_nums(l.at("p_se"));
      for (const auto& x : l.at("log_probs")) {
        e.log_probs.push_back(x.is_null() ? std::nullopt : std::optional<double>(as_num(x)));
      }
      e.zero_count = l.at("zero_count").get<std::vector<bool>>();
      e.zero_count_bounds = as_nums(l.at("zero_count_bounds"));
      if (!l.at("rate_estimate").is_null()) e.rate_estimate = as_num(l.at("rate_estimate"));
      e.status = status_from(l.at("status").get<std::string>());
      r.ldp = std::move(e);
    }
    r.ldp_note = j.at("ldp_note").get<std::string>();

    for (const auto& p : j.at("probabilities")) {
      ProbabilityRow row;
      row.T = as_num(p.at("t"));
      row.p_hat = as_num(p.at("p_hat"));
      row.p_se = as_num(p.at("p_se"));
      row.p_bound = as_num(p.at("p_bound"));
      row.p_margin = as_num(p.at("p_margin"));
      row.q_hat = as_num(p.at("q_hat"));
      row.q_se = as_num(p.at("q_se"));
      row.q_bound = as_num(p.at("q_bound"));
      row.q_margin = as_num(p.at("q_margin"));
      row.q_direct = as_num(p.at("q_direct"));
      row.q_direct_se = as_num(p.at("q_direct_se"));
      row.total_mass = as_num(p.at("total_mass"));
      row.total_mass_se = as_num(p.at("total_mass_se"));
      row.mean_z_T = as_num(p.at("mean_z_t"));
      row.mean_z_T_se = as_num(p.at("mean_z_t_se"));
      row.level_reached_fraction = as_num(p.at("level_reached_fraction"));
      row.bracket_ge_tradeoff_violations = as_num(p.at("bracket_ge_tradeoff_violations"));
      row.pass = p.at("pass").get<bool>();
      r.probabilities.push_back(row);
    }

    for (const auto& h : j.at("hedges")) {
      HedgeRow row;
      row.T = as_num(h.at("t"));
      row.tau = as_num(h.at("tau"));
      row.initial_cost = as_num(h.at("initial_cost"));
      row.w_cutoff = as_num(h.at("w_cutoff"));
      row.price_cutoff = as_num(h.at("price_cutoff"));
      row.rms_replication_error = as_num(h.at("rms_replication_error"));
      row.max_shortfall = as_num(h.at("max_shortfall"));
      row.min_claim = as_num(h.at("min_claim"));
      row.scale = as_num(h.at("scale"));
      row.tolerance = as_num(h.at("tolerance"));
      row.admissibility_violations = h.at("admissibility_violations").get<std::size_t>();
      r.hedges.push_back(row);
    }

    if (!j.at("arbitrage_certificate").is_null()) {
      const auto& c = j.at("arbitrage_certificate");
      arb::ArbitrageCertificate cert;
      for (const auto& h : c.at("horizons")) {
        arb::HorizonCheck hc;
        hc.horizon = as_num(h.at("t"));
        hc.gamma3 = as_num(h.at("gamma3"));
        hc.gamma4 = as_num(h.at("gamma4"));
        hc.C = as_num(h.at("c"));
        hc.min_X = as_num(h.at("min_x"));
        hc.floor = as_num(h.at("floor"));
        hc.tolerance = as_num(h.at("tolerance"));
        hc.failure_prob = as_num(h.at("failure_prob"));
        hc.failure_se = as_num(h.at("failure_se"));
        hc.bound = as_num(h.at("bound"));
        hc.log_bound = as_num(h.at("log_bound"));
        hc.log_failure = as_num(h.at("log_failure"));
        hc.pass_floor = h.at("pass_floor").get<bool>();
        hc.pass_failure = h.at("pass_failure").get<bool>();
        cert.horizons.push_back(hc);
      }
      cert.failure_non_increasing = c.at("failure_non_increasing").get<bool>();
      cert.pass = c.at("pass").get<bool>();
      r.certificate = std::move(cert);
    }
    r.certificate_status = j.at("certificate_status").get<std::string>();

    if (j.contains("timings")) {
      for (const auto& [name, secs] : j.at("timings").items()) {
        r.timings.emplace_back(name, secs.get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(kModule, std::string("malformed report: ") + e.what());
  }
  return r;
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  if (name == "human") return Format::kHuman;
  throw ConfigError(kModule, "unknown format " + name + " (csv, json, human)");
}

std::string human_summary(const ExperimentReport& r) {
  std::ostringstream out;
  char line[256];
  out << "expoarb report  seed " << r.provenance.seed << "  config " << r.provenance.config_hash
      << "  version " << r.provenance.version << "\n\n";
  const auto& k = r.constants;
  std::snprintf(line, sizeof line,
                "constants  c1 %.6g  c2 %.6g  delta %.6g  gamma1 %.6f  gamma2 %.6f  C~ %.6f  T0 %g\n",
                k.c1, k.c2, k.delta, k.gamma1, k.gamma2, k.c_tilde, k.T0);
  out << line;
  std::snprintf(line, sizeof line, "gamma3 %.6g  T~ %g%s\n\n", r.gamma3.gamma3, r.gamma3.T_tilde,
                r.T_tilde_found ? "" : " (not found below the search cap)");
  out << line;

  out << "probabilities\n";
  std::snprintf(line, sizeof line, "%8s %12s %10s %12s %12s %10s %12s %5s\n", "T", "p_hat", "p_se",
                "p_bound", "q_hat", "q_se", "q_bound", "pass");
  out << line;
  for (const auto& p : r.probabilities) {
    std::snprintf(line, sizeof line, "%8g %12.6g %10.3g %12.6g %12.8f %10.3g %12.8f %5s\n", p.T,
                  p.p_hat, p.p_se, p.p_bound, p.q_hat, p.q_se, p.q_bound, p.pass ? "yes" : "no");
    out << line;
  }

  out << "\ncascade\n";
  std::snprintf(line, sizeof line, "%8s %10s %12s %12s %12s %12s %6s\n", "T", "alpha", "eps1",
                "eps2", "eps1~", "eps2~", "lemma");
  out << line;
  for (const auto& c : r.cascade) {
    if (c.params) {
      const auto& p = *c.params;
      std::snprintf(line, sizeof line, "%8g %10.6f %12.4e %12.4e %12.4e %12.4e %6s\n", c.T, p.alpha,
                    p.eps1, p.eps2, p.eps1_tilde, p.eps2_tilde, c.lemma_condition ? "yes" : "no");
      out << line;
    } else {
      std::snprintf(line, sizeof line, "%8g  %s\n", c.T, c.note.c_str());
      out << line;
    }
  }

  out << "\nldp  ";
  if (r.ldp) {
    out << ldp::to_string(r.ldp->status);
    if (r.ldp->rate_estimate) out << "  rate proxy " << *r.ldp->rate_estimate;
    out << "\n";
    for (std::size_t i = 0; i < r.ldp->horizons.size(); ++i) {
      std::snprintf(line, sizeof line, "%8g  p_hat %.4e  se %.2e%s\n", r.ldp->horizons[i],
                    r.ldp->p_hat[i], r.ldp->p_se[i], r.ldp->zero_count[i] ? "  zero count" : "");
      out << line;
    }
  } else {
    out << r.ldp_note << "\n";
  }

  if (!r.hedges.empty()) {
    out << "\nhedge\n";
    std::snprintf(line, sizeof line, "%8s %10s %10s %12s %12s %12s\n", "T", "tau", "cost",
                  "rms_error", "shortfall", "tolerance");
    out << line;
    for (const auto& h : r.hedges) {
      std::snprintf(line, sizeof line, "%8g %10.4f %10.6f %12.4e %12.4e %12.4e\n", h.T, h.tau,
                    h.initial_cost, h.rms_replication_error, h.max_shortfall, h.tolerance);
      out << line;
    }
  }

  out << "\ncertificate  " << r.certificate_status << "\n";
  if (r.certificate) {
    for (const auto& c : r.certificate->horizons) {
      std::snprintf(line, sizeof line,
                    "%8g  min X %.4e  floor %.4e  P[fail] %.4e (se %.2e)  bound %.4e  %s\n",
                    c.horizon, c.min_X, c.floor, c.failure_prob, c.failure_se, c.bound,
                    c.pass_floor && c.pass_failure ? "ok" : "FAIL");
      out << line;
    }
  }
  return out.str();
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& r, Format format,
                                               const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(kModule, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;

  if (format == Format::kJson) {
    const auto p = dir / "report.json";
    auto out = open_out(p);
    out << to_json(r).dump(2) << "\n";
    written.push_back(p);
  } else if (format == Format::kHuman) {
    const auto p = dir / "report.txt";
    auto out = open_out(p);
    out << human_summary(r);
    written.push_back(p);
  } else {
    {
      const auto p = dir / "probability.csv";
      auto out = open_out(p);
      out << kProbabilityCsvHeader << "\n";
      for (const auto& row : r.probabilities) {
        out << fmt(row.T) << ',' << fmt(row.p_hat) << ',' << fmt(row.p_se) << ','
            << fmt(row.p_bound) << ',' << fmt(row.q_hat) << ',' << fmt(row.q_se) << ','
            << fmt(row.q_bound) << ',' << (row.pass ? "true" : "false") << "\n";
      }
      written.push_back(p);
    }
    {
      const auto p = dir / "cascade.csv";
      auto out = open_out(p);
      out << "T,alpha,eps1,eps2,eps1_tilde,eps2_tilde,gamma3,gamma4,C,lemma_condition\n";
      for (const auto& c : r.cascade) {
        if (!c.params) continue;
        const auto& q = *c.params;
        out << fmt(c.T) << ',' << fmt(q.alpha) << ',' << fmt(q.eps1) << ',' << fmt(q.eps2) << ','
            << fmt(q.eps1_tilde) << ',' << fmt(q.eps2_tilde) << ',' << fmt(q.gamma3) << ','
            << fmt(q.gamma4) << ',' << fmt(q.C) << ',' << (c.lemma_condition ? "true" : "false")
            << "\n";
      }
      written.push_back(p);
    }
    {
      const auto p = dir / "ldp.csv";
      auto out = open_out(p);
      out << "T,p_hat,p_se,log_prob,zero_count\n";
      if (r.ldp) {
        for (std::size_t i = 0; i < r.ldp->horizons.size(); ++i) {
          out << fmt(r.ldp->horizons[i]) << ',' << fmt(r.ldp->p_hat[i]) << ','
              << fmt(r.ldp->p_se[i]) << ','
              << (r.ldp->log_probs[i] ? fmt(*r.ldp->log_probs[i]) : "") << ','
              << (r.ldp->zero_count[i] ? "true" : "false") << "\n";
        }
      }
      written.push_back(p);
    }
    {
      const auto p = dir / "hedge.csv";
      auto out = open_out(p);
      out << "T,tau,initial_cost,rms_replication_error,max_shortfall,scale,tolerance\n";
      for (const auto& h : r.hedges) {
        out << fmt(h.T) << ',' << fmt(h.tau) << ',' << fmt(h.initial_cost) << ','
            << fmt(h.rms_replication_error) << ',' << fmt(h.max_shortfall) << ',' << fmt(h.scale)
            << ',' << fmt(h.tolerance) << "\n";
      }
      written.push_back(p);
    }
    {
      const auto p = dir / "certificate.csv";
      auto out = open_out(p);
      out << "T,min_X,floor,tolerance,failure_prob,failure_se,bound,log_bound,pass\n";
      if (r.certificate) {
        for (const auto& c : r.certificate->horizons) {
          out << fmt(c.horizon) << ',' << fmt(c.min_X) << ',' << fmt(c.floor) << ','
              << fmt(c.tolerance) << ',' << fmt(c.failure_prob) << ',' << fmt(c.failure_se) << ','
              << fmt(c.bound) << ',' << fmt(c.log_bound) << ','
              << (c.pass_floor && c.pass_failure ? "true" : "false") << "\n";
        }
      }
      written.push_back(p);
    }
  }
  return written;
}

}  // namespace expoarb::harness
