#include "occlab/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "occlab/version.hpp"

namespace occlab {

namespace {

const char* block_rule_name(BlockRule r) {
  switch (r) {
    case BlockRule::karlin_ex1: return "karlin_ex1";
    case BlockRule::bgy_ex2: return "bgy_ex2";
    case BlockRule::gen_ex: return "gen_ex";
    case BlockRule::factorial: return "factorial";
    case BlockRule::explicit_blocks: return "explicit";
  }
  return "?";
}

BlockRule block_rule_from(const std::string& s) {
  if (s == "karlin_ex1") return BlockRule::karlin_ex1;
  if (s == "bgy_ex2") return BlockRule::bgy_ex2;
  if (s == "gen_ex") return BlockRule::gen_ex;
  if (s == "factorial") return BlockRule::factorial;
  if (s == "explicit") return BlockRule::explicit_blocks;
  throw std::invalid_argument("unknown block rule: " + s);
}

}  // namespace

Json spec_to_json(const FrequencySpec& spec) {
  Json j;
  std::visit(
      [&j](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          j["family"] = "geometric";
          j["ratio"] = m.ratio;
        } else if constexpr (std::is_same_v<T, PowerLaw>) {
          j["family"] = "power_law";
          j["exponent"] = m.exponent;
          if (m.prefactor) j["prefactor"] = *m.prefactor;
        } else if constexpr (std::is_same_v<T, StretchedExp>) {
          j["family"] = "stretched_exp";
          j["beta"] = m.beta;
        } else if constexpr (std::is_same_v<T, PoissonWeights>) {
          j["family"] = "poisson_weights";
          j["lambda"] = m.lambda;
        } else if constexpr (std::is_same_v<T, Blocks>) {
          j["family"] = "blocks";
          j["rule"] = block_rule_name(m.rule);
          if (m.rule == BlockRule::gen_ex) {
            j["beta"] = m.beta;
            j["alpha"] = m.alpha;
          }
          if (m.rule == BlockRule::explicit_blocks) {
            Json arr = Json::array();
            for (auto [mm, qq] : m.blocks) arr.push_back(Json::array({mm, qq}));
            j["blocks"] = arr;
          }
        } else {
          j["family"] = "explicit";
          j["probs"] = m.probs;
        }
      },
      spec.model);
  if (spec.subprobability) j["subprobability"] = true;
  return j;
}

FrequencySpec spec_from_json(const Json& j) {
  FrequencySpec spec;
  std::string family = j.at("family").get<std::string>();
  if (family == "geometric") {
    spec.model = Geometric{j.at("ratio").get<double>()};
  } else if (family == "power_law") {
    PowerLaw p;
    p.exponent = j.at("exponent").get<double>();
    if (j.contains("prefactor")) p.prefactor = j.at("prefactor").get<double>();
    spec.model = p;
  } else if (family == "stretched_exp") {
    spec.model = StretchedExp{j.at("beta").get<double>()};
  } else if (family == "poisson_weights") {
    spec.model = PoissonWeights{j.at("lambda").get<double>()};
  } else if (family == "blocks") {
    Blocks b;
    b.rule = block_rule_from(j.at("rule").get<std::string>());
    if (b.rule == BlockRule::gen_ex) {
      b.beta = j.at("beta").get<double>();
      b.alpha = j.at("alpha").get<double>();
    }
    if (b.rule == BlockRule::explicit_blocks) {
      for (const auto& e : j.at("blocks"))
        b.blocks.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
    }
    spec.model = b;
  } else if (family == "explicit") {
    spec.model = ExplicitList{j.at("probs").get<std::vector<double>>()};
  } else {
    throw std::invalid_argument("unknown frequency family: " + family);
  }
  if (j.contains("subprobability")) spec.subprobability = j.at("subprobability").get<bool>();
  return spec;
}

Json to_json(const MomentValue& v) {
  return Json{{"value", v.value}, {"cert", v.cert}, {"capped", v.capped}, {"terms", v.terms}};
}

Json to_json(const MomentTable& table) {
  Json rows = Json::array();
  for (const auto& e : table.entries) {
    rows.push_back(Json{{"t", e.t},
                        {"r", e.r},
                        {"phi", e.phi},
                        {"phi_cert", e.phi_cert},
                        {"var", e.var},
                        {"var_cert", e.var_cert}});
  }
  Json pairs = Json::array();
  for (const auto& e : table.pairs) {
    pairs.push_back(Json{{"t", e.t},
                         {"r", e.r},
                         {"s", e.s},
                         {"cov", e.cov},
                         {"cov_cert", e.cov_cert},
                         {"corr", e.corr}});
  }
  Json j{{"r_set", table.r_set}, {"t_grid", table.t_grid}, {"entries", rows}};
  if (!table.pairs.empty()) j["pairs"] = pairs;
  return j;
}

Json to_json(const CovMatrix& m) {
  Json rows = Json::array();
  int n = int(m.r_set.size());
  for (int i = 0; i < n; ++i) {
    Json row = Json::array();
    for (int k = 0; k < n; ++k) row.push_back(m.sigma[std::size_t(i) * n + k]);
    rows.push_back(row);
  }
  return Json{{"r_set", m.r_set},          {"t", m.t},
              {"sigma", rows},             {"entry_cert", m.entry_cert},
              {"eigen_floor", m.eigen_floor}, {"min_eigenvalue", m.min_eigenvalue}};
}

Json to_json(const DepoissonBound& b) {
  return Json{{"n", b.n},
              {"m", b.m},
              {"k", b.k},
              {"p_k", b.p_k},
              {"pi_k", b.pi_k},
              {"pi_k_exact", b.pi_k_exact},
              {"bound", b.bound},
              {"applicable", b.applicable},
              {"support_capped", b.support_capped}};
}

const char* regime_name(RegimeVerdict v) {
  switch (v) {
    case RegimeVerdict::regime1: return "regime1";
    case RegimeVerdict::regime2: return "regime2";
    case RegimeVerdict::regime3: return "regime3";
    case RegimeVerdict::regime4: return "regime4";
    case RegimeVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

const char* scan_verdict_name(ScanVerdict v) {
  switch (v) {
    case ScanVerdict::converged: return "converged";
    case ScanVerdict::oscillating: return "oscillating";
    case ScanVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

const char* trend_name(RatioTrend t) {
  switch (t) {
    case RatioTrend::to_one: return "to_one";
    case RatioTrend::constant_below_one: return "constant_below_one";
    case RatioTrend::to_zero: return "to_zero";
    case RatioTrend::oscillating: return "oscillating";
  }
  return "?";
}

Json to_json(const RegimeReport& r) {
  Json evidence = Json::array();
  for (const auto& e : r.evidence) {
    evidence.push_back(Json{{"r", e.r},
                            {"window_inf", e.window_inf},
                            {"window_sup", e.window_sup},
                            {"growing", e.growing},
                            {"bounded", e.bounded},
                            {"oscillating", e.oscillating}});
  }
  Json ratios = Json::array();
  for (const auto& s : r.ratio_evidence) {
    ratios.push_back(Json{{"h", s.h},
                          {"j_lo", s.j_lo},
                          {"j_hi", s.j_hi},
                          {"min", s.min},
                          {"max", s.max},
                          {"trend", trend_name(s.trend)}});
  }
  Json rho = Json::array();
  for (std::size_t i = 0; i < r.rho_evidence.size(); ++i) {
    Json probes = Json::array();
    for (const auto& p : r.rho_evidence[i]) probes.push_back(Json{{"j", p.j}, {"rho", p.value}});
    rho.push_back(Json{{"r", int(i) + 1}, {"probes", probes}});
  }
  Json j{{"verdict", regime_name(r.verdict)}};
  if (r.verdict == RegimeVerdict::regime2) j["r0"] = r.r0;
  j["evidence"] = evidence;
  j["ratio_evidence"] = ratios;
  j["rho_evidence"] = rho;
  j["t_grid"] = r.t_grid;
  Json series = Json::array();
  for (const auto& s : r.phi_series) series.push_back(s);
  j["phi_series"] = series;
  j["thresholds"] = Json{{"high", r.thresholds.high},
                         {"low", r.thresholds.low},
                         {"osc_ratio", r.thresholds.osc_ratio},
                         {"osc_floor", r.thresholds.osc_floor},
                         {"window_frac", r.thresholds.window_frac}};
  return j;
}

Json to_json(const AlphaEstimate& a) {
  return Json{{"r", a.r},
              {"c_hat", a.c_hat},
              {"alpha_hat", a.alpha_hat},
              {"c_in_range", a.c_in_range},
              {"converged", a.converged},
              {"oscillation", a.oscillation},
              {"ratios", a.ratios}};
}

Json to_json(const LimitCovariance& s) {
  const int m = int(s.r_set.size());
  auto mat = [&](const std::vector<double>& v) {
    Json rows = Json::array();
    for (int i = 0; i < m; ++i) {
      Json row = Json::array();
      for (int k = 0; k < m; ++k) row.push_back(v[std::size_t(i) * m + k]);
      rows.push_back(row);
    }
    return rows;
  };
  const char* name = s.kase == LimitCase::proper ? "proper"
                     : s.kase == LimitCase::slow_variation ? "slow_variation"
                                                           : "index_one";
  return Json{{"case", name},
              {"alpha", s.alpha},
              {"r_set", s.r_set},
              {"S", mat(s.S)},
              {"corr", mat(s.corr)},
              {"y1_decoupled", s.y1_decoupled},
              {"min_eigenvalue", s.min_eigenvalue}};
}

Json to_json(const SigmaScan& s) {
  Json pairs = Json::array();
  for (const auto& p : s.pairs) {
    pairs.push_back(Json{{"r", p.r},
                         {"s", p.s},
                         {"verdict", scan_verdict_name(p.verdict)},
                         {"limit", p.limit},
                         {"amplitude", p.amplitude},
                         {"skipped", p.skipped},
                         {"sigma", p.sigma}});
  }
  return Json{{"t_grid", s.t_grid},
              {"conv_tol", s.options.conv_tol},
              {"osc_tol", s.options.osc_tol},
              {"pairs", pairs}};
}

Json to_json(const SimResult& s) {
  const int m = int(s.config.r_set.size());
  auto mat = [&](const std::vector<double>& v) {
    Json rows = Json::array();
    for (int i = 0; i < m; ++i) {
      Json row = Json::array();
      for (int k = 0; k < m; ++k) row.push_back(v[std::size_t(i) * m + k]);
      rows.push_back(row);
    }
    return rows;
  };
  return Json{{"scheme", s.config.scheme == Scheme::fixed_n ? "fixed_n" : "poissonized"},
              {"size", s.config.size},
              {"replicates", s.config.replicates},
              {"seed", s.config.seed},
              {"r_set", s.config.r_set},
              {"phi", s.phi},
              {"var", s.var},
              {"mean_std", s.mean_std},
              {"cov_std", mat(s.cov_std)},
              {"raw_mean", s.raw_mean},
              {"mean_total_balls", s.mean_total_balls},
              {"var_total_balls", s.var_total_balls},
              {"conservation_failures", s.conservation_failures}};
}

Json to_json(const BentkusBound& b) {
  return Json{{"r_set", b.r_set},   {"t", b.t},
              {"q_rm", b.q_rm},     {"c_R", b.c_R},
              {"min_variance", b.min_variance}, {"beta_bound", b.beta_bound}};
}

Json to_json(const NormalityReport& r) {
  return Json{{"ks_marginal", r.ks_marginal},
              {"max_cov_deviation", r.max_cov_deviation},
              {"replicates", r.replicates},
              {"ks_threshold", r.thresholds.ks},
              {"cov_threshold", r.thresholds.cov_dev},
              {"pass", r.pass}};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write_header(std::ostream& os, const Json& header) {
  os << "# occupancy-lab " << kVersion << "\n";
  if (!header.is_null()) os << "# config " << header.dump() << "\n";
}

}  // namespace

void write_moment_csv(std::ostream& os, const MomentTable& table, const Json& header) {
  write_header(os, header);
  os << "t,r,phi,var,cert\n";
  for (const auto& e : table.entries) {
    os << format_double(e.t) << ',' << e.r << ',' << format_double(e.phi) << ','
       << format_double(e.var) << ',' << format_double(std::max(e.phi_cert, e.var_cert)) << "\n";
  }
}

void write_sigma_csv(std::ostream& os, const SigmaScan& scan, const Json& header) {
  write_header(os, header);
  os << "t,r,s,sigma\n";
  for (const auto& p : scan.pairs) {
    for (std::size_t g = 0; g < scan.t_grid.size(); ++g) {
      os << format_double(scan.t_grid[g]) << ',' << p.r << ',' << p.s << ','
         << format_double(p.sigma[g]) << "\n";
    }
  }
}

void write_series_csv(std::ostream& os, const std::vector<double>& t,
                      const std::vector<std::pair<std::string, std::vector<double>>>& columns,
                      const Json& header) {
  write_header(os, header);
  os << "t";
  for (const auto& c : columns) os << ',' << c.first;
  os << "\n";
  for (std::size_t g = 0; g < t.size(); ++g) {
    os << format_double(t[g]);
    for (const auto& c : columns) os << ',' << format_double(c.second[g]);
    os << "\n";
  }
}

void write_replicates_csv(std::ostream& os, const std::vector<CountVector>& replicates,
                          const Json& header) {
  write_header(os, header);
  os << "replicate,r,count\n";
  for (std::size_t i = 0; i < replicates.size(); ++i) {
    for (int r = 1; r <= replicates[i].r_cap(); ++r) {
      if (replicates[i].counts[r] > 0)
        os << i << ',' << r << ',' << replicates[i].counts[r] << "\n";
    }
  }
}

}  // namespace occlab
