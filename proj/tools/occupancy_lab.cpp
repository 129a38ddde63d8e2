// occupancy-lab: batch front end for the infinite occupancy scheme toolkit.
// Evaluates certified moments, classifies variance regimes, estimates the
// regular-variation index, scans correlation convergence, runs exact
// simulations, computes de-Poissonization bounds, and reproduces the named
// block-construction phenomena as CSV/JSON artifacts.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "occlab/asymptotics.hpp"
#include "occlab/depoisson.hpp"
#include "occlab/gaussian.hpp"
#include "occlab/kernels.hpp"
#include "occlab/moments.hpp"
#include "occlab/numerics.hpp"
#include "occlab/sampling.hpp"
#include "occlab/serialize.hpp"
#include "occlab/version.hpp"

namespace {

using occlab::Json;

struct TGrid {
  double start = 1.0;
  double factor = 2.0;
  int points = 32;

  std::vector<double> values() const {
    std::vector<double> g(points);
    double t = start;
    for (int i = 0; i < points; ++i) {
      g[i] = t;
      t *= factor;
    }
    return g;
  }
};

TGrid parse_tgrid(const std::string& text) {
  TGrid g;
  char colon1 = 0, colon2 = 0;
  std::istringstream is(text);
  if (!(is >> g.start >> colon1 >> g.factor >> colon2 >> g.points) || colon1 != ':' ||
      colon2 != ':' || !(g.start > 0) || !(g.factor > 1.0) || g.points < 1) {
    throw CLI::ValidationError("--t-grid", "expected start:factor:points with start>0, factor>1");
  }
  return g;
}

occlab::FrequencySpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open spec file: " + path);
  Json j = Json::parse(in);
  return occlab::spec_from_json(j);
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file: " + out_path);
  os << text;
}

Json envelope(const std::string& command, Json config, Json result) {
  Json j;
  j["version"] = occlab::kVersion;
  j["command"] = command;
  j["simd"] = occlab::kernels::isa_name(occlab::kernels::active_isa());
  j["config"] = std::move(config);
  j["result"] = std::move(result);
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// shared flags
struct Common {
  std::string spec_path;
  std::string out = "-";
  std::string format = "json";
  double tol = 1e-9;
};

void add_common(CLI::App* cmd, Common& c, bool needs_spec = true) {
  if (needs_spec)
    cmd->add_option("--spec", c.spec_path, "frequency model JSON file")->required();
  cmd->add_option("--out", c.out, "output path ('-' for stdout)");
  cmd->add_option("--format", c.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--tol", c.tol, "absolute tolerance for series evaluation");
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  if (out.empty()) throw CLI::ValidationError(what, "expected a comma-separated integer list");
  return out;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"occupancy-lab: moments, regimes, and simulation for the infinite occupancy scheme"};
  app.require_subcommand(1);

  // ---- moments ----
  auto* cmd_moments = app.add_subcommand("moments", "tabulate Phi_r, V_r (and pairs) on a t-grid");
  Common c_m;
  std::string m_r = "1,2";
  std::string m_grid = "1:2:32";
  bool m_pairs = false;
  add_common(cmd_moments, c_m);
  cmd_moments->add_option("--r", m_r, "orders, e.g. 1,2,3");
  cmd_moments->add_option("--t-grid", m_grid, "geometric grid start:factor:points");
  cmd_moments->add_flag("--pairs", m_pairs, "include covariance/correlation pairs");

  // ---- classify ----
  auto* cmd_classify = app.add_subcommand("classify", "variance-growth regime verdict");
  Common c_c;
  int c_rmax = 4;
  std::string c_grid = "1:2:41";
  occlab::RegimeThresholds c_th;
  add_common(cmd_classify, c_c);
  cmd_classify->add_option("--r-max", c_rmax, "largest order to classify");
  cmd_classify->add_option("--t-grid", c_grid, "geometric grid start:factor:points");
  cmd_classify->add_option("--threshold-high", c_th.high, "window infimum for divergence");
  cmd_classify->add_option("--threshold-low", c_th.low, "window supremum for boundedness");
  cmd_classify->add_option("--osc-ratio", c_th.osc_ratio, "sup/inf ratio flagging oscillation");
  cmd_classify->add_option("--osc-floor", c_th.osc_floor, "minimum sup for oscillation");
  cmd_classify->add_option("--window-frac", c_th.window_frac, "late-window fraction of the grid");

  // ---- alpha ----
  auto* cmd_alpha = app.add_subcommand("alpha", "regular-variation index from moment ratios");
  Common c_a;
  int a_r = 1;
  std::string a_grid = "1:2:33";
  add_common(cmd_alpha, c_a);
  cmd_alpha->add_option("--r", a_r, "ratio order (uses Phi_{r+1}/Phi_r)");
  cmd_alpha->add_option("--t-grid", a_grid, "geometric grid start:factor:points");

  // ---- limit-cov ----
  auto* cmd_limit = app.add_subcommand("limit-cov", "closed-form limiting covariance matrix");
  Common c_l;
  std::string l_case = "proper";
  double l_alpha = 0.5;
  std::string l_R = "1,2,3";
  add_common(cmd_limit, c_l, /*needs_spec=*/false);
  cmd_limit->add_option("--case", l_case, "proper | slow | index1")
      ->check(CLI::IsMember({"proper", "slow", "index1"}));
  cmd_limit->add_option("--alpha", l_alpha, "index for the proper case (0,1)");
  cmd_limit->add_option("--R", l_R, "index set, e.g. 1,2,3");

  // ---- scan-sigma ----
  auto* cmd_scan = app.add_subcommand("scan-sigma", "correlation convergence scan");
  Common c_s;
  std::string s_grid = "1:2:32";
  occlab::ScanOptions s_opt;
  bool s_no_one = false;
  add_common(cmd_scan, c_s);
  cmd_scan->add_option("--t-grid", s_grid, "geometric grid start:factor:points (>= 32 points)");
  cmd_scan->add_option("--conv-tol", s_opt.conv_tol, "late-half amplitude for convergence");
  cmd_scan->add_option("--osc-tol", s_opt.osc_tol, "late-half amplitude for oscillation");
  cmd_scan->add_flag("--no-one-pairs", s_no_one, "skip the (1,s) pairs");

  // ---- simulate ----
  auto* cmd_sim = app.add_subcommand("simulate", "replicated exact sampling with diagnostics");
  Common c_x;
  std::string x_scheme = "poissonized";
  double x_size = 1000;
  std::uint64_t x_reps = 1000;
  std::string x_R = "1,2";
  int x_rcap = 32;
  std::uint64_t x_seed = 0;
  std::string x_dump;
  double x_ks = 0.02, x_cov = 0.03;
  add_common(cmd_sim, c_x);
  cmd_sim->add_option("--scheme", x_scheme, "poissonized | fixed")
      ->check(CLI::IsMember({"poissonized", "fixed"}));
  cmd_sim->add_option("--size", x_size, "t (poissonized) or n (fixed)")->required();
  cmd_sim->add_option("--reps", x_reps, "replicate count");
  cmd_sim->add_option("--R", x_R, "standardized components, e.g. 1,2,3");
  cmd_sim->add_option("--r-cap", x_rcap, "largest tallied count");
  cmd_sim->add_option("--seed", x_seed, "stream seed");
  cmd_sim->add_option("--dump-replicates", x_dump, "per-replicate CSV path");
  cmd_sim->add_option("--ks-threshold", x_ks, "marginal KS pass threshold");
  cmd_sim->add_option("--cov-threshold", x_cov, "covariance deviation pass threshold");

  // ---- depoisson ----
  auto* cmd_dp = app.add_subcommand("depoisson", "total-variation transfer bound");
  Common c_d;
  std::string d_n = "10000";
  int d_m = 3;
  add_common(cmd_dp, c_d);
  cmd_dp->add_option("--n", d_n, "ball counts, e.g. 10000,100000");
  cmd_dp->add_option("--m", d_m, "largest count index compared");

  // ---- reproduce ----
  auto* cmd_rep = app.add_subcommand("reproduce", "rebuild a named example's phenomenon");
  Common c_r;
  std::string r_example;
  double r_beta = 0.5, r_alpha = 1.0;
  int r_order = 2;
  add_common(cmd_rep, c_r, /*needs_spec=*/false);
  cmd_rep->add_option("example", r_example, "karlin-ex1 | bgy-ex2 | factorial-ex3 | genex")
      ->required()
      ->check(CLI::IsMember({"karlin-ex1", "bgy-ex2", "factorial-ex3", "genex"}));
  cmd_rep->add_option("--beta", r_beta, "genex block exponent");
  cmd_rep->add_option("--alpha", r_alpha, "genex level exponent");
  cmd_rep->add_option("--r", r_order, "genex moment order");

  CLI11_PARSE(app, argc, argv);

  occlab::EvalOptions opt;

  if (cmd_moments->parsed()) {
    opt.tol = c_m.tol;
    opt.rel_tol = 1e-9;
    occlab::FrequencyView view(load_spec(c_m.spec_path));
    TGrid grid = parse_tgrid(m_grid);
    std::vector<int> r_set = parse_int_list(m_r, "--r");
    occlab::MomentTable table =
        occlab::tabulate_moments(view, r_set, grid.values(), opt, m_pairs, 0);
    Json config{{"spec", occlab::spec_to_json(view.spec())},
                {"r", r_set},
                {"t_grid", m_grid},
                {"tol", c_m.tol},
                {"pairs", m_pairs}};
    if (c_m.format == "csv") {
      std::ostringstream os;
      occlab::write_moment_csv(os, table, config);
      emit(c_m.out, os.str());
    } else {
      emit(c_m.out, dump(envelope("moments", config, occlab::to_json(table))));
    }
    return 0;
  }

  if (cmd_classify->parsed()) {
    occlab::FrequencyView view(load_spec(c_c.spec_path));
    TGrid grid = parse_tgrid(c_grid);
    occlab::RegimeReport rep = occlab::classify_regime(view, c_rmax, grid.values(), c_th);
    Json config{{"spec", occlab::spec_to_json(view.spec())},
                {"r_max", c_rmax},
                {"t_grid", c_grid}};
    if (c_c.format == "csv") {
      std::vector<std::pair<std::string, std::vector<double>>> cols;
      for (int r = 1; r <= c_rmax; ++r)
        cols.emplace_back("phi_r" + std::to_string(r), rep.phi_series[r - 1]);
      std::ostringstream os;
      occlab::write_series_csv(os, rep.t_grid, cols, config);
      emit(c_c.out, os.str());
    } else {
      emit(c_c.out, dump(envelope("classify", config, occlab::to_json(rep))));
    }
    return 0;
  }

  if (cmd_alpha->parsed()) {
    occlab::FrequencyView view(load_spec(c_a.spec_path));
    TGrid grid = parse_tgrid(a_grid);
    occlab::AlphaEstimate est = occlab::estimate_alpha(view, a_r, grid.values());
    Json config{{"spec", occlab::spec_to_json(view.spec())}, {"r", a_r}, {"t_grid", a_grid}};
    if (c_a.format == "csv") {
      std::ostringstream os;
      occlab::write_series_csv(os, grid.values(), {{"ratio", est.ratios}}, config);
      emit(c_a.out, os.str());
    } else {
      emit(c_a.out, dump(envelope("alpha", config, occlab::to_json(est))));
    }
    return 0;
  }

  if (cmd_limit->parsed()) {
    occlab::LimitCase kase = l_case == "proper" ? occlab::LimitCase::proper
                             : l_case == "slow" ? occlab::LimitCase::slow_variation
                                                : occlab::LimitCase::index_one;
    occlab::LimitCovariance lim =
        occlab::limit_covariance(kase, kase == occlab::LimitCase::index_one ? 1.0
                                       : kase == occlab::LimitCase::slow_variation ? 0.0
                                                                                   : l_alpha,
                                 parse_int_list(l_R, "--R"));
    Json config{{"case", l_case}, {"alpha", l_alpha}, {"R", l_R}};
    emit(c_l.out, dump(envelope("limit-cov", config, occlab::to_json(lim))));
    return 0;
  }

  if (cmd_scan->parsed()) {
    occlab::FrequencyView view(load_spec(c_s.spec_path));
    TGrid grid = parse_tgrid(s_grid);
    s_opt.include_one_pairs = !s_no_one;
    occlab::SigmaScan scan = occlab::sigma_convergence_scan(view, grid.values(), s_opt);
    Json config{{"spec", occlab::spec_to_json(view.spec())},
                {"t_grid", s_grid},
                {"conv_tol", s_opt.conv_tol},
                {"osc_tol", s_opt.osc_tol}};
    if (c_s.format == "csv") {
      std::ostringstream os;
      occlab::write_sigma_csv(os, scan, config);
      emit(c_s.out, os.str());
    } else {
      emit(c_s.out, dump(envelope("scan-sigma", config, occlab::to_json(scan))));
    }
    return 0;
  }

  if (cmd_sim->parsed()) {
    occlab::FrequencyView view(load_spec(c_x.spec_path));
    occlab::SimConfig cfg;
    cfg.scheme = x_scheme == "fixed" ? occlab::Scheme::fixed_n : occlab::Scheme::poissonized;
    cfg.size = x_size;
    cfg.replicates = x_reps;
    cfg.r_set = parse_int_list(x_R, "--R");
    cfg.r_cap = x_rcap;
    cfg.seed = x_seed;
    occlab::SimResult res = occlab::monte_carlo(view, cfg);
    occlab::EvalOptions mopt{1e-9, 1e-10, 100'000'000};
    occlab::CovMatrix target = occlab::corr_matrix(view, cfg.r_set, cfg.size, mopt);
    occlab::NormalityReport normality =
        occlab::normality_diagnostics(res, target, {x_ks, x_cov});
    Json config{{"spec", occlab::spec_to_json(view.spec())},
                {"scheme", x_scheme},
                {"size", x_size},
                {"reps", x_reps},
                {"R", x_R},
                {"r_cap", x_rcap},
                {"seed", x_seed}};
    Json result{{"sim", occlab::to_json(res)},
                {"target", occlab::to_json(target)},
                {"normality", occlab::to_json(normality)}};
    if (!x_dump.empty()) {
      occlab::Sampler sampler(view, cfg.scheme, cfg.size, cfg.r_cap);
      std::vector<occlab::CountVector> reps;
      reps.reserve(cfg.replicates);
      for (std::uint64_t rep = 0; rep < cfg.replicates; ++rep)
        reps.push_back(sampler.sample(cfg.seed, rep));
      std::ofstream os(x_dump, std::ios::binary);
      if (!os) throw std::runtime_error("cannot open output file: " + x_dump);
      occlab::write_replicates_csv(os, reps, config);
    }
    emit(c_x.out, dump(envelope("simulate", config, result)));
    return 0;
  }

  if (cmd_dp->parsed()) {
    occlab::FrequencyView view(load_spec(c_d.spec_path));
    Json rows = Json::array();
    std::stringstream ss(d_n);
    std::string item;
    std::ostringstream csv;
    csv << "n,m,k,pi_k,bound,applicable\n";
    while (std::getline(ss, item, ',')) {
      std::uint64_t n = std::stoull(item);
      occlab::DepoissonBound b = occlab::tv_bound(view, n, d_m);
      rows.push_back(occlab::to_json(b));
      csv << n << ',' << d_m << ',' << b.k << ',' << occlab::format_double(b.pi_k) << ','
          << occlab::format_double(b.bound) << ',' << (b.applicable ? 1 : 0) << "\n";
    }
    Json config{{"spec", occlab::spec_to_json(view.spec())}, {"n", d_n}, {"m", d_m}};
    if (c_d.format == "csv") {
      std::ostringstream os;
      os << "# occupancy-lab " << occlab::kVersion << "\n# config " << config.dump() << "\n"
         << csv.str();
      emit(c_d.out, os.str());
    } else {
      emit(c_d.out, dump(envelope("depoisson", config, rows)));
    }
    return 0;
  }

  if (cmd_rep->parsed()) {
    Json config{{"example", r_example}};
    Json result;

    if (r_example == "karlin-ex1") {
      occlab::FrequencyView view(
          occlab::FrequencySpec::blocks(occlab::BlockRule::karlin_ex1));
      occlab::RegimeThresholds th;
      th.low = 1.0;
      TGrid grid{1.0, 2.0, 65};
      occlab::RegimeReport rep = occlab::classify_regime(view, 2, grid.values(), th);
      const auto& e = rep.evidence[0];
      result = Json{{"verdict", occlab::regime_name(rep.verdict)},
                    {"phi1_window_inf", e.window_inf},
                    {"phi1_window_sup", e.window_sup},
                    {"phi1_sup_inf_ratio", e.window_sup / std::max(e.window_inf, 1e-300)},
                    {"t_grid", rep.t_grid},
                    {"phi1_series", rep.phi_series[0]}};
    } else if (r_example == "bgy-ex2") {
      occlab::FrequencyView view(occlab::FrequencySpec::blocks(occlab::BlockRule::bgy_ex2));
      occlab::RegimeThresholds th;
      th.window_frac = 0.4;
      TGrid grid{1.0, 2.0, 65};
      occlab::RegimeReport rep = occlab::classify_regime(view, 3, grid.values(), th);
      result = occlab::to_json(rep);
    } else if (r_example == "factorial-ex3") {
      occlab::FrequencyView view(occlab::FrequencySpec::blocks(occlab::BlockRule::factorial));
      occlab::ScanOptions sopt;
      sopt.conv_tol = 0.03;
      TGrid grid{1.0, std::ldexp(1.0, 25), 41};
      occlab::SigmaScan scan = occlab::sigma_convergence_scan(view, grid.values(), sopt);
      Json pairs = Json::array();
      for (const auto& p : scan.pairs) {
        if (p.r != 1) continue;
        pairs.push_back(Json{{"r", p.r},
                             {"s", p.s},
                             {"verdict", occlab::scan_verdict_name(p.verdict)},
                             {"limit", p.limit},
                             {"sigma", p.sigma}});
      }
      result = Json{{"t_grid", scan.t_grid}, {"one_pairs", pairs}};
    } else {  // genex
      config["beta"] = r_beta;
      config["alpha"] = r_alpha;
      config["r"] = r_order;
      occlab::FrequencyView view(
          occlab::FrequencySpec::blocks(occlab::BlockRule::gen_ex, r_beta, r_alpha));
      const auto& blocks = view.blocks();
      Json series = Json::array();
      // peaks at t_l = 1/q_l, dips at t'_l = 2 log(m_{l+1}) / q_l
      for (std::size_t l = 0; l + 1 < blocks.size(); ++l) {
        double log2_t = -blocks[l].log2_q;
        double log2_tp = 1.0 - blocks[l].log2_q +
                         std::log2(blocks[l + 1].log2_m * occlab::kLn2);
        occlab::BlockPhi peak_r = occlab::phi_blocks_log2t(view, r_order, log2_t);
        occlab::BlockPhi dip_r = occlab::phi_blocks_log2t(view, r_order, log2_tp);
        occlab::BlockPhi peak_1 = occlab::phi_blocks_log2t(view, 1, log2_t);
        occlab::BlockPhi dip_1 = occlab::phi_blocks_log2t(view, 1, log2_tp);
        series.push_back(Json{{"l", l + 1},
                              {"log2_t_peak", log2_t},
                              {"log2_t_dip", log2_tp},
                              {"log2_phi_r_peak", peak_r.log2_value},
                              {"log2_phi_r_dip", dip_r.log2_value},
                              {"log2_phi_1_peak", peak_1.log2_value},
                              {"log2_phi_1_dip", dip_1.log2_value}});
      }
      // flags over the deepest three levels and everything past block 2
      const double lg10 = std::log2(10.0);
      const double lg_half = std::log2(0.5);
      bool deep_ok = true, phi1_ok = true;
      std::size_t nl = series.size();
      for (std::size_t i = 0; i < nl; ++i) {
        const Json& row = series[i];
        if (i + 3 >= nl) {
          deep_ok = deep_ok && row["log2_phi_r_peak"].get<double>() > lg10 &&
                    row["log2_phi_r_dip"].get<double>() < lg_half;
        }
        if (i >= 2) {
          phi1_ok = phi1_ok && row["log2_phi_1_peak"].get<double>() > lg10 &&
                    row["log2_phi_1_dip"].get<double>() > lg10;
        }
      }
      result = Json{{"series", series},
                    {"deepest_three_peak_above_10_dip_below_half", deep_ok},
                    {"phi1_above_10_beyond_block_2", phi1_ok}};
    }
    emit(c_r.out, dump(envelope("reproduce", config, result)));
    return 0;
  }

  return 2;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::Error&) {
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
