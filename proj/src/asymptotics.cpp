#include "occlab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "occlab/numerics.hpp"
#include "occlab/parallel.hpp"

namespace occlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

DyadicProfile dyadic_profile(const FrequencyView& view, int j_max) {
  if (j_max < 0) throw std::invalid_argument("dyadic_profile: j_max >= 0");
  DyadicProfile out;
  out.counts.resize(std::size_t(j_max) + 1, 0);
  // #{l : p_l > y} = first index with p < nextafter(y) minus one; exact,
  // since no double lies strictly between y and nextafter(y).
  auto count_above = [&](double y) -> std::uint64_t {
    std::uint64_t idx = view.first_index_below(std::nextafter(y, kInf));
    if (idx == std::uint64_t(-1)) {
      out.saturated = true;
      return 0;
    }
    return idx - 1;
  };
  for (int j = 0; j <= j_max; ++j) {
    std::uint64_t hi = count_above(std::ldexp(1.0, -(j + 1)));
    std::uint64_t lo = count_above(std::ldexp(1.0, -j));
    if (!out.saturated) out.counts[j] = hi - lo;
  }
  return out;
}

RatioScanResult ratio_scan(const FrequencyView& view, int h, std::uint64_t j_lo,
                           std::uint64_t j_hi) {
  if (h < 1) throw std::invalid_argument("ratio_scan: h >= 1");
  if (j_lo < 1 || j_hi < j_lo) throw std::invalid_argument("ratio_scan: bad window");
  if (view.finite_support() && j_hi + h > view.support_size())
    throw std::invalid_argument("ratio_scan: window exhausts the finite support");
  RatioScanResult out;
  out.h = h;
  out.j_lo = j_lo;
  out.j_hi = j_hi;
  out.min = kInf;
  out.max = -kInf;
  out.last_quarter_min = kInf;
  out.last_quarter_max = -kInf;
  std::uint64_t q_start = j_hi - (j_hi - j_lo) / 4;
  for (std::uint64_t j = j_lo; j <= j_hi; ++j) {
    double ratio = std::exp(view.log_prob(j + h) - view.log_prob(j));
    out.min = std::min(out.min, ratio);
    out.max = std::max(out.max, ratio);
    if (j >= q_start) {
      out.last_quarter_min = std::min(out.last_quarter_min, ratio);
      out.last_quarter_max = std::max(out.last_quarter_max, ratio);
    }
  }
  double spread = out.last_quarter_max - out.last_quarter_min;
  double mid = 0.5 * (out.last_quarter_max + out.last_quarter_min);
  if (spread <= 0.05 * std::max(1.0, out.last_quarter_max)) {
    if (std::abs(1.0 - mid) <= 0.05)
      out.trend = RatioTrend::to_one;
    else if (mid <= 0.05)
      out.trend = RatioTrend::to_zero;
    else
      out.trend = RatioTrend::constant_below_one;
  } else {
    out.trend = RatioTrend::oscillating;
  }
  return out;
}

RegimeReport classify_regime(const FrequencyView& view, int r_max,
                             const std::vector<double>& t_grid,
                             const RegimeThresholds& thresholds) {
  if (r_max < 1) throw std::invalid_argument("classify_regime: r_max >= 1");
  if (t_grid.size() < 16) throw std::invalid_argument("classify_regime: grid too short (< 16 points)");
  RegimeReport rep;
  rep.thresholds = thresholds;
  rep.t_grid = t_grid;
  rep.phi_series.assign(r_max, std::vector<double>(t_grid.size(), 0.0));

  EvalOptions opt;
  opt.tol = 1e-9;
  opt.rel_tol = thresholds.eval_rel_tol;
  parallel_for(t_grid.size(), 0, [&](std::uint64_t g) {
    for (int r = 1; r <= r_max; ++r)
      rep.phi_series[r - 1][g] = phi(view, r, t_grid[g], opt).value;
  });

  std::size_t window = std::max<std::size_t>(4, std::size_t(std::ceil(thresholds.window_frac * double(t_grid.size()))));
  window = std::min(window, t_grid.size());
  rep.evidence.resize(r_max);
  for (int r = 1; r <= r_max; ++r) {
    RegimeEvidence& e = rep.evidence[r - 1];
    e.r = r;
    e.window_inf = kInf;
    e.window_sup = -kInf;
    for (std::size_t g = t_grid.size() - window; g < t_grid.size(); ++g) {
      e.window_inf = std::min(e.window_inf, rep.phi_series[r - 1][g]);
      e.window_sup = std::max(e.window_sup, rep.phi_series[r - 1][g]);
    }
    e.growing = e.window_inf > thresholds.high;
    e.bounded = e.window_sup < thresholds.low;
    e.oscillating = e.window_sup > thresholds.osc_floor &&
                    e.window_sup / std::max(e.window_inf, 1e-300) > thresholds.osc_ratio;
  }

  bool all_growing = true, all_bounded = true;
  for (const auto& e : rep.evidence) {
    all_growing = all_growing && e.growing;
    all_bounded = all_bounded && e.bounded;
  }
  int r0 = 0;
  while (r0 < r_max && rep.evidence[r0].growing) ++r0;
  bool osc_above = r0 < r_max;
  for (int r = r0; r < r_max; ++r) osc_above = osc_above && rep.evidence[r].oscillating;

  if (all_growing)
    rep.verdict = RegimeVerdict::regime1;
  else if (all_bounded)
    rep.verdict = RegimeVerdict::regime4;
  else if (r0 >= 1 && osc_above) {
    rep.verdict = RegimeVerdict::regime2;
    rep.r0 = r0;
  } else if (rep.evidence[0].oscillating)
    rep.verdict = RegimeVerdict::regime3;
  else
    rep.verdict = RegimeVerdict::inconclusive;

  // frequency-ratio evidence
  std::uint64_t j_hi = 10000;
  if (view.is_blocks()) {
    std::uint64_t addressable = 0;
    for (const auto& b : view.blocks())
      if (b.cum_exact) addressable = b.cum_boxes;
    j_hi = std::min<std::uint64_t>(100000, addressable > 8 ? addressable - 4 : 8);
  }
  if (view.finite_support() && view.support_size() > 8)
    j_hi = std::min(j_hi, view.support_size() - 4);
  if (!view.finite_support() || view.support_size() > 8) {
    for (int h = 1; h <= 3; ++h) rep.ratio_evidence.push_back(ratio_scan(view, h, 1, j_hi - h));
  }

  // power-tail evidence: rho along block boundaries or dyadic indices
  rep.rho_evidence.assign(r_max, {});
  std::vector<std::uint64_t> probes;
  if (view.is_blocks()) {
    for (const auto& b : view.blocks()) {
      if (b.cum_exact) probes.push_back(b.cum_boxes);
      if (probes.size() >= 24) break;
    }
  } else {
    for (std::uint64_t j = 1; j <= (std::uint64_t(1) << 20); j *= 4) {
      if (view.finite_support() && j > view.support_size()) break;
      probes.push_back(j);
    }
  }
  for (int r = 1; r <= r_max; ++r) {
    for (std::uint64_t j : probes) rep.rho_evidence[r - 1].push_back({j, view.rho(j, r)});
  }
  return rep;
}

AlphaEstimate estimate_alpha(const FrequencyView& view, int r, const std::vector<double>& t_grid,
                             double converge_tol) {
  if (r < 1) throw std::invalid_argument("estimate_alpha: r >= 1");
  if (t_grid.size() < 8) throw std::invalid_argument("estimate_alpha: grid too short");
  AlphaEstimate out;
  out.r = r;
  out.ratios.resize(t_grid.size());
  EvalOptions opt;
  opt.tol = 1e-12;
  opt.rel_tol = 1e-5;
  parallel_for(t_grid.size(), 0, [&](std::uint64_t g) {
    double num = phi(view, r + 1, t_grid[g], opt).value;
    double den = phi(view, r, t_grid[g], opt).value;
    out.ratios[g] = den > 0 ? num / den : kNaN;
  });
  std::size_t n = t_grid.size();
  std::vector<double> last_quarter(out.ratios.begin() + 3 * n / 4, out.ratios.end());
  out.c_hat = median_of(last_quarter);
  out.alpha_hat = r - out.c_hat * (r + 1);
  out.c_in_range = out.c_hat >= double(r - 1) / double(r + 1) - 1e-9 &&
                   out.c_hat <= double(r) / double(r + 1) + 1e-9;
  double lo = kInf, hi = -kInf;
  for (std::size_t g = n / 2; g < n; ++g) {
    lo = std::min(lo, out.ratios[g]);
    hi = std::max(hi, out.ratios[g]);
  }
  out.oscillation = (hi - lo) / std::max(std::abs(out.c_hat), 1e-12);
  out.converged = out.oscillation < converge_tol;
  return out;
}

LimitCovariance limit_covariance(LimitCase kase, double alpha, const std::vector<int>& r_set) {
  if (r_set.empty()) throw std::invalid_argument("limit_covariance: empty index set");
  for (std::size_t i = 0; i < r_set.size(); ++i)
    if (r_set[i] < 1 || (i > 0 && r_set[i] <= r_set[i - 1]))
      throw std::invalid_argument("limit_covariance: r_set must be strictly increasing, >= 1");
  if (kase == LimitCase::proper && !(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("limit_covariance: proper case needs alpha in (0,1)");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("limit_covariance: alpha outside [0,1]");
  if (kase == LimitCase::slow_variation) alpha = 0.0;
  if (kase == LimitCase::index_one) alpha = 1.0;

  const int m = int(r_set.size());
  LimitCovariance out;
  out.kase = kase;
  out.alpha = alpha;
  out.r_set = r_set;
  out.S.assign(std::size_t(m) * m, 0.0);
  out.y1_decoupled = kase == LimitCase::index_one;

  auto diag = [&](int r) -> double {
    if (kase == LimitCase::slow_variation)
      return 1.0 / r - binomial_coeff(2 * r, r) / (double(r) * std::ldexp(1.0, 2 * r + 1));
    // alpha/r! (Gamma(r - alpha) - Gamma(2r - alpha) / (r! 2^{2r - alpha}))
    double g1 = std::tgamma(double(r) - alpha);
    double g2 = std::exp(std::lgamma(2.0 * r - alpha) - log_factorial(r) -
                         (2.0 * r - alpha) * kLn2);
    return alpha / factorial(r) * (g1 - g2);
  };
  auto off = [&](int r, int s) -> double {
    if (kase == LimitCase::slow_variation)
      return -binomial_coeff(r + s, r) / (double(r + s) * std::ldexp(1.0, r + s));
    return -alpha * std::exp(std::lgamma(double(r + s) - alpha) - log_factorial(r) -
                             log_factorial(s) - (double(r + s) - alpha) * kLn2);
  };

  for (int i = 0; i < m; ++i) {
    int r = r_set[i];
    if (out.y1_decoupled && r == 1) continue;  // zero row and column
    out.S[std::size_t(i) * m + i] = diag(r);
    for (int k = i + 1; k < m; ++k) {
      int s = r_set[k];
      if (out.y1_decoupled && s == 1) continue;
      double v = off(r, s);
      out.S[std::size_t(i) * m + k] = v;
      out.S[std::size_t(k) * m + i] = v;
    }
  }

  out.corr.assign(std::size_t(m) * m, 0.0);
  for (int i = 0; i < m; ++i) {
    double di = out.S[std::size_t(i) * m + i];
    out.corr[std::size_t(i) * m + i] = di > 0 ? 1.0 : 0.0;
    for (int k = i + 1; k < m; ++k) {
      double dk = out.S[std::size_t(k) * m + k];
      if (di > 0 && dk > 0) {
        double v = out.S[std::size_t(i) * m + k] / std::sqrt(di * dk);
        out.corr[std::size_t(i) * m + k] = v;
        out.corr[std::size_t(k) * m + i] = v;
      }
    }
  }

  // PSD check over the non-degenerate block
  std::vector<int> live;
  for (int i = 0; i < m; ++i)
    if (!(out.y1_decoupled && r_set[i] == 1)) live.push_back(i);
  if (!live.empty()) {
    std::vector<double> sub(live.size() * live.size());
    for (std::size_t a = 0; a < live.size(); ++a)
      for (std::size_t b = 0; b < live.size(); ++b)
        sub[a * live.size() + b] = out.S[std::size_t(live[a]) * m + live[b]];
    out.min_eigenvalue = sym_min_eigenvalue(sub, int(live.size()));
  }
  return out;
}

SigmaScan sigma_convergence_scan(const FrequencyView& view, const std::vector<double>& t_grid,
                                 const ScanOptions& options) {
  if (t_grid.size() < 32) throw std::invalid_argument("sigma_convergence_scan: need >= 32 grid points");
  SigmaScan scan;
  scan.t_grid = t_grid;
  scan.options = options;
  for (int r = 2; r < 12; ++r)
    for (int s = r + 1; r + s <= 12; ++s) scan.pairs.push_back({r, s, {}, ScanVerdict::inconclusive, 0, 0, 0});
  if (options.include_one_pairs)
    for (int s = 2; s <= 5; ++s) scan.pairs.push_back({1, s, {}, ScanVerdict::inconclusive, 0, 0, 0});

  std::vector<int> orders;
  for (auto& p : scan.pairs) {
    orders.push_back(p.r);
    orders.push_back(p.s);
  }
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());

  for (auto& p : scan.pairs) p.sigma.assign(t_grid.size(), kNaN);

  EvalOptions opt;
  opt.tol = 1e-12;
  opt.rel_tol = options.eval_rel_tol;

  parallel_for(t_grid.size(), options.threads, [&](std::uint64_t g) {
    double t = t_grid[g];
    std::map<int, double> var_at;  // degenerate entries marked NaN
    for (int r : orders) {
      MomentValue v = variance(view, r, t, opt);
      var_at[r] = v.value > 1e-12 && std::isfinite(v.value) ? v.value : kNaN;
    }
    std::map<int, double> phi_2t;
    for (auto& p : scan.pairs) {
      if (!phi_2t.count(p.r + p.s)) phi_2t[p.r + p.s] = phi(view, p.r + p.s, 2.0 * t, opt).value;
      double vr = var_at[p.r], vs = var_at[p.s];
      if (std::isnan(vr) || std::isnan(vs)) continue;
      double pref = std::exp(std::log(binomial_coeff(p.r + p.s, p.r)) - (p.r + p.s) * kLn2);
      p.sigma[g] = -pref * phi_2t[p.r + p.s] / std::sqrt(vr * vs);
    }
  });

  for (auto& p : scan.pairs) {
    std::vector<double> tail_vals;
    for (std::size_t g = t_grid.size() / 2; g < t_grid.size(); ++g) {
      if (std::isnan(p.sigma[g]))
        ++p.skipped;
      else
        tail_vals.push_back(p.sigma[g]);
    }
    if (tail_vals.size() < 4) {
      p.verdict = ScanVerdict::inconclusive;
      continue;
    }
    auto [mn, mx] = std::minmax_element(tail_vals.begin(), tail_vals.end());
    p.amplitude = *mx - *mn;
    p.limit = median_of(tail_vals);
    if (p.amplitude < options.conv_tol && p.skipped == 0)
      p.verdict = ScanVerdict::converged;
    else if (p.amplitude > options.osc_tol || p.skipped > 0)
      p.verdict = ScanVerdict::oscillating;
    else
      p.verdict = ScanVerdict::inconclusive;
  }
  return scan;
}

}  // namespace occlab
