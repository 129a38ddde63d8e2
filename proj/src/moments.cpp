#include "occlab/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "occlab/kernels.hpp"
#include "occlab/numerics.hpp"
#include "occlab/parallel.hpp"

namespace occlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kChunk = 4096;

using kernels::TermKind;

struct Pass {
  double sum_w = 0;
  double sum_w2 = 0;
  double cert = 0;     // truncation bound for sum_w
  double cert_sq = 0;  // truncation bound for sum_w2
  bool capped = false;
  std::uint64_t terms = 0;
};

double tail_target(const EvalOptions& opt, double current) {
  return std::max({opt.tol, opt.rel_tol * current, 1e-300});
}

// ln of the certified bound on the summands beyond box k:
//   pmf terms:        e^{-x} x^r / r! <= x^r / r!  =>  (t^r/r!) sum_{i>k} p_i^r
//   occupancy terms:  1 - e^{-x} <= x              =>  t sum_{i>k} p_i
double ln_remainder(const FrequencyView& view, TermKind kind, int r, double ln_t,
                    std::uint64_t k) {
  TailBound tb = view.tail_bound(k, kind == TermKind::pmf ? r : 1);
  if (tb.value <= 0.0) return -kInf;
  if (kind == TermKind::pmf) return r * ln_t - log_factorial(r) + std::log(tb.value);
  return ln_t + std::log(tb.value);
}

double scalar_term(double ln_x, TermKind kind, int r) {
  if (kind == TermKind::occupancy) {
    if (ln_x > 40.0) return 1.0;
    double x = std::exp(ln_x);
    return -std::expm1(-x);
  }
  double lw = log_poisson_pmf_from_log(ln_x, r);
  return lw < -745.0 ? 0.0 : std::exp(lw);
}

Pass eval_explicit(const FrequencyView& view, TermKind kind, int r, double t) {
  kernels::TermSums ts = kernels::accumulate_array(view.explicit_probs(), t, kind, r);
  Pass out;
  out.sum_w = ts.sum;
  out.sum_w2 = ts.sum_sq;
  out.terms = view.explicit_probs().size();
  return out;
}

Pass eval_infinite(const FrequencyView& view, TermKind kind, int r, double t,
                   const EvalOptions& opt) {
  const double ln_t = std::log(t);
  const double base = ln_t + view.log_normalization();
  const FamilyTag fam = view.family();
  Pass out;
  KahanSum sw, sw2;

  // Head: boxes with t p_j > 709, where the kernels' exp would overflow.
  // Scalar log-space terms; for the occupancy kind they are 1 to within
  // e^{-709}.
  std::uint64_t head_end = view.first_index_below(709.0 / t);
  for (std::uint64_t j = 1; j < head_end; ++j) {
    ++out.terms;
    if (kind == TermKind::occupancy) {
      sw.add(1.0);
      sw2.add(1.0);
    } else {
      double lw = log_poisson_pmf_from_log(ln_t + view.log_prob(j), r);
      if (lw > -745.0) {
        double w = std::exp(lw);
        sw.add(w);
        sw2.add(w * w);
      }
    }
  }

  // Kernel-eligible guard: pmf powering needs r <= 100; beyond that every
  // chunk goes through the scalar log path.
  const bool generic = fam == FamilyTag::poisson_weights || (kind == TermKind::pmf && r > 100);

  std::uint64_t j = head_end;
  for (;;) {
    double target = tail_target(opt, sw.value());
    double lb = ln_remainder(view, kind, r, ln_t, j - 1);
    if (lb <= std::log(target)) {
      out.cert = lb == -kInf ? 0.0 : std::exp(lb);
      out.cert_sq = out.cert;  // w <= 1, so the squared tail is dominated
      break;
    }
    if (out.terms >= opt.max_terms) {
      out.capped = true;
      out.cert = std::exp(std::min(lb, 700.0));
      out.cert_sq = out.cert;
      break;
    }
    std::uint64_t j_end = j + kChunk;
    kernels::TermSums ts;
    if (generic) {
      KahanSum cs, cs2;
      for (std::uint64_t i = j; i < j_end; ++i) {
        double w = scalar_term(ln_t + view.log_prob(i), kind, r);
        cs.add(w);
        cs2.add(w * w);
      }
      ts = {cs.value(), cs2.value()};
    } else if (fam == FamilyTag::geometric) {
      ts = kernels::accumulate(kernels::LogArgGeometric{base, view.geo_log_ratio()}, kind, r, j,
                               j_end);
    } else if (fam == FamilyTag::power_law) {
      ts = kernels::accumulate(kernels::LogArgPowerLaw{base, view.powerlaw_exponent()}, kind, r, j,
                               j_end);
    } else {
      ts = kernels::accumulate(kernels::LogArgStretched{base, view.stretched_beta()}, kind, r, j,
                               j_end);
    }
    sw.add(ts.sum);
    sw2.add(ts.sum_sq);
    out.terms += j_end - j;
    j = j_end;
  }
  out.sum_w = sw.value();
  out.sum_w2 = sw2.value();
  return out;
}

// Online log-sum-exp accumulator.
struct LogSum {
  double max_l = -kInf;
  double scaled = 0;  // sum of exp(l - max_l)
  void add(double l) {
    if (l == -kInf) return;
    if (l <= max_l) {
      scaled += std::exp(l - max_l);
    } else {
      scaled = scaled * std::exp(max_l - l) + 1.0;
      max_l = l;
    }
  }
  double value_ln() const { return scaled == 0 ? -kInf : max_l + std::log(scaled); }
};

struct BlockPass {
  double ln_w = -kInf;
  double ln_w2 = -kInf;
  double ln_cert = -kInf;
  double ln_cert_sq = -kInf;
  bool capped = false;
  std::uint64_t terms = 0;
};

BlockPass eval_blocks(const FrequencyView& view, TermKind kind, int r, double ln_t,
                      const EvalOptions& opt) {
  const auto& blocks = view.blocks();
  const int kr = kind == TermKind::pmf ? r : 1;
  const double scale_ln = kind == TermKind::pmf ? r * ln_t - log_factorial(r) : ln_t;
  BlockPass out;
  LogSum lw, lw2;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    double ln_x = ln_t + blocks[i].log2_q * kLn2;
    double ln_m = blocks[i].log2_m * kLn2;
    double ln_term;
    if (kind == TermKind::occupancy) {
      if (ln_x > 1.0) {
        ln_term = ln_x > 709.0 ? 0.0 : std::log(-std::expm1(-std::exp(ln_x)));
      } else if (ln_x > -30.0) {
        ln_term = std::log(-std::expm1(-std::exp(ln_x)));
      } else {
        ln_term = ln_x + std::log1p(-0.5 * std::exp(ln_x));
      }
    } else {
      ln_term = log_poisson_pmf_from_log(ln_x, r);
    }
    lw.add(ln_m + ln_term);
    lw2.add(ln_m + 2.0 * ln_term);
    ++out.terms;

    TailBound tb = view.block_tail_bound(i, kr);
    out.ln_cert = tb.value > 0 ? scale_ln + std::log(tb.value) : -kInf;
    out.ln_cert_sq = out.ln_cert;  // summands are <= 1
    double target_ln = std::log(tail_target(opt, 0.0));
    if (opt.rel_tol > 0 && lw.value_ln() > -kInf)
      target_ln = std::max(target_ln, std::log(opt.rel_tol) + lw.value_ln());
    if (out.ln_cert <= target_ln) {
      out.ln_w = lw.value_ln();
      out.ln_w2 = lw2.value_ln();
      return out;
    }

    // Once the remaining blocks sit in the small-argument range
    // (x = t q <= 1/4), complete the sum in closed form through the power
    // tails T_k = sum_{l>i} m_l q_l^k: the summands expand as
    // x^kr/kr! (1 - x + x^2/2 - ...), so adding
    // (t^kr/kr!)(T_kr - t T_{kr+1} + t^2 T_{kr+2}/2) leaves an error below
    // (t^{kr+3}/(6 kr!)) T_{kr+3}. This is what makes the factorial rule
    // tractable: its power tail at kr = 1 shrinks only like 1/i, so the
    // crude bound above never meets tight targets.
    if (i + 1 < blocks.size() && ln_t + blocks[i + 1].log2_q * kLn2 <= std::log(0.25)) {
      double lt3 = view.block_tail_sum_log2(i, kr + 3) * kLn2;
      double corr_ln =
          lt3 == -kInf ? -kInf : scale_ln + 3.0 * ln_t - std::log(6.0) + lt3;
      if (corr_ln <= target_ln) {
        double lt0 = (tb.exact ? std::log2(tb.value) : view.block_tail_sum_log2(i, kr)) * kLn2;
        if (lt0 > -kInf) {
          double lt1 = view.block_tail_sum_log2(i, kr + 1) * kLn2;
          double lt2 = view.block_tail_sum_log2(i, kr + 2) * kLn2;
          double r1 = lt1 == -kInf ? 0.0 : std::exp(ln_t + lt1 - lt0);
          double r2 = lt2 == -kInf ? 0.0 : std::exp(2.0 * ln_t + lt2 - lt0);
          lw.add(scale_ln + lt0 + std::log1p(std::max(-r1 + 0.5 * r2, -0.5)));
        }
        out.ln_cert = corr_ln;
        // the uncompleted square sum misses at most (t^kr/kr!)^2 T_{2 kr}
        double lt_sq = view.block_tail_sum_log2(i, 2 * kr) * kLn2;
        out.ln_cert_sq = lt_sq == -kInf ? -kInf : 2.0 * scale_ln + lt_sq;
        out.ln_w = lw.value_ln();
        out.ln_w2 = lw2.value_ln();
        return out;
      }
    }
  }
  // generated blocks exhausted before the certificate target was met
  out.capped = true;
  out.ln_w = lw.value_ln();
  out.ln_w2 = lw2.value_ln();
  return out;
}

Pass eval_series(const FrequencyView& view, TermKind kind, int r, double t,
                 const EvalOptions& opt) {
  if (kind == TermKind::pmf && r < 1) throw std::invalid_argument("moment order r must be >= 1");
  if (!(t >= 0.0)) throw std::invalid_argument("t must be nonnegative");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (t == 0.0) return {};
  switch (view.family()) {
    case FamilyTag::explicit_list:
      return eval_explicit(view, kind, r, t);
    case FamilyTag::blocks: {
      BlockPass bp = eval_blocks(view, kind, r, std::log(t), opt);
      Pass out;
      out.sum_w = bp.ln_w == -kInf ? 0.0 : std::exp(bp.ln_w);
      out.sum_w2 = bp.ln_w2 == -kInf ? 0.0 : std::exp(bp.ln_w2);
      out.cert = bp.ln_cert == -kInf ? 0.0 : std::exp(std::min(bp.ln_cert, 700.0));
      out.cert_sq = bp.ln_cert_sq == -kInf ? 0.0 : std::exp(std::min(bp.ln_cert_sq, 700.0));
      out.capped = bp.capped;
      out.terms = bp.terms;
      return out;
    }
    default:
      return eval_infinite(view, kind, r, t, opt);
  }
}

MomentValue to_moment(const Pass& p, bool variance_form = false) {
  MomentValue m;
  m.value = variance_form ? p.sum_w - p.sum_w2 : p.sum_w;
  m.cert = p.cert;
  m.capped = p.capped;
  m.terms = p.terms;
  return m;
}

}  // namespace

MomentValue phi(const FrequencyView& view, int r, double t, const EvalOptions& opt) {
  return to_moment(eval_series(view, TermKind::pmf, r, t, opt));
}

BlockPhi phi_blocks_log2t(const FrequencyView& view, int r, double log2_t,
                          const EvalOptions& opt) {
  if (view.family() != FamilyTag::blocks)
    throw std::invalid_argument("phi_blocks_log2t requires a block view");
  if (r < 1) throw std::invalid_argument("moment order r must be >= 1");
  BlockPass bp = eval_blocks(view, TermKind::pmf, r, log2_t * kLn2, opt);
  BlockPhi out;
  out.log2_value = bp.ln_w * kLog2E;
  out.linear.value = bp.ln_w == -kInf ? 0.0 : std::exp2(out.log2_value);
  out.linear.cert = bp.ln_cert == -kInf ? 0.0 : std::exp(std::min(bp.ln_cert, 700.0));
  out.linear.capped = bp.capped;
  out.linear.terms = bp.terms;
  return out;
}

MomentValue phi_occupied(const FrequencyView& view, double t, const EvalOptions& opt) {
  return to_moment(eval_series(view, TermKind::occupancy, 1, t, opt));
}

MomentValue occupied_variance(const FrequencyView& view, double t, const EvalOptions& opt) {
  return to_moment(eval_series(view, TermKind::occupancy, 1, t, opt), /*variance_form=*/true);
}

MomentValue variance(const FrequencyView& view, int r, double t, const EvalOptions& opt) {
  Pass pass = eval_series(view, TermKind::pmf, r, t, opt);
  MomentValue direct = to_moment(pass, /*variance_form=*/true);
  direct.cert = pass.cert + pass.cert_sq;

  // Cross-check against the binomial identity
  //   sum_j p_{j,r}(t)^2 = 2^{-2r} C(2r,r) Phi_{2r}(2t),
  // which must agree with the directly accumulated square sum within the
  // combined certificates.
  if (t > 0.0 && std::isfinite(pass.sum_w)) {
    double pref = std::exp(std::log(binomial_coeff(2 * r, r)) - 2.0 * r * kLn2);
    MomentValue phi2 = phi(view, 2 * r, 2.0 * t, opt);
    if (std::isfinite(phi2.value) && std::isfinite(pass.cert_sq)) {
      double gap = std::abs(pass.sum_w2 - pref * phi2.value);
      double allowed =
          pass.cert_sq + pref * phi2.cert + 1e-9 * (1.0 + pass.sum_w + pref * phi2.value);
      if (gap > allowed) {
        throw std::logic_error("variance cross-check failed: direct and doubled-argument forms "
                               "disagree beyond certificates (r=" + std::to_string(r) +
                               ", t=" + std::to_string(t) + ")");
      }
    }
  }
  return direct;
}

MomentValue covariance(const FrequencyView& view, int r, int s, double t,
                       const EvalOptions& opt) {
  if (r == s) throw std::invalid_argument("covariance requires r != s");
  if (r < 1 || s < 1) throw std::invalid_argument("covariance orders must be >= 1");
  double pref = std::exp(std::log(binomial_coeff(r + s, r)) - (r + s) * kLn2);
  MomentValue p = phi(view, r + s, 2.0 * t, opt);
  MomentValue out;
  out.value = -pref * p.value;
  out.cert = pref * p.cert;
  out.capped = p.capped;
  out.terms = p.terms;
  return out;
}

MomentValue binomial_mean(const FrequencyView& view, std::uint64_t n, int r,
                          const EvalOptions& opt) {
  if (n < 1) throw std::invalid_argument("binomial_mean: n >= 1");
  if (r < 0 || std::uint64_t(r) > n) throw std::invalid_argument("binomial_mean: 0 <= r <= n");
  if (r == 0 && !view.finite_support())
    throw std::invalid_argument("binomial_mean: r = 0 diverges for infinite supports");
  const double lC = log_factorial_u64(n) - log_factorial(r) - log_factorial_u64(n - r);
  MomentValue out;
  KahanSum s;
  if (view.finite_support()) {
    for (std::uint64_t j = 1; j <= view.support_size(); ++j) {
      double p = view.prob(j);
      double w;
      if (p >= 1.0) {
        w = std::uint64_t(r) == n ? 1.0 : 0.0;
      } else {
        double lw = lC + r * std::log(p) + double(n - r) * std::log1p(-p);
        w = lw < -745.0 ? 0.0 : std::exp(lw);
      }
      s.add(w);
      ++out.terms;
    }
    out.value = s.value();
    return out;
  }
  const double ln_n = std::log(double(n));
  std::uint64_t j = 1;
  for (;;) {
    double target = tail_target(opt, s.value());
    TailBound tb = view.tail_bound(j - 1, std::max(r, 1));
    double lb = tb.value > 0 ? r * ln_n - log_factorial(r) + std::log(tb.value) : -kInf;
    if (lb <= std::log(target)) {
      out.cert = lb == -kInf ? 0.0 : std::exp(lb);
      break;
    }
    if (out.terms >= opt.max_terms) {
      out.capped = true;
      out.cert = std::exp(std::min(lb, 700.0));
      break;
    }
    std::uint64_t j_end = j + kChunk;
    for (; j < j_end; ++j) {
      double lp = view.log_prob(j);
      double p = std::exp(lp);
      double lw = lC + r * lp + double(n - r) * std::log1p(-p);
      if (lw > -745.0) s.add(std::exp(lw));
    }
    out.terms += kChunk;
  }
  out.value = s.value();
  return out;
}

CovMatrix corr_matrix(const FrequencyView& view, const std::vector<int>& r_set, double t,
                      const EvalOptions& opt) {
  if (r_set.empty()) throw std::invalid_argument("corr_matrix: empty index set");
  for (std::size_t i = 0; i < r_set.size(); ++i) {
    if (r_set[i] < 1 || (i > 0 && r_set[i] <= r_set[i - 1]))
      throw std::invalid_argument("corr_matrix: r_set must be strictly increasing and >= 1");
  }
  const int m = int(r_set.size());
  std::vector<MomentValue> vars(m);
  for (int i = 0; i < m; ++i) {
    vars[i] = variance(view, r_set[i], t, opt);
    if (!(vars[i].value > 1e-12))
      throw std::domain_error("degenerate variance for r = " + std::to_string(r_set[i]) +
                              " at t = " + std::to_string(t));
  }
  CovMatrix out;
  out.r_set = r_set;
  out.t = t;
  out.sigma.assign(std::size_t(m) * m, 0.0);
  for (int i = 0; i < m; ++i) out.sigma[std::size_t(i) * m + i] = 1.0;
  for (int i = 0; i < m; ++i) {
    for (int k = i + 1; k < m; ++k) {
      MomentValue c = covariance(view, r_set[i], r_set[k], t, opt);
      double denom = std::sqrt(vars[i].value * vars[k].value);
      double entry = c.value / denom;
      out.sigma[std::size_t(i) * m + k] = entry;
      out.sigma[std::size_t(k) * m + i] = entry;
      double cert = c.cert / denom +
                    std::abs(entry) * 0.5 *
                        (vars[i].cert / vars[i].value + vars[k].cert / vars[k].value);
      out.entry_cert = std::max(out.entry_cert, cert);
    }
  }
  out.eigen_floor = std::min(kInvE, poisson_one_upper_tail(r_set.back()));
  out.min_eigenvalue = sym_min_eigenvalue(out.sigma, m);
  if (out.min_eigenvalue < out.eigen_floor - 1e-6 - 10.0 * m * out.entry_cert) {
    throw std::logic_error("correlation matrix eigenvalue fell below its structural floor");
  }
  return out;
}

MomentTable tabulate_moments(const FrequencyView& view, const std::vector<int>& r_set,
                             const std::vector<double>& t_grid, const EvalOptions& opt,
                             bool with_pairs, int threads) {
  MomentTable table;
  table.r_set = r_set;
  table.t_grid = t_grid;
  table.entries.resize(t_grid.size() * r_set.size());
  std::size_t npairs = with_pairs ? r_set.size() * (r_set.size() - 1) / 2 : 0;
  table.pairs.resize(t_grid.size() * npairs);
  parallel_for(t_grid.size(), threads, [&](std::uint64_t g) {
    double t = t_grid[g];
    std::vector<MomentValue> vars(r_set.size());
    for (std::size_t i = 0; i < r_set.size(); ++i) {
      MomentValue p = phi(view, r_set[i], t, opt);
      vars[i] = variance(view, r_set[i], t, opt);
      MomentEntry& e = table.entries[g * r_set.size() + i];
      e.t = t;
      e.r = r_set[i];
      e.phi = p.value;
      e.phi_cert = p.cert;
      e.var = vars[i].value;
      e.var_cert = vars[i].cert;
    }
    if (with_pairs) {
      std::size_t slot = g * npairs;
      for (std::size_t i = 0; i < r_set.size(); ++i) {
        for (std::size_t k = i + 1; k < r_set.size(); ++k, ++slot) {
          MomentValue c = covariance(view, r_set[i], r_set[k], t, opt);
          MomentPairEntry& e = table.pairs[slot];
          e.t = t;
          e.r = r_set[i];
          e.s = r_set[k];
          e.cov = c.value;
          e.cov_cert = c.cert;
          double denom = std::sqrt(vars[i].value * vars[k].value);
          e.corr = denom > 0 ? c.value / denom : std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
  });
  return table;
}

}  // namespace occlab
