#include "occlab/frequencies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "occlab/numerics.hpp"

namespace occlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Floor for inexact upper bounds whose true value is positive but below any
// representable scale.
constexpr double kBoundFloor = 1e-300;
// Block-size cap: the gen_ex construction reaches 2^4096-sized blocks within
// a dozen indices; everything past the cap is covered by a domination bound.
constexpr double kMaxLog2BlockSize = 4096.0;
constexpr int kFactorialBlockCap = 65536;

double clamp_bound(double v) { return std::max(v, kBoundFloor); }

// Certified upper bound on sum_{j>k} e^{-r j^beta}: the summand is
// decreasing, so the integral from k dominates.
double stretched_tail_integral(double beta, double rk, double k) {
  double s = 1.0 / beta;
  double x = rk * std::pow(k, beta);
  double lg = -std::log(beta) - s * std::log(rk);
  double g = upper_incomplete_gamma(s, x);
  if (g <= 0.0) return 0.0;
  double lv = lg + std::log(g);
  return lv < -700.0 ? 0.0 : std::exp(lv) * (1.0 + 1e-12);
}

}  // namespace

FrequencyView::FrequencyView(FrequencySpec spec) : spec_(std::move(spec)) {
  std::visit(
      [this](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          build_geometric(m);
        } else if constexpr (std::is_same_v<T, PowerLaw>) {
          build_power_law(m);
        } else if constexpr (std::is_same_v<T, StretchedExp>) {
          build_stretched(m);
        } else if constexpr (std::is_same_v<T, PoissonWeights>) {
          build_poisson(m);
        } else if constexpr (std::is_same_v<T, Blocks>) {
          build_blocks(m);
        } else {
          build_explicit(m);
        }
      },
      spec_.model);
  if (!spec_.subprobability && std::abs(total_mass_ - 1.0) > 1e-9) {
    throw std::invalid_argument("frequency model does not sum to 1 (set subprobability to allow)");
  }
  if (total_mass_ > 1.0 + 1e-9) {
    throw std::invalid_argument("frequency model mass exceeds 1");
  }
}

void FrequencyView::build_geometric(const Geometric& g) {
  if (!(g.ratio > 0.0 && g.ratio < 1.0)) throw std::invalid_argument("geometric ratio must be in (0,1)");
  // p_j = c q^j with c = (1-q)/q, so that p_1 = 1-q and the sum telescopes
  // to exactly 1.
  norm_c_ = (1.0 - g.ratio) / g.ratio;
  log_norm_c_ = std::log1p(-g.ratio) - std::log(g.ratio);
  geo_log_ratio_ = std::log(g.ratio);
  total_mass_ = 1.0;
}

void FrequencyView::build_power_law(const PowerLaw& p) {
  if (!(p.exponent > 1.0)) throw std::invalid_argument("power-law exponent must exceed 1");
  pl_exponent_ = p.exponent;
  double z = riemann_zeta(p.exponent);
  if (p.prefactor) {
    if (!(*p.prefactor > 0.0) || *p.prefactor > 1.0)
      throw std::invalid_argument("power-law prefactor must lie in (0,1]");
    norm_c_ = *p.prefactor;
    total_mass_ = norm_c_ * z;
  } else {
    norm_c_ = 1.0 / z;
    total_mass_ = 1.0;
  }
  log_norm_c_ = std::log(norm_c_);
}

void FrequencyView::build_stretched(const StretchedExp& s) {
  if (!(s.beta > 0.0 && s.beta < 1.0)) throw std::invalid_argument("stretched-exp beta must be in (0,1)");
  se_beta_ = s.beta;
  // Explicit head plus a midpoint-rule integral for the remainder; the
  // midpoint error is far below the 1e-12 relative target for every beta.
  KahanSum sum;
  std::uint64_t j = 1;
  const std::uint64_t j_cap = 20000;
  for (; j <= j_cap; ++j) {
    double term = std::exp(-std::pow(double(j), s.beta));
    sum.add(term);
    if (term < 1e-17 * sum.value() && j > 8) break;
  }
  double total = sum.value();
  if (j > j_cap) {
    double x0 = std::pow(double(j_cap) + 0.5, s.beta);
    total += upper_incomplete_gamma(1.0 / s.beta, x0) / s.beta;
  }
  norm_c_ = 1.0 / total;
  log_norm_c_ = -std::log(total);
  total_mass_ = 1.0;
}

void FrequencyView::build_poisson(const PoissonWeights& p) {
  if (!(p.lambda > 0.0 && p.lambda <= 2.0))
    throw std::invalid_argument("poisson-weights lambda must be in (0,2] to keep p_j nonincreasing");
  pw_log_lambda_ = std::log(p.lambda);
  norm_c_ = 1.0 / std::expm1(p.lambda);
  log_norm_c_ = -std::log(std::expm1(p.lambda));
  total_mass_ = 1.0;
}

void FrequencyView::build_blocks(const Blocks& b) {
  std::vector<BlockInfo> raw;  // log2_m / log2_q filled with unnormalized q
  auto push = [&raw](double log2_m, double log2_q_unnorm, std::uint64_t m_exact) {
    BlockInfo info;
    info.log2_m = log2_m;
    info.log2_q = log2_q_unnorm;
    info.m = m_exact;
    raw.push_back(info);
  };

  switch (b.rule) {
    case BlockRule::karlin_ex1:
      for (int i = 1; i <= 14; ++i) push(std::log2(double(i)), -std::ldexp(1.0, i), std::uint64_t(i));
      break;
    case BlockRule::bgy_ex2:
      for (int i = 1; i <= 13; ++i) {
        double log2_m = std::ldexp(1.0, i);  // 2^i
        std::uint64_t m = log2_m <= 62 ? (std::uint64_t(1) << int(log2_m)) : 0;
        push(log2_m, -std::ldexp(1.0, i + 1), m);
      }
      break;
    case BlockRule::gen_ex: {
      if (!(b.beta > 0.0 && b.beta < 1.0) || !(b.alpha > 0.0))
        throw std::invalid_argument("gen_ex requires beta in (0,1) and alpha > 0");
      double g = 1.0;
      for (int i = 1; i <= 4096; ++i) {
        g /= (1.0 - b.beta);  // (1-beta)^{-i}
        if (g > kMaxLog2BlockSize) {
          // one preview block past the cap, used only for tail domination
          push(g, -(1.0 + b.alpha) * g, 0);
          break;
        }
        double log2_m;
        std::uint64_t m = 0;
        if (g <= 62.0) {
          m = std::uint64_t(std::floor(std::exp2(g)));
          if (m < 1) m = 1;
          log2_m = std::log2(double(m));
        } else {
          log2_m = g;  // floor() is below one ulp of log2 at this scale
        }
        push(log2_m, -(1.0 + b.alpha) * log2_m, m);
      }
      break;
    }
    case BlockRule::factorial:
      for (int i = 2; i <= kFactorialBlockCap + 2; ++i) {
        double log2_m = std::lgamma(double(i) - 1.0) * kLog2E;  // log2 (i-2)!
        double log2_q = -std::lgamma(double(i) + 1.0) * kLog2E;
        std::uint64_t m = i - 2 <= 20 ? std::uint64_t(std::llround(factorial(i - 2))) : 0;
        push(log2_m, log2_q, m);
      }
      break;
    case BlockRule::explicit_blocks: {
      if (b.blocks.empty()) throw std::invalid_argument("explicit blocks: empty list");
      double prev_q = kInf;
      for (auto [m, q] : b.blocks) {
        if (!(m >= 1.0) || m != std::floor(m) || m > 4e18)
          throw std::invalid_argument("explicit blocks: sizes must be positive integers");
        if (!(q > 0.0) || q > prev_q) throw std::invalid_argument("explicit blocks: levels must be positive and nonincreasing");
        prev_q = q;
        push(std::log2(m), std::log2(q), std::uint64_t(m));
      }
      break;
    }
  }

  // Normalize: c * sum m_i q_i = mass. The unnormalized block masses span
  // enormous scales, so accumulate in linear space anchored at the largest.
  double max_lm = -kInf;
  for (const auto& blk : raw) max_lm = std::max(max_lm, blk.log2_m + blk.log2_q);
  KahanSum s;
  for (const auto& blk : raw) s.add(std::exp2(blk.log2_m + blk.log2_q - max_lm));
  double unnorm_mass = s.value();  // times 2^max_lm

  double log2_c;
  if (b.rule == BlockRule::factorial) {
    // sum (i-2)!/i! = sum 1/(i(i-1)) telescopes to exactly 1
    log2_c = 0.0;
    norm_c_ = 1.0;
  } else {
    log2_c = -(std::log2(unnorm_mass) + max_lm);
    norm_c_ = std::exp2(log2_c);
  }
  log_norm_c_ = log2_c * kLn2;
  total_mass_ = 1.0;

  // The preview block (the last generated one for capped rules) stays out of
  // the public list; bounds reach past the cap through it.
  bool has_preview = b.rule != BlockRule::explicit_blocks;
  std::size_t n = raw.size() - (has_preview ? 1 : 0);
  blocks_.reserve(n);
  std::uint64_t cum = 0;
  bool cum_ok = true;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    BlockInfo blk = raw[i];
    blk.log2_q += log2_c;
    blk.log2_mass = blk.log2_m + blk.log2_q;
    blk.q = blk.log2_q >= -1070.0 ? std::exp2(blk.log2_q) : 0.0;
    if (cum_ok && blk.m > 0 && cum <= std::uint64_t(-1) - blk.m) {
      cum += blk.m;
      blk.cum_boxes = cum;
      blk.cum_exact = true;
    } else {
      cum_ok = false;
    }
    if (i < n) {
      blocks_.push_back(blk);
    } else {
      block_preview_ = blk;
    }
  }
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].cum_exact) last_exact_block_ = i;
  }
  if (b.rule == BlockRule::explicit_blocks) {
    finite_support_ = true;
    if (!blocks_.back().cum_exact) throw std::invalid_argument("explicit blocks: total box count too large");
    support_size_ = blocks_.back().cum_boxes;
  }
}

void FrequencyView::build_explicit(const ExplicitList& e) {
  if (e.probs.empty()) throw std::invalid_argument("explicit list: empty");
  double prev = kInf;
  KahanSum s;
  for (double p : e.probs) {
    if (!(p > 0.0)) throw std::invalid_argument("explicit list: entries must be positive");
    if (p > prev) throw std::invalid_argument("explicit list: entries must be nonincreasing");
    prev = p;
    s.add(p);
  }
  explicit_probs_ = e.probs;
  finite_support_ = true;
  support_size_ = e.probs.size();
  total_mass_ = s.value();
  norm_c_ = 1.0;
  log_norm_c_ = 0.0;
}

bool FrequencyView::is_blocks() const { return std::holds_alternative<Blocks>(spec_.model); }

std::uint64_t FrequencyView::addressable_boxes() const {
  if (finite_support_) return support_size_;
  if (is_blocks()) return blocks_[last_exact_block_].cum_boxes;
  return std::uint64_t(-1);
}

FamilyTag FrequencyView::family() const {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Geometric>) return FamilyTag::geometric;
        if constexpr (std::is_same_v<T, PowerLaw>) return FamilyTag::power_law;
        if constexpr (std::is_same_v<T, StretchedExp>) return FamilyTag::stretched_exp;
        if constexpr (std::is_same_v<T, PoissonWeights>) return FamilyTag::poisson_weights;
        if constexpr (std::is_same_v<T, Blocks>) return FamilyTag::blocks;
        if constexpr (std::is_same_v<T, ExplicitList>) return FamilyTag::explicit_list;
      },
      spec_.model);
}

std::size_t FrequencyView::block_at(std::uint64_t j) const {
  // smallest i with cum_boxes >= j, restricted to the exact-cumulative prefix
  if (j > blocks_[last_exact_block_].cum_boxes)
    throw std::domain_error("box index beyond the addressable block range");
  std::size_t lo = 0, hi = last_exact_block_;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (blocks_[mid].cum_boxes >= j)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

double FrequencyView::prob(std::uint64_t j) const {
  if (j == 0) throw std::invalid_argument("box indices start at 1");
  return std::visit(
      [this, j](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          double lv = log_norm_c_ + double(j) * geo_log_ratio_;
          return lv < -745.0 ? 0.0 : std::exp(lv);
        } else if constexpr (std::is_same_v<T, PowerLaw>) {
          return std::exp(log_norm_c_ - pl_exponent_ * std::log(double(j)));
        } else if constexpr (std::is_same_v<T, StretchedExp>) {
          double lv = log_norm_c_ - std::pow(double(j), se_beta_);
          return lv < -745.0 ? 0.0 : std::exp(lv);
        } else if constexpr (std::is_same_v<T, PoissonWeights>) {
          double lv = log_norm_c_ + double(j) * pw_log_lambda_ - log_factorial_u64(j);
          return lv < -745.0 ? 0.0 : std::exp(lv);
        } else if constexpr (std::is_same_v<T, Blocks>) {
          return blocks_[block_at(j)].q;
        } else {
          return j <= explicit_probs_.size() ? explicit_probs_[j - 1] : 0.0;
        }
      },
      spec_.model);
}

double FrequencyView::log_prob(std::uint64_t j) const {
  if (j == 0) throw std::invalid_argument("box indices start at 1");
  return std::visit(
      [this, j](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          return log_norm_c_ + double(j) * geo_log_ratio_;
        } else if constexpr (std::is_same_v<T, PowerLaw>) {
          return log_norm_c_ - pl_exponent_ * std::log(double(j));
        } else if constexpr (std::is_same_v<T, StretchedExp>) {
          return log_norm_c_ - std::pow(double(j), se_beta_);
        } else if constexpr (std::is_same_v<T, PoissonWeights>) {
          return log_norm_c_ + double(j) * pw_log_lambda_ - log_factorial_u64(j);
        } else if constexpr (std::is_same_v<T, Blocks>) {
          return blocks_[block_at(j)].log2_q * kLn2;
        } else {
          return j <= explicit_probs_.size() ? std::log(explicit_probs_[j - 1])
                                             : -kInf;
        }
      },
      spec_.model);
}

double FrequencyView::block_domination_log2(std::size_t pos, int r) const {
  // log2 upper bound on sum_{l >= pos} m_l q_l^r assuming the r-masses decay
  // at least geometrically from pos on. The ratio is at most 1/2 for the
  // karlin/bgy rules (any r) and the factorial rule (r >= 2); for gen_ex the
  // contraction is computed from the block-growth exponents.
  const BlockInfo* lead;
  if (pos < blocks_.size())
    lead = &blocks_[pos];
  else if (block_preview_ && pos == blocks_.size())
    lead = &*block_preview_;
  else
    return -kInf;
  double lead_l2 = lead->log2_m + r * lead->log2_q;
  const auto& b = std::get<Blocks>(spec_.model);
  if (b.rule != BlockRule::gen_ex) return lead_l2 + 1.0;
  double u = double(r) * (1.0 + b.alpha) - 1.0;
  double g_next = std::pow(1.0 - b.beta, -double(pos + 2));
  double dg = g_next * b.beta / (1.0 - b.beta);
  // floor() slop on the block sizes inflates the ratio by at most
  // exp(u 2^{1 - g}); crushed by the 2^{-u dg} contraction for every
  // admissible (beta, alpha).
  double rho_ln = -u * dg * kLn2 + u * std::exp2(1.0 - g_next / (1.0 - b.beta));
  rho_ln = std::min(rho_ln, -1e-15);
  return lead_l2 - std::log2(-std::expm1(rho_ln));
}

TailBound FrequencyView::block_tail_bound(std::size_t i, int r) const {
  const auto& b = std::get<Blocks>(spec_.model);
  if (b.rule == BlockRule::explicit_blocks) {
    if (i + 1 >= blocks_.size()) return {0.0, true};
    KahanSum s;
    for (std::size_t l = i + 1; l < blocks_.size(); ++l)
      s.add(std::exp2(blocks_[l].log2_m + r * blocks_[l].log2_q));
    return {s.value(), true};
  }
  if (b.rule == BlockRule::factorial && r == 1) {
    // sum_{l > i} m_l q_l telescopes to 1/(block number at position i)
    return {1.0 / (double(i) + 2.0), true};
  }
  double lv = block_domination_log2(i + 1, r);
  if (lv == -kInf) return {kBoundFloor, false};
  return {lv < -996.0 ? kBoundFloor : std::exp2(lv), false};
}

double FrequencyView::block_tail_sum_log2(std::size_t i, int r) const {
  // accurate partial sum over the generated blocks; domination covers only
  // what lies past the generation cap
  double max_lm = -kInf;
  for (std::size_t l = i + 1; l < blocks_.size(); ++l)
    max_lm = std::max(max_lm, blocks_[l].log2_m + r * blocks_[l].log2_q);
  double beyond = block_domination_log2(blocks_.size(), r);
  max_lm = std::max(max_lm, beyond);
  if (max_lm == -kInf) return -kInf;
  KahanSum s;
  for (std::size_t l = i + 1; l < blocks_.size(); ++l)
    s.add(std::exp2(blocks_[l].log2_m + r * blocks_[l].log2_q - max_lm));
  if (beyond > -kInf) s.add(std::exp2(beyond - max_lm));
  return std::log2(s.value()) + max_lm;
}

double FrequencyView::block_tail_sum(std::size_t i, int r) const {
  double lv = block_tail_sum_log2(i, r);
  return lv < -1020.0 ? 0.0 : std::exp2(lv);
}

TailBound FrequencyView::tail_bound(std::uint64_t k, int r) const {
  if (r < 1) throw std::invalid_argument("tail_bound: r >= 1");
  return std::visit(
      [this, k, r](const auto& m) -> TailBound {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          // sum_{i>k} (c q^i)^r = c^r q^{r(k+1)} / (1 - q^r), exact
          double lq = geo_log_ratio_;
          double lv = r * (log_norm_c_ + double(k + 1) * lq) - std::log1p(-std::exp(r * lq));
          if (lv < -690.0) return {kBoundFloor, false};
          return {std::exp(lv), true};
        } else if constexpr (std::is_same_v<T, PowerLaw>) {
          if (k == 0) return {prob_pow_r(1, r) + tail_bound(1, r).value, false};
          double a = r * pl_exponent_;
          double lv = r * log_norm_c_ + (1.0 - a) * std::log(double(k)) - std::log(a - 1.0);
          return {clamp_bound(lv < -690.0 ? 0.0 : std::exp(lv)), false};
        } else if constexpr (std::is_same_v<T, StretchedExp>) {
          if (k == 0) return {prob_pow_r(1, r) + tail_bound(1, r).value, false};
          double cr = std::exp(r * log_norm_c_);
          return {clamp_bound(cr * stretched_tail_integral(se_beta_, double(r), double(k))), false};
        } else if constexpr (std::is_same_v<T, PoissonWeights>) {
          if (k == 0) return {prob_pow_r(1, r) + tail_bound(1, r).value, false};
          // successive ratios lambda/(i+1) <= lambda/(k+2) < 1 beyond k
          double g = std::exp(r * (pw_log_lambda_ - std::log(double(k) + 2.0)));
          double lv = r * log_prob(k + 1) - std::log1p(-g);
          return {clamp_bound(lv < -690.0 ? 0.0 : std::exp(lv)), false};
        } else if constexpr (std::is_same_v<T, Blocks>) {
          bool fact1 = m.rule == BlockRule::factorial && r == 1;
          bool expl = m.rule == BlockRule::explicit_blocks;
          if (k == 0) {
            double rest = expl || fact1 ? block_tail_bound(0, r).value : block_tail_sum(0, r);
            return {std::exp2(r * blocks_[0].log2_q + blocks_[0].log2_m) + rest, expl || fact1};
          }
          std::size_t i = block_at(k);
          double within = double(blocks_[i].cum_boxes - k) * std::exp2(r * blocks_[i].log2_q);
          double rest = expl || fact1 ? block_tail_bound(i, r).value : block_tail_sum(i, r);
          return {within + rest, expl || fact1};
        } else {
          if (k >= explicit_probs_.size()) return {0.0, true};
          KahanSum s;
          for (std::size_t i = k; i < explicit_probs_.size(); ++i)
            s.add(std::pow(explicit_probs_[i], double(r)));
          return {s.value(), true};
        }
      },
      spec_.model);
}

double FrequencyView::tail_partial(std::uint64_t k, int r, std::uint64_t terms) const {
  KahanSum s;
  for (std::uint64_t i = 1; i <= terms; ++i) {
    if (finite_support_ && k + i > support_size_) break;
    double lv = r * log_prob(k + i);
    if (lv < -745.0) break;
    s.add(std::exp(lv));
  }
  return s.value();
}

double FrequencyView::rho(std::uint64_t j, int r) const {
  if (j == 0 || r < 1) throw std::invalid_argument("rho: j >= 1 and r >= 1");
  return std::visit(
      [this, j, r](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Geometric>) {
          double qr = std::exp(r * geo_log_ratio_);
          return qr / (1.0 - qr);
        } else if constexpr (std::is_same_v<T, PowerLaw>) {
          // scale-free Euler-Maclaurin: head terms (j/i)^{re} then the tail
          // anchored at n0, everything relative to p_j^r
          double a = r * pl_exponent_;
          double n0 = std::max(double(j), std::ceil(16.0 + 2.0 * a));
          KahanSum head;
          for (double i = double(j) + 1; i <= n0; ++i)
            head.add(std::exp(-a * std::log(i / double(j))));
          double u = std::exp(-a * std::log(n0 / double(j)));  // (j/n0)^a
          double inv = 1.0 / n0;
          double tail = u * (n0 / (a - 1.0) - 0.5 + a * inv / 12.0 -
                             a * (a + 1.0) * (a + 2.0) * inv * inv * inv / 720.0);
          return head.value() + tail;
        } else if constexpr (std::is_same_v<T, StretchedExp>) {
          double xj = std::pow(double(j), se_beta_);
          KahanSum s;
          double i = double(j);
          for (;;) {
            i += 1.0;
            double term = std::exp(-double(r) * (std::pow(i, se_beta_) - xj));
            s.add(term);
            // ratio of successive terms <= exp(-r beta i^{beta-1})
            double g = std::exp(-double(r) * se_beta_ * std::pow(i, se_beta_ - 1.0));
            if (term * g / (1.0 - g) <= 1e-10 * s.value()) break;
          }
          return s.value();
        } else if constexpr (std::is_same_v<T, PoissonWeights>) {
          double lam = std::exp(pw_log_lambda_);
          KahanSum s;
          double term = 1.0;
          for (std::uint64_t i = j + 1;; ++i) {
            term *= std::pow(lam / double(i), double(r));
            s.add(term);
            double g = std::pow(lam / double(i + 1), double(r));
            if (term * g / (1.0 - g) <= 1e-10 * s.value()) break;
          }
          return s.value();
        } else if constexpr (std::is_same_v<T, Blocks>) {
          std::size_t i = block_at(j);
          double within = double(blocks_[i].cum_boxes - j);
          double rest = m.rule == BlockRule::factorial && r == 1
                            ? block_tail_bound(i, r).value
                            : block_tail_sum(i, r);
          if (rest <= 0.0) return within;
          double lv = std::log2(rest) - double(r) * blocks_[i].log2_q;
          if (lv > 1020.0) return kInf;
          return within + std::exp2(lv);
        } else {
          if (j >= explicit_probs_.size()) return 0.0;
          KahanSum s;
          double pj = explicit_probs_[j - 1];
          for (std::size_t i = j; i < explicit_probs_.size(); ++i)
            s.add(std::pow(explicit_probs_[i] / pj, double(r)));
          return s.value();
        }
      },
      spec_.model);
}

std::uint64_t FrequencyView::first_index_below(double x) const {
  if (!(x > 0.0)) return std::uint64_t(-1);
  if (std::holds_alternative<Blocks>(spec_.model)) {
    double lx = std::log2(x);
    // first block with q < x; q's are nonincreasing over blocks
    std::size_t lo = 0, hi = blocks_.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (blocks_[mid].log2_q < lx)
        hi = mid;
      else
        lo = mid + 1;
    }
    if (lo == 0) return 1;
    if (lo == blocks_.size()) {
      if (finite_support_) return support_size_ + 1;
      return std::uint64_t(-1);  // beyond every generated block
    }
    if (!blocks_[lo - 1].cum_exact) return std::uint64_t(-1);
    return blocks_[lo - 1].cum_boxes + 1;
  }
  if (prob(1) < x) return 1;
  if (finite_support_) {
    if (prob(support_size_) >= x) return support_size_ + 1;
  }
  // gallop then bisect on the monotone sequence
  std::uint64_t lo = 1, hi = 2;
  std::uint64_t cap = finite_support_ ? support_size_ : (std::uint64_t(1) << 62);
  while (hi < cap && prob(hi) >= x) {
    lo = hi;
    hi *= 2;
  }
  hi = std::min(hi, cap);
  while (lo + 1 < hi) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    if (prob(mid) >= x)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

double FrequencyView::prob_pow_r(std::uint64_t j, int r) const {
  double lv = r * log_prob(j);
  return lv < -745.0 ? 0.0 : std::exp(lv);
}

FrequencyView build_frequencies(const FrequencySpec& spec) { return FrequencyView(spec); }

}  // namespace occlab
