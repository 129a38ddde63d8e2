#include "occlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "occlab/moments.hpp"
#include "occlab/numerics.hpp"
#include "occlab/parallel.hpp"

namespace occlab {

namespace {

constexpr std::uint64_t kPrefixCap = std::uint64_t(1) << 22;
constexpr std::uint64_t kTailSection = std::uint64_t(1) << 32;

// Certified interval for the tail mass beyond box k, refined by extending
// an explicit partial sum. Drives the lazy accept/placement decisions.
struct TailMass {
  const FrequencyView* view;
  std::uint64_t k;
  double partial = 0;
  std::uint64_t m = 0;
  bool exact;

  TailMass(const FrequencyView& v, std::uint64_t k_) : view(&v), k(k_) {
    exact = v.tail_bound(k, 1).exact;
  }
  double lo() const { return exact ? hi() : partial; }
  double hi() const { return partial + view->tail_bound(k + m, 1).value; }
  bool refinable() const {
    return !exact && !(view->finite_support() && k + m >= view->support_size());
  }
  void refine() {
    std::uint64_t grow = std::max<std::uint64_t>(64, m);
    partial += view->tail_partial(k + m, 1, grow);
    m += grow;
  }
};

// Walk a ball into the tail: given it lies beyond box k, pick the box by
// per-box stick breaking with lazily refined residual masses. Exact; the
// undecidable band shrinks to float noise before it can matter.
std::uint64_t place_tail_ball(const FrequencyView& view, RngStream& g, std::uint64_t k) {
  std::uint64_t j = k + 1;
  for (;;) {
    if (view.finite_support() && j >= view.support_size()) return view.support_size();
    double pj = view.prob(j);
    TailMass rest(view, j - 1);  // mass of boxes >= j
    double u = g.uniform();
    for (;;) {
      if (u * rest.hi() < pj) break;  // box j even against the largest residual
      if (u * rest.lo() >= pj) {
        pj = -1.0;  // beyond box j
        break;
      }
      if (!rest.refinable()) break;  // interval collapsed to float noise
      rest.refine();
    }
    if (pj >= 0.0) return j;
    ++j;
  }
}

struct Tally {
  std::vector<std::uint64_t> counts;
  std::uint64_t overflow_boxes = 0, overflow_balls = 0, occupied = 0, total = 0;

  explicit Tally(int r_cap) : counts(std::size_t(r_cap) + 1, 0) {}
  void box(std::uint64_t balls) {
    if (balls == 0) return;
    ++occupied;
    total += balls;
    if (balls < counts.size()) {
      ++counts[balls];
    } else {
      ++overflow_boxes;
      overflow_balls += balls;
    }
  }
};

}  // namespace

Sampler::Sampler(const FrequencyView& view, Scheme scheme, double size, int r_cap)
    : view_(&view), scheme_(scheme), size_(size), r_cap_(r_cap) {
  if (r_cap < 1) throw std::invalid_argument("sampler: r_cap >= 1");
  if (!(size > 0)) throw std::invalid_argument("sampler: size must be positive");
  if (scheme == Scheme::fixed_n) {
    if (view.subprobability())
      throw std::invalid_argument("fixed-n sampling rejects subprobability models");
    if (size != std::floor(size) || size > 9e15)
      throw std::invalid_argument("fixed-n sampling needs an integral ball count");
  }

  // Prefix: aim for size * tail <= 0.1 so tail placements stay rare, memory
  // permitting. Correctness does not depend on reaching the target.
  std::uint64_t k = 1;
  while (k < kPrefixCap && size_ * view.tail_bound(k, 1).value > 0.1) k *= 2;
  if (view.finite_support()) k = view.support_size();
  std::uint64_t lo = k / 2, hi = k;
  if (!view.finite_support() && k < kPrefixCap) {
    while (lo + 1 < hi) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      if (size_ * view.tail_bound(mid, 1).value > 0.1)
        lo = mid;
      else
        hi = mid;
    }
    k = hi;
  }
  prefix_ = std::min(k, kPrefixCap);
  tail_upper_ = view.finite_support() && prefix_ >= view.support_size()
                    ? 0.0
                    : view.tail_bound(prefix_, 1).value;

  probs_.resize(prefix_);
  for (std::uint64_t j = 1; j <= prefix_; ++j) probs_[j - 1] = view.prob(j);

  if (scheme == Scheme::poissonized) {
    cum_rate_.resize(prefix_ + 1);
    exp_neg_mu_.resize(prefix_);
    KahanSum acc;
    for (std::uint64_t j = 0; j < prefix_; ++j) {
      cum_rate_[j] = size_ * acc.value();
      acc.add(probs_[j]);
      exp_neg_mu_[j] = std::exp(-size_ * probs_[j]);
    }
    cum_rate_[prefix_] = size_ * acc.value();
  } else {
    cond_q_.resize(prefix_);
    log_no_hit_.resize(prefix_ + 1);
    long double remaining = 1.0L;
    long double t_acc = 0.0L;
    for (std::uint64_t j = 0; j < prefix_; ++j) {
      log_no_hit_[j] = double(t_acc);
      double q = remaining > 0 ? std::min(double(probs_[j] / double(remaining)), 1.0) : 1.0;
      cond_q_[j] = q;
      t_acc += q >= 1.0 ? -std::numeric_limits<long double>::infinity()
                        : (long double)std::log1p(-q);
      remaining -= probs_[j];
    }
    log_no_hit_[prefix_] = double(t_acc);
  }
}

CountVector Sampler::sample(std::uint64_t seed, std::uint64_t replicate) const {
  RngStream g(seed, replicate);
  return scheme_ == Scheme::fixed_n ? sample_fixed_n(g) : sample_poissonized(g);
}

CountVector Sampler::sample_poissonized(RngStream& g) const {
  Tally tally(r_cap_);
  CountVector out;
  out.scheme = Scheme::poissonized;
  out.size = size_;
  out.prefix_len = prefix_;

  // Prefix pass: the joint law of independent Poisson(t p_j) counts, sampled
  // by jumping between occupied boxes. P(no arrival in boxes [j, m)) =
  // exp(-(A_m - A_j)), inverted by binary search; the occupied box then
  // holds a Poisson conditioned to be positive.
  std::uint64_t j = 1;
  while (j <= prefix_) {
    g.set_section(1 + ((j - 1) >> 10));
    double u = std::max(g.uniform(), 0x1.0p-60);
    double all_clear = -(cum_rate_[prefix_] - cum_rate_[j - 1]);
    double lu = std::log(u);
    if (lu <= all_clear) break;  // no further prefix arrivals
    // smallest m with exp(-(A_{m+1} - A_j)) < u
    std::uint64_t lo = j, hi = prefix_;
    while (lo < hi) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      if (-(cum_rate_[mid] - cum_rate_[j - 1]) < lu)
        hi = mid;
      else
        lo = mid + 1;
    }
    std::uint64_t m = lo;  // 1-based first occupied box
    g.set_section(1 + ((m - 1) >> 10));
    double mu = size_ * probs_[m - 1];
    std::uint64_t c;
    if (mu >= 10.0) {
      do {
        c = poisson_draw(g, mu);
      } while (c == 0);
    } else {
      // conditional inversion over k >= 1
      double e = exp_neg_mu_[m - 1];
      double norm = -std::expm1(-mu);
      double v = g.uniform() * norm;
      double f = e * mu;
      std::uint64_t k = 1;
      double cum = f;
      while (v > cum && f > 1e-320 && k < 500) {
        ++k;
        f *= mu / double(k);
        cum += f;
      }
      c = k;
    }
    tally.box(c);
    j = m + 1;
  }

  // Tail pass: arrivals beyond the prefix occur at rate t * pi_K; sample at
  // the certified upper rate and thin each candidate against the true mass
  // (lazily refined), then stick-break it into a concrete box.
  if (tail_upper_ > 0) {
    g.set_section(kTailSection);
    std::uint64_t candidates = poisson_draw(g, size_ * tail_upper_);
    std::map<std::uint64_t, std::uint64_t> tail_boxes;
    for (std::uint64_t b = 0; b < candidates; ++b) {
      g.set_section(kTailSection + 1 + b);
      TailMass pi(*view_, prefix_);
      double u = g.uniform();
      bool real;
      for (;;) {
        if (u * tail_upper_ < pi.lo()) {
          real = true;
          break;
        }
        if (u * tail_upper_ >= pi.hi()) {
          real = false;
          break;
        }
        if (!pi.refinable()) {
          real = u * tail_upper_ < pi.hi();
          break;
        }
        pi.refine();
      }
      if (!real) continue;  // phantom: candidate rate exceeded the true mass
      std::uint64_t box = place_tail_ball(*view_, g, prefix_);
      ++tail_boxes[box];
      ++out.tail_balls;
    }
    for (auto& [box, balls] : tail_boxes) tally.box(balls);
  }

  out.counts = std::move(tally.counts);
  out.overflow_boxes = tally.overflow_boxes;
  out.overflow_balls = tally.overflow_balls;
  out.occupied = tally.occupied;
  out.total_balls = tally.total;
  return out;
}

CountVector Sampler::sample_fixed_n(RngStream& g) const {
  Tally tally(r_cap_);
  CountVector out;
  out.scheme = Scheme::fixed_n;
  out.size = size_;
  out.prefix_len = prefix_;

  const std::uint64_t n = std::uint64_t(size_);
  std::uint64_t remaining = n;

  // Sequential binomial conditioning, realized as first-hit jumps:
  // P(boxes [j, m) all empty | R remaining) = exp(R (T_m - T_j)).
  std::uint64_t j = 1;
  while (remaining > 0 && j <= prefix_) {
    g.set_section(1 + ((j - 1) >> 10));
    double u = std::max(g.uniform(), 0x1.0p-60);
    double lu = std::log(u) / double(remaining);
    if (log_no_hit_[prefix_] - log_no_hit_[j - 1] >= lu) {
      break;  // prefix ends with no further hits
    }
    std::uint64_t lo = j, hi = prefix_;
    while (lo < hi) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      if (log_no_hit_[mid] - log_no_hit_[j - 1] < lu)
        hi = mid;
      else
        lo = mid + 1;
    }
    std::uint64_t m = lo;
    g.set_section(1 + ((m - 1) >> 10));
    double q = cond_q_[m - 1];
    std::uint64_t c;
    if (q >= 1.0) {
      c = remaining;
    } else if (double(remaining) * q >= 10.0) {
      do {
        c = binomial_draw(g, remaining, q);
      } while (c == 0);
    } else {
      double norm = -std::expm1(double(remaining) * std::log1p(-q));
      double v = g.uniform() * norm;
      double f = std::exp(std::log(double(remaining)) + std::log(q) +
                          double(remaining - 1) * std::log1p(-q));
      std::uint64_t k = 1;
      double cum = f;
      const double s = q / (1.0 - q);
      while (v > cum && k < remaining) {
        f *= double(remaining - k) * s / double(k + 1);
        ++k;
        cum += f;
      }
      c = k;
    }
    tally.box(c);
    remaining -= c;
    j = m + 1;
  }

  // Remaining balls land beyond the prefix, iid with the renormalized tail
  // frequencies; place each one exactly.
  if (remaining > 0) {
    std::map<std::uint64_t, std::uint64_t> tail_boxes;
    for (std::uint64_t b = 0; b < remaining; ++b) {
      g.set_section(kTailSection + 1 + b);
      std::uint64_t box = place_tail_ball(*view_, g, prefix_);
      ++tail_boxes[box];
      ++out.tail_balls;
    }
    for (auto& [box, balls] : tail_boxes) tally.box(balls);
  }

  out.counts = std::move(tally.counts);
  out.overflow_boxes = tally.overflow_boxes;
  out.overflow_balls = tally.overflow_balls;
  out.occupied = tally.occupied;
  out.total_balls = tally.total;
  return out;
}

SimResult monte_carlo(const FrequencyView& view, const SimConfig& config) {
  if (config.replicates < 1) throw std::invalid_argument("monte_carlo: replicates >= 1");
  if (config.r_set.empty()) throw std::invalid_argument("monte_carlo: empty r_set");
  for (std::size_t i = 0; i < config.r_set.size(); ++i) {
    if (config.r_set[i] < 1 || (i > 0 && config.r_set[i] <= config.r_set[i - 1]))
      throw std::invalid_argument("monte_carlo: r_set must be strictly increasing, >= 1");
  }
  if (config.r_cap < config.r_set.back())
    throw std::invalid_argument("monte_carlo: r_cap must cover max(r_set)");

  const int m = int(config.r_set.size());
  SimResult res;
  res.config = config;
  res.phi.resize(m);
  res.var.resize(m);

  EvalOptions opt;
  opt.tol = 1e-9;
  opt.rel_tol = 1e-10;
  for (int i = 0; i < m; ++i) {
    res.phi[i] = phi(view, config.r_set[i], config.size, opt).value;
    MomentValue v = variance(view, config.r_set[i], config.size, opt);
    if (!(v.value > 1e-12))
      throw std::domain_error("degenerate variance for r = " + std::to_string(config.r_set[i]));
    res.var[i] = v.value;
  }

  Sampler sampler(view, config.scheme, config.size, config.r_cap);

  const std::uint64_t reps = config.replicates;
  const std::uint64_t chunk = 1024;
  const std::uint64_t nchunks = (reps + chunk - 1) / chunk;

  struct Partial {
    std::vector<double> sum_x, sum_xx, raw;
    double sum_balls = 0, sum_balls_sq = 0;
    std::uint64_t bad = 0;
  };
  std::vector<Partial> partials(nchunks);
  if (config.retain_standardized) res.standardized.resize(reps * m);

  parallel_for(nchunks, config.threads, [&](std::uint64_t ci) {
    Partial part;
    part.sum_x.assign(m, 0.0);
    part.sum_xx.assign(std::size_t(m) * m, 0.0);
    part.raw.assign(config.r_cap + 1, 0.0);
    std::uint64_t lo = ci * chunk, hi = std::min(reps, lo + chunk);
    std::vector<double> x(m);
    for (std::uint64_t rep = lo; rep < hi; ++rep) {
      CountVector cv = sampler.sample(config.seed, rep);
      if (config.scheme == Scheme::fixed_n && cv.ball_check() != std::uint64_t(config.size))
        ++part.bad;
      if (config.scheme == Scheme::poissonized && cv.ball_check() != cv.total_balls)
        ++part.bad;
      for (int i = 0; i < m; ++i) {
        int r = config.r_set[i];
        x[i] = (double(cv.counts[r]) - res.phi[i]) / std::sqrt(res.var[i]);
      }
      if (config.retain_standardized)
        std::copy(x.begin(), x.end(), res.standardized.begin() + rep * m);
      for (int i = 0; i < m; ++i) {
        part.sum_x[i] += x[i];
        for (int k = 0; k <= i; ++k) part.sum_xx[std::size_t(i) * m + k] += x[i] * x[k];
      }
      for (int r = 0; r <= config.r_cap; ++r) part.raw[r] += double(cv.counts[r]);
      part.sum_balls += double(cv.total_balls);
      part.sum_balls_sq += double(cv.total_balls) * double(cv.total_balls);
    }
    partials[ci] = std::move(part);
  });

  // deterministic reduction in chunk order
  std::vector<KahanSum> sx(m);
  std::vector<KahanSum> sxx(std::size_t(m) * m);
  std::vector<KahanSum> raw(config.r_cap + 1);
  KahanSum balls, balls_sq;
  for (auto& part : partials) {
    for (int i = 0; i < m; ++i) sx[i].add(part.sum_x[i]);
    for (std::size_t i = 0; i < sxx.size(); ++i) sxx[i].add(part.sum_xx[i]);
    for (int r = 0; r <= config.r_cap; ++r) raw[r].add(part.raw[r]);
    balls.add(part.sum_balls);
    balls_sq.add(part.sum_balls_sq);
    res.conservation_failures += part.bad;
  }

  const double nrep = double(reps);
  res.mean_std.resize(m);
  for (int i = 0; i < m; ++i) res.mean_std[i] = sx[i].value() / nrep;
  res.cov_std.assign(std::size_t(m) * m, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k <= i; ++k) {
      double cc = sxx[std::size_t(i) * m + k].value() / nrep -
                  res.mean_std[i] * res.mean_std[k];
      if (reps > 1) cc *= nrep / (nrep - 1.0);
      res.cov_std[std::size_t(i) * m + k] = cc;
      res.cov_std[std::size_t(k) * m + i] = cc;
    }
  }
  res.raw_mean.resize(config.r_cap + 1);
  for (int r = 0; r <= config.r_cap; ++r) res.raw_mean[r] = raw[r].value() / nrep;
  res.mean_total_balls = balls.value() / nrep;
  res.var_total_balls =
      reps > 1 ? (balls_sq.value() / nrep - res.mean_total_balls * res.mean_total_balls) * nrep /
                     (nrep - 1.0)
               : 0.0;
  return res;
}

}  // namespace occlab
