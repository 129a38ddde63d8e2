#pragma once
// Exact Monte Carlo realization of the occupancy scheme: the fixed-n
// multinomial model and the Poissonized model, with adaptive prefix
// extension into the infinite tail, plus replicate aggregation with
// schedule-independent reductions.

#include <cstdint>
#include <vector>

#include "occlab/frequencies.hpp"
#include "occlab/rng.hpp"

namespace occlab {

enum class Scheme { fixed_n, poissonized };

struct CountVector {
  Scheme scheme = Scheme::fixed_n;
  double size = 0;                  // n or t
  std::vector<std::uint64_t> counts;  // counts[r] = #boxes with exactly r balls, r in [1, r_cap]
  std::uint64_t overflow_boxes = 0;   // boxes holding more than r_cap balls
  std::uint64_t overflow_balls = 0;   // balls inside those boxes
  std::uint64_t occupied = 0;         // total boxes holding >= 1 ball
  std::uint64_t total_balls = 0;      // n exactly, or the realized Poisson total
  std::uint64_t prefix_len = 0;       // boxes sampled individually
  std::uint32_t tail_balls = 0;       // balls placed beyond the prefix

  int r_cap() const { return int(counts.size()) - 1; }
  /// sum_r r * counts[r] + overflow_balls; equals total_balls by construction.
  std::uint64_t ball_check() const {
    std::uint64_t s = overflow_balls;
    for (std::size_t r = 1; r < counts.size(); ++r) s += r * counts[r];
    return s;
  }
};

class Sampler {
 public:
  Sampler(const FrequencyView& view, Scheme scheme, double size, int r_cap = 32);

  /// One replicate; identical (seed, replicate) always produces an identical
  /// CountVector regardless of what other replicates run concurrently.
  CountVector sample(std::uint64_t seed, std::uint64_t replicate) const;

  std::uint64_t prefix_len() const { return prefix_; }

 private:
  CountVector sample_fixed_n(RngStream& g) const;
  CountVector sample_poissonized(RngStream& g) const;

  const FrequencyView* view_;
  Scheme scheme_;
  double size_;
  int r_cap_;
  std::uint64_t prefix_ = 0;
  double tail_upper_ = 0;  // certified upper bound on the prefix tail mass
  std::vector<double> probs_;       // p_1..p_K
  std::vector<double> cum_rate_;    // poissonized: A_j = t sum_{i<j} p_i, size K+1
  std::vector<double> exp_neg_mu_;  // poissonized: e^{-t p_j}
  std::vector<double> cond_q_;      // fixed-n: p_j / (1 - sum_{i<j} p_i)
  std::vector<double> log_no_hit_;  // fixed-n: T_j = sum_{i<j} log(1 - cond_q_i), size K+1
};

struct SimConfig {
  Scheme scheme = Scheme::poissonized;
  double size = 1.0;                // n (integral) or t
  std::uint64_t replicates = 1000;
  int r_cap = 32;
  std::vector<int> r_set = {1, 2};  // standardized components
  std::uint64_t seed = 0;
  bool retain_standardized = true;
  int threads = 0;
};

struct SimResult {
  SimConfig config;
  std::vector<double> phi;            // standardization means, per r_set entry
  std::vector<double> var;            // standardization variances
  std::vector<double> mean_std;       // empirical mean of standardized vectors
  std::vector<double> cov_std;        // m x m empirical covariance
  std::vector<double> raw_mean;       // mean of counts[r], r = 0..r_cap (0 unused)
  double mean_total_balls = 0;
  double var_total_balls = 0;
  std::uint64_t conservation_failures = 0;
  std::vector<double> standardized;   // replicate-major, m per replicate (optional)
};

/// Replicated sampling with standardization against the exact Poissonized
/// moments at the configured size. Deterministic for a fixed config and
/// seed: chunk partials are reduced in replicate order.
SimResult monte_carlo(const FrequencyView& view, const SimConfig& config);

}  // namespace occlab
