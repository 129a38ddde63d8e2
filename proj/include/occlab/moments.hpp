#pragma once
// Certified evaluation of the Poissonized moment functionals: expected
// r-counts Phi_r(t), variances V_r(t), covariances C_rs(t), standardized
// correlation matrices, the occupied-box mean and variance, and the exact
// fixed-n binomial cross-check. Every value carries an absolute truncation
// certificate; float rounding is budgeted separately at 1e-12 relative.

#include <cstdint>
#include <vector>

#include "occlab/frequencies.hpp"

namespace occlab {

struct MomentValue {
  double value = 0;
  double cert = 0;          // absolute truncation-error bound
  bool capped = false;      // term cap hit before the tolerance was met
  std::uint64_t terms = 0;  // summand evaluations spent
};

struct EvalOptions {
  double tol = 1e-9;            // absolute tolerance target
  double rel_tol = 0;           // optional relative target (0 = off)
  std::uint64_t max_terms = 100'000'000;
};

/// Phi_r(t) = sum_j e^{-t p_j} (t p_j)^r / r!
MomentValue phi(const FrequencyView& view, int r, double t, const EvalOptions& opt = {});

/// Phi_r at t = 2^log2_t for block views; value reported in log2 scale as
/// well since deep-block peaks overflow doubles.
struct BlockPhi {
  double log2_value;  // -inf when the sum is zero
  MomentValue linear; // exp2(log2_value), +inf past the double range
};
BlockPhi phi_blocks_log2t(const FrequencyView& view, int r, double log2_t,
                          const EvalOptions& opt = {});

/// Phi(t) = sum_j (1 - e^{-t p_j}), the occupied-box mean.
MomentValue phi_occupied(const FrequencyView& view, double t, const EvalOptions& opt = {});

/// Var of the occupied count: sum_j u_j (1 - u_j), u_j = 1 - e^{-t p_j}.
MomentValue occupied_variance(const FrequencyView& view, double t, const EvalOptions& opt = {});

/// V_r(t) via the direct Bernoulli form sum_j p_{j,r}(1 - p_{j,r}); the
/// binomial-identity route is evaluated alongside and must agree within the
/// combined certificates.
MomentValue variance(const FrequencyView& view, int r, double t, const EvalOptions& opt = {});

/// C_rs(t) = -2^{-r-s} C(r+s, r) Phi_{r+s}(2t), r != s. Always nonpositive.
MomentValue covariance(const FrequencyView& view, int r, int s, double t,
                       const EvalOptions& opt = {});

/// E X_{n,r} = sum_j C(n,r) p_j^r (1-p_j)^{n-r}, certified truncation.
MomentValue binomial_mean(const FrequencyView& view, std::uint64_t n, int r,
                          const EvalOptions& opt = {});

struct CovMatrix {
  std::vector<int> r_set;      // strictly increasing, >= 1
  double t = 0;
  std::vector<double> sigma;   // m x m row-major; unit diagonal
  double entry_cert = 0;       // worst absolute certificate over entries
  double eigen_floor = 0;      // c_R = min(1/e, P(Poisson(1) >= r_m + 1))
  double min_eigenvalue = 0;
};

/// Correlation matrix of the standardized counts (Y'_r, r in r_set).
CovMatrix corr_matrix(const FrequencyView& view, const std::vector<int>& r_set, double t,
                      const EvalOptions& opt = {});

struct MomentEntry {
  double t = 0;
  int r = 0;
  double phi = 0, phi_cert = 0;
  double var = 0, var_cert = 0;
};
struct MomentPairEntry {
  double t = 0;
  int r = 0, s = 0;
  double cov = 0, cov_cert = 0;
  double corr = 0;
};
struct MomentTable {
  std::vector<int> r_set;
  std::vector<double> t_grid;
  std::vector<MomentEntry> entries;      // grid-major, then r
  std::vector<MomentPairEntry> pairs;    // r < s
};

MomentTable tabulate_moments(const FrequencyView& view, const std::vector<int>& r_set,
                             const std::vector<double>& t_grid, const EvalOptions& opt = {},
                             bool with_pairs = false, int threads = 0);

}  // namespace occlab
