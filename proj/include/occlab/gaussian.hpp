#pragma once
// Standardization of count vectors, the explicit eigenvalue-floor error
// machinery for the multivariate normal approximation, and empirical
// normality diagnostics for simulation output.

#include <cstdint>
#include <vector>

#include "occlab/moments.hpp"
#include "occlab/sampling.hpp"

namespace occlab {

/// ((counts[r] - Phi_r) / sqrt(V_r))_{r in r_set}. The moments must be
/// evaluated at the CountVector's own n or t.
std::vector<double> standardize(const CountVector& counts, const std::vector<int>& r_set,
                                const std::vector<double>& phi_r,
                                const std::vector<double>& var_r);

struct BentkusBound {
  std::vector<int> r_set;
  double t = 0;
  double q_rm = 0;       // P(Poisson(1) >= r_m + 1)
  double c_R = 0;        // min(1/e, q_rm): eigenvalue floor of Sigma_R(t)
  double min_variance = 0;
  double beta_bound = 0;  // (m/c_R)^{3/2} / sqrt(min variance)
};

/// Rate object for the multivariate normal approximation error. The
/// universal prefactor of the underlying inequality is unknown, so this is
/// comparable across (R, t) but is not a numeric total-variation bound.
BentkusBound bentkus_bound(const FrequencyView& view, const std::vector<int>& r_set, double t,
                           const EvalOptions& opt = {});

struct NormalityThresholds {
  double ks = 0.02;
  double cov_dev = 0.03;
};

struct NormalityReport {
  std::vector<double> ks_marginal;
  double max_cov_deviation = 0;
  std::uint64_t replicates = 0;
  NormalityThresholds thresholds;
  bool pass = false;
};

/// Kolmogorov-Smirnov distance between a sample and the standard normal.
/// Counts take lattice values after standardization, so ties are compared
/// at the midpoint of the empirical jump (the continuity-corrected form);
/// for continuous samples this agrees with the classical statistic to 1/2n.
double ks_statistic_normal(std::vector<double> samples);

/// Marginal KS against N(0,1) plus the worst covariance deviation from the
/// target matrix. Requires retained standardized vectors in the SimResult.
NormalityReport normality_diagnostics(const SimResult& sim, const CovMatrix& target,
                                      const NormalityThresholds& thresholds = {});

}  // namespace occlab
