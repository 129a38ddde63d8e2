#pragma once
// Asymptotic-regime diagnostics over geometric t-grids: variance-growth
// regime classification, frequency-ratio and power-tail evidence, dyadic
// profiles, regular-variation index estimation from moment ratios, the
// closed-form limiting covariance matrices, and the correlation-convergence
// scan.

#include <cstdint>
#include <vector>

#include "occlab/frequencies.hpp"
#include "occlab/moments.hpp"

namespace occlab {

struct DyadicProfile {
  std::vector<std::uint64_t> counts;  // counts[j] = #{l : 2^{-(j+1)} < p_l <= 2^{-j}}
  bool saturated = false;             // ran past the addressable index range
};

/// Exact counts by monotone search on p_j, for j = 0..j_max.
DyadicProfile dyadic_profile(const FrequencyView& view, int j_max);

enum class RatioTrend { to_one, constant_below_one, to_zero, oscillating };

struct RatioScanResult {
  int h = 1;
  std::uint64_t j_lo = 1, j_hi = 1;
  double min = 0, max = 0;
  double last_quarter_min = 0, last_quarter_max = 0;
  RatioTrend trend = RatioTrend::oscillating;
};

/// p_{j+h}/p_j over a contiguous window; the trend is classified on the last
/// quarter of the window.
RatioScanResult ratio_scan(const FrequencyView& view, int h, std::uint64_t j_lo,
                           std::uint64_t j_hi);

struct RegimeThresholds {
  double high = 10.0;       // window infimum above this counts as divergent
  double low = 2.0;         // window supremum below this counts as bounded
  double osc_ratio = 4.0;   // sup/inf beyond this flags oscillation
  double osc_floor = 0.5;   // oscillation also needs the sup above this
  double window_frac = 0.25;
  double eval_rel_tol = 1e-2;
};

enum class RegimeVerdict { regime1, regime2, regime3, regime4, inconclusive };

struct RegimeEvidence {
  int r = 1;
  double window_inf = 0, window_sup = 0;
  bool growing = false, bounded = false, oscillating = false;
};

struct RhoProbe {
  std::uint64_t j = 1;
  double value = 0;
};

struct RegimeReport {
  RegimeVerdict verdict = RegimeVerdict::inconclusive;
  int r0 = 0;  // meaningful for regime2
  std::vector<RegimeEvidence> evidence;
  std::vector<double> t_grid;
  std::vector<std::vector<double>> phi_series;  // [r-1][grid]
  std::vector<RatioScanResult> ratio_evidence;  // h = 1..h_max
  std::vector<std::vector<RhoProbe>> rho_evidence;  // per r
  RegimeThresholds thresholds;
};

RegimeReport classify_regime(const FrequencyView& view, int r_max,
                             const std::vector<double>& t_grid,
                             const RegimeThresholds& thresholds = {});

struct AlphaEstimate {
  int r = 1;
  std::vector<double> ratios;  // Phi_{r+1}(t)/Phi_r(t) along the grid
  double c_hat = 0;            // median over the last quarter
  double alpha_hat = 0;        // r - c (r+1)
  bool c_in_range = false;     // c in [(r-1)/(r+1), r/(r+1)]
  bool converged = false;
  double oscillation = 0;      // relative spread over the last half
};

AlphaEstimate estimate_alpha(const FrequencyView& view, int r, const std::vector<double>& t_grid,
                             double converge_tol = 0.05);

enum class LimitCase { proper, slow_variation, index_one };

struct LimitCovariance {
  LimitCase kase = LimitCase::proper;
  double alpha = 0;
  std::vector<int> r_set;
  std::vector<double> S;     // raw limiting covariance, m x m
  std::vector<double> corr;  // S_rs / sqrt(S_rr S_ss)
  bool y1_decoupled = false;  // index-one case: the r = 1 row/column is zero
  double min_eigenvalue = 0;  // over the non-degenerate block
};

/// Closed-form limiting covariance matrices for the three regular-variation
/// cases. alpha is only consulted for the proper case (0 < alpha < 1).
LimitCovariance limit_covariance(LimitCase kase, double alpha, const std::vector<int>& r_set);

enum class ScanVerdict { converged, oscillating, inconclusive };

struct SigmaScanEntry {
  int r = 1, s = 2;
  std::vector<double> sigma;  // per grid point; NaN where a variance degenerated
  ScanVerdict verdict = ScanVerdict::inconclusive;
  double limit = 0;       // median over the last half
  double amplitude = 0;   // max - min over the last half
  int skipped = 0;
};

struct ScanOptions {
  double conv_tol = 0.01;
  double osc_tol = 0.1;
  double eval_rel_tol = 1e-3;
  bool include_one_pairs = true;  // add (1, s) for s <= 5
  int threads = 0;
};

struct SigmaScan {
  std::vector<double> t_grid;
  std::vector<SigmaScanEntry> pairs;
  ScanOptions options;
};

/// Correlation series Sigma_rs(t) for every pair with 2 <= r < s and
/// r + s <= 12 (plus the (1, s) pairs when requested), with a convergence
/// verdict per pair.
SigmaScan sigma_convergence_scan(const FrequencyView& view, const std::vector<double>& t_grid,
                                 const ScanOptions& options = {});

}  // namespace occlab
