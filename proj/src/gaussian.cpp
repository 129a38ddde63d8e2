#include "occlab/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "occlab/numerics.hpp"

namespace occlab {

std::vector<double> standardize(const CountVector& counts, const std::vector<int>& r_set,
                                const std::vector<double>& phi_r,
                                const std::vector<double>& var_r) {
  if (r_set.size() != phi_r.size() || r_set.size() != var_r.size())
    throw std::invalid_argument("standardize: moment vectors must match r_set");
  std::vector<double> out(r_set.size());
  for (std::size_t i = 0; i < r_set.size(); ++i) {
    int r = r_set[i];
    if (r < 1 || r > counts.r_cap())
      throw std::invalid_argument("standardize: r outside the tallied range");
    if (!(var_r[i] > 1e-12))
      throw std::domain_error("degenerate variance for r = " + std::to_string(r));
    out[i] = (double(counts.counts[r]) - phi_r[i]) / std::sqrt(var_r[i]);
  }
  return out;
}

BentkusBound bentkus_bound(const FrequencyView& view, const std::vector<int>& r_set, double t,
                           const EvalOptions& opt) {
  if (r_set.empty()) throw std::invalid_argument("bentkus_bound: empty index set");
  BentkusBound out;
  out.r_set = r_set;
  out.t = t;
  out.q_rm = poisson_one_upper_tail(r_set.back());
  out.c_R = std::min(kInvE, out.q_rm);
  double min_v = std::numeric_limits<double>::infinity();
  for (int r : r_set) {
    MomentValue v = variance(view, r, t, opt);
    if (!(v.value > 1e-12))
      throw std::domain_error("degenerate variance for r = " + std::to_string(r));
    min_v = std::min(min_v, v.value);
  }
  out.min_variance = min_v;
  double m = double(r_set.size());
  out.beta_bound = std::pow(m / out.c_R, 1.5) / std::sqrt(min_v);
  return out;
}

double ks_statistic_normal(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic_normal: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    // empirical CDF at the midpoint of the jump across the tied block
    double mid = (double(i) + double(j)) / (2.0 * n);
    d = std::max(d, std::abs(mid - normal_cdf(samples[i])));
    i = j;
  }
  return d;
}

NormalityReport normality_diagnostics(const SimResult& sim, const CovMatrix& target,
                                      const NormalityThresholds& thresholds) {
  const std::size_t m = sim.config.r_set.size();
  if (target.r_set != sim.config.r_set)
    throw std::invalid_argument("normality_diagnostics: target index set mismatch");
  if (sim.standardized.size() != sim.config.replicates * m)
    throw std::invalid_argument("normality_diagnostics: standardized vectors were not retained");

  NormalityReport rep;
  rep.thresholds = thresholds;
  rep.replicates = sim.config.replicates;
  rep.ks_marginal.resize(m);
  std::vector<double> marginal(sim.config.replicates);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::uint64_t k = 0; k < sim.config.replicates; ++k)
      marginal[k] = sim.standardized[k * m + i];
    rep.ks_marginal[i] = ks_statistic_normal(marginal);
  }
  for (std::size_t i = 0; i < m * m; ++i)
    rep.max_cov_deviation =
        std::max(rep.max_cov_deviation, std::abs(sim.cov_std[i] - target.sigma[i]));
  bool ok = rep.max_cov_deviation < thresholds.cov_dev;
  for (double ks : rep.ks_marginal) ok = ok && ks < thresholds.ks;
  rep.pass = ok;
  return rep;
}

}  // namespace occlab
