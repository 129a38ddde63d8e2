#include "doctest.h"
#include "occlab/gaussian.hpp"
#include "occlab/rng.hpp"
#include "occlab/numerics.hpp"

#include <stdexcept>
#include <string>

#include <cmath>
#include <vector>

using namespace occlab;

namespace {

// Box-Muller normals from a philox stream, for synthetic null cases
std::vector<double> normal_draws(std::uint64_t seed, std::size_t n) {
  RngStream g(seed, 0);
  std::vector<double> out;
  out.reserve(n + 1);
  while (out.size() < n) {
    double u1 = g.uniform(), u2 = g.uniform();
    if (u1 <= 0.0) continue;
    double rho = std::sqrt(-2.0 * std::log(1.0 - u1));
    out.push_back(rho * std::cos(2.0 * M_PI * u2));
    out.push_back(rho * std::sin(2.0 * M_PI * u2));
  }
  out.resize(n);
  return out;
}

}  // namespace

TEST_CASE("standardize") {
  CountVector cv;
  cv.counts.assign(9, 0);
  cv.counts[1] = 1;
  // counts equal to the mean standardize to zero
  auto zero = standardize(cv, {1}, {1.0}, {4.0});
  CHECK(zero[0] == 0.0);

  // single unit box at t = 1: (1 - e^{-1}) / sqrt(e^{-1}(1 - e^{-1}))
  double e1 = std::exp(-1.0);
  auto v = standardize(cv, {1}, {e1}, {e1 * (1 - e1)});
  // = sqrt(e - 1)
  double expect = (1.0 - e1) / std::sqrt(e1 * (1.0 - e1));
  CHECK(v[0] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(v[0] == doctest::Approx(1.3108324944320617).epsilon(1e-12));

  // degenerate variance names the offending r
  try {
    standardize(cv, {1}, {e1}, {0.0});
    CHECK(false);
  } catch (const std::domain_error& err) {
    CHECK(std::string(err.what()).find("r = 1") != std::string::npos);
  }
}

TEST_CASE("bentkus bound fields") {
  FrequencyView pl(FrequencySpec::power_law(2.0));
  BentkusBound b1 = bentkus_bound(pl, {1}, 100.0);
  // q(1) = 1 - 2/e < 1/e, so the floor comes from the Poisson tail
  CHECK(b1.q_rm == doctest::Approx(0.26424111765711533).epsilon(1e-12));
  CHECK(b1.c_R == doctest::Approx(0.26424111765711533).epsilon(1e-12));

  BentkusBound b = bentkus_bound(pl, {1, 2}, 100.0);
  CHECK(b.beta_bound ==
        doctest::Approx(std::pow(2.0 / b.c_R, 1.5) / std::sqrt(b.min_variance)).epsilon(1e-12));
  // formula homogeneity: the bound scales as the inverse root of min variance
  double scaled = std::pow(2.0 / b.c_R, 1.5) / std::sqrt(2.0 * b.min_variance);
  CHECK(b.beta_bound / scaled == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  // decreasing along a doubling t-grid for a divergent-variance family
  double prev = bentkus_bound(pl, {1, 2}, 100.0).beta_bound;
  for (double t : {200.0, 400.0, 800.0, 1600.0}) {
    double cur = bentkus_bound(pl, {1, 2}, t).beta_bound;
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("ks statistic on lattice and continuous data") {
  // three distinct points: midpoint CDF is (i + 1/2)/3
  std::vector<double> pts = {-1.0, 0.0, 1.0};
  double d = ks_statistic_normal(pts);
  double expect = 0.0;
  double mids[3] = {0.5 / 3, 1.5 / 3, 2.5 / 3};
  for (int i = 0; i < 3; ++i)
    expect = std::max(expect, std::abs(mids[i] - normal_cdf(pts[i])));
  CHECK(d == doctest::Approx(expect).epsilon(1e-14));

  // ties collapse into one midpoint comparison
  std::vector<double> tied = {0.0, 0.0, 0.0, 0.0};
  CHECK(ks_statistic_normal(tied) == doctest::Approx(0.0).epsilon(1e-14));

  // synthetic standard normal sample passes at the usual threshold
  CHECK(ks_statistic_normal(normal_draws(99, 10000)) < 0.02);
}

TEST_CASE("normality diagnostics null case") {
  const std::size_t n = 10000;
  SimResult sim;
  sim.config.r_set = {1, 2};
  sim.config.replicates = n;
  auto a = normal_draws(5, n), b = normal_draws(6, n);
  sim.standardized.resize(2 * n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sim.standardized[2 * i] = a[i];
    sim.standardized[2 * i + 1] = b[i];
    sxx += a[i] * a[i];
    syy += b[i] * b[i];
    sxy += a[i] * b[i];
  }
  sim.cov_std = {sxx / n, sxy / n, sxy / n, syy / n};

  CovMatrix target;
  target.r_set = {1, 2};
  target.sigma = {1.0, 0.0, 0.0, 1.0};
  NormalityReport rep = normality_diagnostics(sim, target);
  CHECK(rep.ks_marginal.size() == 2);
  CHECK(rep.ks_marginal[0] < 0.02);
  CHECK(rep.ks_marginal[1] < 0.02);
  CHECK(rep.max_cov_deviation < 0.03);
  CHECK(rep.pass);

  CovMatrix wrong = target;
  wrong.sigma = {1.0, 0.8, 0.8, 1.0};
  CHECK_FALSE(normality_diagnostics(sim, wrong).pass);

  CovMatrix mismatched = target;
  mismatched.r_set = {1, 3};
  CHECK_THROWS_AS(normality_diagnostics(sim, mismatched), std::invalid_argument);
}
