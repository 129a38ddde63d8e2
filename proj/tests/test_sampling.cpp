#include "doctest.h"
#include "occlab/sampling.hpp"
#include "occlab/moments.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <algorithm>
#include <vector>

using namespace occlab;

namespace {

bool same_counts(const CountVector& a, const CountVector& b) {
  return a.counts == b.counts && a.occupied == b.occupied && a.total_balls == b.total_balls &&
         a.overflow_balls == b.overflow_balls;
}

}  // namespace

TEST_CASE("replicates are reproducible and seed-sensitive") {
  FrequencyView pl(FrequencySpec::power_law(2.0));
  for (Scheme scheme : {Scheme::poissonized, Scheme::fixed_n}) {
    Sampler s(pl, scheme, 200.0, 32);
    bool any_diff = false;
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
      CountVector a = s.sample(9, rep);
      CountVector b = s.sample(9, rep);
      CHECK(same_counts(a, b));
      if (!same_counts(a, s.sample(10, rep))) any_diff = true;
    }
    CHECK(any_diff);
  }
}

TEST_CASE("fixed-n conservation is exact in every replicate") {
  for (const auto& spec :
       {FrequencySpec::geometric(0.5), FrequencySpec::power_law(2.0),
        FrequencySpec::stretched_exp(0.5), FrequencySpec::poisson_weights(1.0),
        FrequencySpec::blocks(BlockRule::bgy_ex2), FrequencySpec::explicit_list({0.5, 0.3, 0.2})}) {
    FrequencyView v(spec);
    Sampler s(v, Scheme::fixed_n, 100.0, 32);
    for (std::uint64_t rep = 0; rep < 400; ++rep) {
      CountVector cv = s.sample(11, rep);
      CHECK(cv.ball_check() == 100);
      CHECK(cv.total_balls == 100);
      std::uint64_t occ = cv.overflow_boxes;
      for (std::size_t r = 1; r < cv.counts.size(); ++r) occ += cv.counts[r];
      CHECK(occ == cv.occupied);
    }
  }
}

TEST_CASE("n = 1 occupies exactly one box") {
  FrequencyView geo(FrequencySpec::geometric(0.5));
  Sampler s(geo, Scheme::fixed_n, 1.0, 8);
  for (std::uint64_t rep = 0; rep < 64; ++rep) {
    CountVector cv = s.sample(3, rep);
    CHECK(cv.counts[1] == 1);
    CHECK(cv.occupied == 1);
  }
}

TEST_CASE("poissonized totals follow the poisson law") {
  FrequencyView pl(FrequencySpec::power_law(2.0));
  const double t = 100.0;
  Sampler s(pl, Scheme::poissonized, t, 32);
  const int reps = 30000;
  double sum = 0, sumsq = 0;
  for (int rep = 0; rep < reps; ++rep) {
    CountVector cv = s.sample(21, rep);
    CHECK(cv.ball_check() == cv.total_balls);
    sum += double(cv.total_balls);
    sumsq += double(cv.total_balls) * double(cv.total_balls);
  }
  double mean = sum / reps, var = sumsq / reps - mean * mean;
  CHECK(std::abs(mean - t) < 4.0 * std::sqrt(t / reps));
  CHECK(std::abs(var - t) < 4.5 * std::sqrt(2.0 * t * t + t) / std::sqrt(double(reps)));
}

TEST_CASE("single unit box: counts[1] frequency is e^{-1}") {
  FrequencyView one(FrequencySpec::explicit_list({1.0}));
  Sampler s(one, Scheme::poissonized, 1.0, 8);
  const int reps = 100000;
  int hits = 0;
  for (int rep = 0; rep < reps; ++rep) hits += s.sample(5, rep).counts[1] == 1;
  double p = std::exp(-1.0);
  double se = std::sqrt(p * (1 - p) / reps);
  CHECK(std::abs(double(hits) / reps - p) < 4.0 * se);
}

TEST_CASE("exact multinomial law on a small explicit view") {
  // full enumeration oracle for n = 3 balls in boxes (0.5, 0.3, 0.2):
  // outcomes keyed by the sorted occupancy pattern
  FrequencyView ex(FrequencySpec::explicit_list({0.5, 0.3, 0.2}));
  const int n = 3;
  std::map<std::vector<int>, double> expected;
  double probs[3] = {0.5, 0.3, 0.2};
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; a + b <= n; ++b) {
      int cidx = n - a - b;
      double coeff = std::tgamma(n + 1.0) /
                     (std::tgamma(a + 1.0) * std::tgamma(b + 1.0) * std::tgamma(cidx + 1.0));
      double pr = coeff * std::pow(probs[0], a) * std::pow(probs[1], b) * std::pow(probs[2], cidx);
      std::vector<int> key = {a, b, cidx};
      std::sort(key.begin(), key.end());
      expected[key] += pr;
    }
  }
  Sampler s(ex, Scheme::fixed_n, double(n), 8);
  std::map<std::vector<int>, int> seen;
  const int reps = 100000;
  for (int rep = 0; rep < reps; ++rep) {
    CountVector cv = s.sample(31, rep);
    // reconstruct the sorted ball-count pattern from the r-counts
    std::vector<int> key;
    for (int r = int(cv.counts.size()) - 1; r >= 1; --r)
      for (std::uint64_t k = 0; k < cv.counts[r]; ++k) key.push_back(r);
    while (key.size() < 3) key.push_back(0);
    std::sort(key.begin(), key.end());
    seen[key]++;
  }
  for (const auto& [key, pr] : expected) {
    double emp = double(seen[key]) / reps;
    double se = std::sqrt(pr * (1 - pr) / reps);
    CHECK(std::abs(emp - pr) < 4.0 * se + 1e-12);
  }
}

TEST_CASE("two equal boxes, two balls: split probability one half") {
  FrequencyView ex(FrequencySpec::explicit_list({0.5, 0.5}));
  Sampler s(ex, Scheme::fixed_n, 2.0, 8);
  const int reps = 100000;
  int split = 0;
  for (int rep = 0; rep < reps; ++rep) split += s.sample(17, rep).counts[1] == 2;
  double se = std::sqrt(0.25 / reps);
  CHECK(std::abs(double(split) / reps - 0.5) < 4.0 * se);
}

TEST_CASE("two-box independence under poissonization") {
  // P(both boxes hold exactly one ball) factorizes
  FrequencyView ex(FrequencySpec::explicit_list({0.5, 0.5}));
  Sampler s(ex, Scheme::poissonized, 2.0, 8);
  const int reps = 100000;
  int both = 0;
  for (int rep = 0; rep < reps; ++rep) both += s.sample(23, rep).counts[1] == 2;
  double p1 = std::exp(-1.0);  // each box is Poisson(1)
  double pr = p1 * p1;
  double se = std::sqrt(pr * (1 - pr) / reps);
  CHECK(std::abs(double(both) / reps - pr) < 4.0 * se);
}

TEST_CASE("replicate means track the exact moments") {
  FrequencyView pl(FrequencySpec::power_law(2.0));
  SimConfig cfg;
  cfg.scheme = Scheme::poissonized;
  cfg.size = 1000.0;
  cfg.replicates = 20000;
  cfg.r_set = {1, 2, 3};
  cfg.seed = 77;
  cfg.retain_standardized = false;
  SimResult res = monte_carlo(pl, cfg);
  for (int i = 0; i < 3; ++i) {
    int r = cfg.r_set[i];
    double se = std::sqrt(res.var[i] / double(cfg.replicates));
    CHECK(std::abs(res.raw_mean[r] - res.phi[i]) < 4.0 * se);
    // standardized means are ~0 at 4 standard errors
    CHECK(std::abs(res.mean_std[i]) < 4.0 / std::sqrt(double(cfg.replicates)));
  }
  CHECK(res.conservation_failures == 0);

  SimConfig fx = cfg;
  fx.scheme = Scheme::fixed_n;
  fx.replicates = 20000;
  SimResult rf = monte_carlo(pl, fx);
  MomentValue bm = binomial_mean(pl, 1000, 1, {1e-6});
  double se1 = std::sqrt(rf.var[0] / double(fx.replicates));
  CHECK(std::abs(rf.raw_mean[1] - bm.value) < 4.0 * se1);
  CHECK(rf.conservation_failures == 0);
}

TEST_CASE("monte carlo is bit-stable across thread counts") {
  FrequencyView pl(FrequencySpec::power_law(2.0));
  SimConfig cfg;
  cfg.scheme = Scheme::poissonized;
  cfg.size = 64.0;
  cfg.replicates = 5000;
  cfg.r_set = {1, 2};
  cfg.seed = 123;
  cfg.threads = 1;
  SimResult a = monte_carlo(pl, cfg);
  cfg.threads = 4;
  SimResult b = monte_carlo(pl, cfg);
  CHECK(a.mean_std == b.mean_std);
  CHECK(a.cov_std == b.cov_std);
  CHECK(a.raw_mean == b.raw_mean);
  CHECK(a.standardized == b.standardized);
}

TEST_CASE("subprobability views sample only under poissonization") {
  FrequencySpec sub = FrequencySpec::explicit_list({0.5, 0.25}, true);
  FrequencyView v(sub);
  CHECK_THROWS_AS(Sampler(v, Scheme::fixed_n, 10.0, 8), std::invalid_argument);
  Sampler s(v, Scheme::poissonized, 40.0, 8);
  const int reps = 20000;
  double sum = 0;
  for (int rep = 0; rep < reps; ++rep) sum += double(s.sample(3, rep).total_balls);
  double mean = sum / reps;  // Poisson(t * 0.75)
  CHECK(std::abs(mean - 30.0) < 4.0 * std::sqrt(30.0 / reps));
}

TEST_CASE("overflow bucket keeps the ball identity exact") {
  FrequencyView geo(FrequencySpec::geometric(0.5));
  Sampler s(geo, Scheme::fixed_n, 500.0, 4);  // box 1 holds ~250 balls, far over r_cap
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    CountVector cv = s.sample(13, rep);
    CHECK(cv.overflow_boxes >= 1);
    CHECK(cv.ball_check() == 500);
  }
}

TEST_CASE("degenerate variance is rejected with the offending r") {
  FrequencyView one(FrequencySpec::explicit_list({1.0}));
  SimConfig cfg;
  cfg.scheme = Scheme::poissonized;
  cfg.size = 1e9;
  cfg.replicates = 10;
  cfg.r_set = {1};
  try {
    monte_carlo(one, cfg);
    CHECK(false);
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("r = 1") != std::string::npos);
  }
}
