#include "doctest.h"
#include "occlab/depoisson.hpp"

#include <cmath>

using namespace occlab;

namespace {

// oracle: direct scan of the defining inequality
std::uint64_t oracle_k(const FrequencyView& v, std::uint64_t n) {
  std::uint64_t k = 1;
  while (!(v.finite_support() && k + 1 > v.support_size()) &&
         20.0 * std::log(double(k + 1)) <= double(n) * v.prob(k + 1)) {
    ++k;
  }
  return k;
}

}  // namespace

TEST_CASE("choose_k golden values and oracle") {
  FrequencyView pl(FrequencySpec::power_law(2.0));
  CHECK(choose_k(pl, 1000000) == 82);
  CHECK(choose_k(pl, 1000000) == oracle_k(pl, 1000000));
  FrequencyView geo(FrequencySpec::geometric(0.5));
  CHECK(choose_k(geo, 1000000) == 14);
  CHECK(choose_k(geo, 1000000) == oracle_k(geo, 1000000));
  FrequencyView se(FrequencySpec::stretched_exp(0.5));
  CHECK(choose_k(se, 100000) == oracle_k(se, 100000));
}

TEST_CASE("choose_k monotone in n") {
  for (const auto& spec : {FrequencySpec::power_law(2.0), FrequencySpec::geometric(0.5),
                           FrequencySpec::stretched_exp(0.5)}) {
    FrequencyView v(spec);
    std::uint64_t prev = 0;
    for (std::uint64_t n : {std::uint64_t(10), std::uint64_t(1000), std::uint64_t(100000),
                            std::uint64_t(10000000)}) {
      std::uint64_t k = choose_k(v, n);
      CHECK(k >= prev);
      CHECK(choose_k(v, 2 * n) >= k);
      prev = k;
    }
  }
}

TEST_CASE("the chosen k satisfies both rule consequences") {
  for (const auto& spec : {FrequencySpec::power_law(2.0), FrequencySpec::geometric(0.5)}) {
    FrequencyView v(spec);
    for (std::uint64_t n : {std::uint64_t(100), std::uint64_t(10000), std::uint64_t(1000000)}) {
      std::uint64_t k = choose_k(v, n);
      double npk = double(n) * v.prob(k);
      CHECK(npk >= 20.0 * std::log(double(k)) - 1e-9);
      CHECK(double(k) * std::exp(-npk / 10.0) <= 1.0 / double(k) + 1e-12);
    }
  }
}

TEST_CASE("tv_bound assembly and applicability") {
  FrequencyView pl(FrequencySpec::power_law(2.0));
  DepoissonBound b = tv_bound(pl, 1000000, 3);
  CHECK(b.k == 82);
  CHECK(b.applicable);  // 3 <= n p_82 / 2 = 45.2
  // pi_k bound for the power law is c/k
  CHECK(b.pi_k == doctest::Approx(0.60792710185402663 / 82.0).epsilon(1e-12));
  CHECK(b.bound ==
        doctest::Approx(b.pi_k + 2.0 * 82.0 * std::exp(-1e6 * b.p_k / 10.0)).epsilon(1e-12));
  CHECK(b.bound == doctest::Approx(0.026837).epsilon(1e-3));
  CHECK(b.bound < 0.1);

  // precondition violation path: m far above n p_k / 2
  DepoissonBound bad = tv_bound(pl, 100, 50);
  CHECK_FALSE(bad.applicable);
  CHECK(bad.bound > 0.0);
}

TEST_CASE("bound decreases along a doubling sequence") {
  FrequencyView pl(FrequencySpec::power_law(2.0));
  CHECK(tv_bound(pl, 200000, 3).bound < tv_bound(pl, 100000, 3).bound);
  CHECK(tv_bound(pl, 2000000, 3).bound < tv_bound(pl, 1000000, 3).bound);
  FrequencyView se(FrequencySpec::stretched_exp(0.5));
  CHECK(tv_bound(se, 2000000, 3).bound < tv_bound(se, 1000000, 3).bound);
}

TEST_CASE("finite support caps k") {
  FrequencyView ex(FrequencySpec::explicit_list({0.5, 0.3, 0.2}));
  DepoissonBound b = tv_bound(ex, 1000000, 1);
  CHECK(b.k == 3);
  CHECK(b.support_capped);
  CHECK(b.pi_k == 0.0);
}
