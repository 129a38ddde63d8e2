#include "doctest.h"
#include "occlab/moments.hpp"
#include "occlab/numerics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace occlab;

namespace {

struct OracleValue {
  double value;
  double remainder;  // bound on what the truncated oracle itself misses
};

// independent oracle: direct term-by-term summation over boxes
OracleValue oracle_phi_full(const FrequencyView& v, int r, double t,
                            std::uint64_t max_j = 20'000'000) {
  KahanSum s;
  std::uint64_t j = 1;
  for (; j <= max_j; ++j) {
    if (v.finite_support() && j > v.support_size()) break;
    double lx = std::log(t) + v.log_prob(j);
    double lw = log_poisson_pmf_from_log(lx, r);
    double w = lw < -745.0 ? 0.0 : std::exp(lw);
    s.add(w);
    if (w < 1e-18 * (s.value() + 1e-300) && j > 64) break;
  }
  double rem = 0.0;
  if (!v.finite_support()) {
    double lb = r * std::log(t) - log_factorial(r) + std::log(v.tail_bound(j - 1, r).value);
    rem = lb < -700.0 ? 0.0 : std::exp(lb);
  }
  return {s.value(), rem};
}

double oracle_phi(const FrequencyView& v, int r, double t, std::uint64_t max_j = 20'000'000) {
  return oracle_phi_full(v, r, t, max_j).value;
}

double oracle_var(const FrequencyView& v, int r, double t, std::uint64_t max_j = 50'000'000) {
  KahanSum s;
  for (std::uint64_t j = 1; j <= max_j; ++j) {
    if (v.finite_support() && j > v.support_size()) break;
    double lx = std::log(t) + v.log_prob(j);
    double lw = log_poisson_pmf_from_log(lx, r);
    double w = lw < -745.0 ? 0.0 : std::exp(lw);
    s.add(w * (1.0 - w));
    if (w < 1e-18 * (s.value() + 1e-300) && j > 64) break;
  }
  return s.value();
}

const double kE1 = std::exp(-1.0);

}  // namespace

TEST_CASE("phi basics") {
  FrequencyView one(FrequencySpec::explicit_list({1.0}));
  CHECK(phi(one, 1, 1.0).value == doctest::Approx(kE1).epsilon(1e-14));
  CHECK(phi(one, 1, 0.0).value == 0.0);
  FrequencyView geo(FrequencySpec::geometric(0.5));
  CHECK(phi(geo, 1, 0.0).value == 0.0);
  CHECK(phi(geo, 3, 0.0).cert == 0.0);
}

TEST_CASE("phi golden values and oracle agreement") {
  FrequencyView geo(FrequencySpec::geometric(0.5));
  MomentValue p = phi(geo, 1, 4.0);
  CHECK(p.value == doctest::Approx(1.3667561495323664).epsilon(1e-11));
  CHECK(p.cert <= 1e-9);
  CHECK(std::abs(p.value - oracle_phi(geo, 1, 4.0)) <= p.cert + 1e-11);

  FrequencyView pl(FrequencySpec::power_law(2.0));
  for (double t : {1.0, 100.0, 10000.0}) {
    for (int r : {1, 2, 5}) {
      MomentValue got = phi(pl, r, t, {1e-7, 0, 100'000'000});
      OracleValue ref = oracle_phi_full(pl, r, t);
      CHECK(std::abs(got.value - ref.value) <= got.cert + ref.remainder + 1e-9);
    }
  }

  FrequencyView se(FrequencySpec::stretched_exp(0.5));
  CHECK(phi(se, 2, 1000.0).value == doctest::Approx(oracle_phi(se, 2, 1000.0)).epsilon(1e-8));

  FrequencyView pw(FrequencySpec::poisson_weights(1.0));
  CHECK(phi(pw, 1, 10.0).value == doctest::Approx(oracle_phi(pw, 1, 10.0)).epsilon(1e-9));
}

TEST_CASE("phi certificate honesty across tolerances") {
  for (const auto& spec :
       {FrequencySpec::power_law(2.0), FrequencySpec::geometric(0.5),
        FrequencySpec::stretched_exp(0.5)}) {
    FrequencyView v(spec);
    for (double t : {8.0, 4096.0}) {
      MomentValue coarse = phi(v, 1, t, {1e-2});
      MomentValue fine = phi(v, 1, t, {1e-10});
      CHECK(std::abs(coarse.value - fine.value) <= coarse.cert + 1e-10);
      CHECK(coarse.cert <= 1e-2);
      CHECK(fine.value >= coarse.value);  // nonnegative terms: truncation undershoots
    }
  }
}

TEST_CASE("blocks phi via completion matches a block-level oracle") {
  FrequencyView fact(FrequencySpec::blocks(BlockRule::factorial));
  double t = 4.0;
  // block oracle: sum_i (i-2)! pmf(t/i!) to i = 170, then bracket the rest by
  // t/170 with a t^2 sum m q^2 correction window
  KahanSum s;
  double mq2 = 0;
  for (int i = 2; i <= 170; ++i) {
    double lm = std::lgamma(double(i) - 1.0);
    double lq = -std::lgamma(double(i) + 1.0);
    double lw = lm + log_poisson_pmf_from_log(std::log(t) + lq, 1);
    if (lw > -745.0) s.add(std::exp(lw));
    if (i > 20) mq2 += std::exp(lm + 2.0 * lq);
  }
  double lo = s.value() + t / 170.0 - t * t * mq2;
  double hi = s.value() + t / 170.0;
  MomentValue p = phi(fact, 1, t);
  CHECK_FALSE(p.capped);
  CHECK(p.cert <= 1e-9);
  CHECK(p.value >= lo - 1e-7);
  CHECK(p.value <= hi + 1e-7);

  FrequencyView karlin(FrequencySpec::blocks(BlockRule::karlin_ex1));
  for (double t2 : {10.0, 1e6}) {
    KahanSum o;
    for (const auto& b : karlin.blocks()) {
      double lw = b.log2_m * kLn2 +
                  log_poisson_pmf_from_log(std::log(t2) + b.log2_q * kLn2, 1);
      if (lw > -745.0) o.add(std::exp(lw));
    }
    MomentValue got = phi(karlin, 1, t2);
    CHECK(std::abs(got.value - o.value()) <= got.cert + 1e-10);
  }
}

TEST_CASE("log2-scale block phi handles non-representable t") {
  FrequencyView gen(FrequencySpec::blocks(BlockRule::gen_ex, 0.5, 1.0));
  // peak at t = 1/q_l for a deep block: value ~ m_l/(2e), far past double range
  const auto& blocks = gen.blocks();
  std::size_t l = blocks.size() - 2;
  BlockPhi bp = phi_blocks_log2t(gen, 2, -blocks[l].log2_q);
  CHECK(bp.log2_value > blocks[l].log2_m - 4.0);
  CHECK(std::isinf(bp.linear.value));
  // consistency with the double-t path where both apply
  BlockPhi small = phi_blocks_log2t(gen, 2, 10.0);
  MomentValue direct = phi(gen, 2, 1024.0);
  CHECK(small.linear.value == doctest::Approx(direct.value).epsilon(1e-10));
}

TEST_CASE("variance golden values and the sandwich") {
  FrequencyView one(FrequencySpec::explicit_list({1.0}));
  CHECK(variance(one, 1, 1.0).value == doctest::Approx(kE1 * (1 - kE1)).epsilon(1e-13));
  CHECK(variance(one, 1, 0.0).value == 0.0);

  FrequencyView geo(FrequencySpec::geometric(0.5));
  MomentValue v = variance(geo, 1, 4.0);
  CHECK(v.value == doctest::Approx(1.0114299454757039).epsilon(1e-10));
  CHECK(v.value == doctest::Approx(oracle_var(geo, 1, 4.0)).epsilon(1e-10));
  // V_1 > (1 - e^{-1}) Phi_1
  CHECK(v.value > (1.0 - kE1) * phi(geo, 1, 4.0).value);
}

TEST_CASE("sandwich property across families") {
  for (const auto& spec :
       {FrequencySpec::geometric(0.5), FrequencySpec::power_law(2.0),
        FrequencySpec::stretched_exp(0.5), FrequencySpec::poisson_weights(1.0),
        FrequencySpec::blocks(BlockRule::bgy_ex2)}) {
    FrequencyView view(spec);
    for (double t : {1.0, 16.0, 1024.0, 1048576.0}) {
      for (int r : {1, 2, 4}) {
        EvalOptions opt{1e-9, 1e-9, 100'000'000};
        MomentValue p = phi(view, r, t, opt);
        MomentValue v = variance(view, r, t, opt);
        if (p.value <= 1e-12) continue;
        double kr = 1.0 - std::exp(-double(r)) * std::pow(double(r), r) / factorial(r);
        double slack = p.cert + v.cert + 1e-9;
        CHECK(p.value + slack > v.value);
        CHECK(v.value + slack > kr * p.value);
      }
    }
  }
}

TEST_CASE("variance formula equivalence holds on block and heavy views") {
  // variance() asserts the doubled-argument identity internally
  for (const auto& spec :
       {FrequencySpec::blocks(BlockRule::karlin_ex1), FrequencySpec::blocks(BlockRule::factorial),
        FrequencySpec::power_law(1.5), FrequencySpec::explicit_list({0.5, 0.3, 0.2})}) {
    FrequencyView view(spec);
    for (double t : {0.5, 7.0, 300.0}) {
      CHECK_NOTHROW(variance(view, 1, t));
      CHECK_NOTHROW(variance(view, 3, t));
    }
  }
}

TEST_CASE("covariance") {
  FrequencyView one(FrequencySpec::explicit_list({1.0}));
  MomentValue c = covariance(one, 1, 2, 1.0);
  CHECK(c.value == doctest::Approx(-std::exp(-2.0) / 2.0).epsilon(1e-13));
  CHECK(covariance(one, 2, 1, 1.0).value == c.value);  // symmetry
  CHECK_THROWS_AS(covariance(one, 2, 2, 1.0), std::invalid_argument);

  FrequencyView pl(FrequencySpec::power_law(2.0));
  MomentValue cp = covariance(pl, 1, 2, 100.0, {1e-10});
  CHECK(cp.value == doctest::Approx(-0.4580828423935412).epsilon(1e-9));
  CHECK(cp.value < 0.0);
  // direct-product oracle: -sum_j p_{j,1} p_{j,2}
  KahanSum prod;
  for (std::uint64_t j = 1; j <= 2'000'000; ++j) {
    double x = 100.0 * pl.prob(j);
    prod.add(poisson_pmf(x, 1) * poisson_pmf(x, 2));
  }
  CHECK(cp.value == doctest::Approx(-prod.value()).epsilon(1e-9));
}

TEST_CASE("corr_matrix invariants") {
  FrequencyView pl(FrequencySpec::power_law(2.0));
  CovMatrix m = corr_matrix(pl, {1, 2}, 100.0);
  CHECK(m.sigma[0] == 1.0);
  CHECK(m.sigma[3] == 1.0);
  CHECK(m.sigma[1] == m.sigma[2]);
  CHECK(m.sigma[1] < 0.0);
  CHECK(m.sigma[1] > -1.0);
  // q(2) = 1 - e^{-1}(1 + 1 + 1/2)
  CHECK(m.eigen_floor == doctest::Approx(1.0 - 2.5 * kE1).epsilon(1e-12));
  CHECK(m.min_eigenvalue >= m.eigen_floor - 1e-9);

  CHECK_THROWS_AS(corr_matrix(pl, {2, 1}, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(corr_matrix(pl, {}, 100.0), std::invalid_argument);

  // single block of equal frequencies: the m-independent closed form
  //   Sigma_12 = -sqrt(p1 p2) / sqrt((1-p1)(1-p2)) at phi = t/m
  FrequencyView eq(FrequencySpec::explicit_list(std::vector<double>(16, 1.0 / 16.0)));
  CovMatrix s = corr_matrix(eq, {1, 2}, 16.0);  // phi = 1
  CHECK(s.sigma[1] == doctest::Approx(-0.36218415170766137).epsilon(1e-10));
}

TEST_CASE("degenerate variance is reported") {
  FrequencyView one(FrequencySpec::explicit_list({1.0}));
  // t so large that p_{1,1}(t) underflows
  CHECK_THROWS_AS(corr_matrix(one, {1, 2}, 1e9), std::domain_error);
}

TEST_CASE("binomial mean") {
  FrequencyView half(FrequencySpec::explicit_list({0.5, 0.5}));
  CHECK(binomial_mean(half, 2, 1).value == doctest::Approx(1.0).epsilon(1e-13));
  for (const auto& spec : {FrequencySpec::geometric(0.5), FrequencySpec::power_law(2.0)}) {
    FrequencyView v(spec);
    CHECK(binomial_mean(v, 1, 1).value == doctest::Approx(1.0).epsilon(1e-8));
  }
  FrequencyView pl(FrequencySpec::power_law(2.0));
  MomentValue bm = binomial_mean(pl, 10000, 1, {1e-3});
  MomentValue ph = phi(pl, 1, 10000.0, {1e-3});
  CHECK(bm.value == doctest::Approx(69.0996).epsilon(1e-3));
  CHECK(std::abs(bm.value - ph.value) < 0.01 * ph.value);
  CHECK_THROWS_AS(binomial_mean(pl, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(binomial_mean(pl, 10, 11), std::invalid_argument);
}

TEST_CASE("occupied mean and variance") {
  FrequencyView one(FrequencySpec::explicit_list({1.0}));
  CHECK(phi_occupied(one, 1.0).value == doctest::Approx(1.0 - kE1).epsilon(1e-13));
  FrequencyView halves(FrequencySpec::explicit_list({0.5, 0.5}));
  CHECK(phi_occupied(halves, 1e6).value == doctest::Approx(2.0).epsilon(1e-13));

  FrequencyView pl(FrequencySpec::power_law(2.0));
  MomentValue occ = phi_occupied(pl, 1e8, {1.0, 1e-6, 100'000'000});
  CHECK(occ.value == doctest::Approx(13819.265978852).epsilon(1e-4));
  // ~ sqrt(pi c t) at this scale
  CHECK(occ.value / 13819.765978853419 == doctest::Approx(1.0).epsilon(1e-3));

  // bracket: Phi_1(2t)/2 < V(t) < Phi_1(t)
  for (double t : {2.0, 64.0, 4096.0}) {
    double vt = occupied_variance(pl, t).value;
    CHECK(vt < phi(pl, 1, t).value);
    CHECK(vt > 0.5 * phi(pl, 1, 2.0 * t).value);
  }
}

TEST_CASE("doubling inequality on a small grid") {
  for (const auto& spec : {FrequencySpec::power_law(2.0), FrequencySpec::geometric(0.5)}) {
    FrequencyView view(spec);
    for (double t : {2.0, 32.0, 2048.0}) {
      for (int r = 2; r <= 6; ++r) {
        for (int s = 1; s < r; ++s) {
          double lhs = phi(view, s, t / 2.0, {1e-10, 1e-10}).value;
          double factor = std::pow(M_E / double(r - s), r - s) * factorial(r) /
                          (factorial(s) * std::pow(2.0, r));
          double rhs = phi(view, r, t, {1e-10, 1e-10}).value * factor;
          CHECK(lhs >= rhs - 1e-9);
        }
      }
    }
  }
}

TEST_CASE("derivative relation via central differences") {
  // (r-1)-th derivative of t^{-1} Phi_1(t) = (-1)^{r-1} r! t^{-r} Phi_r(t)
  for (const auto& spec : {FrequencySpec::geometric(0.5), FrequencySpec::power_law(2.0)}) {
    FrequencyView view(spec);
    double t = 8.0;
    EvalOptions opt{1e-13, 1e-13};
    auto f = [&](double u) { return phi(view, 1, u, opt).value / u; };
    double h = t * 1e-3;
    double d1 = (f(t + h) - f(t - h)) / (2.0 * h);
    double expect1 = -2.0 * phi(view, 2, t, opt).value / (t * t);
    CHECK(d1 == doctest::Approx(expect1).epsilon(1e-4));
    double h2 = t * 4e-3;
    double d2 = (f(t + h2) - 2.0 * f(t) + f(t - h2)) / (h2 * h2);
    double expect2 = 6.0 * phi(view, 3, t, opt).value / (t * t * t);
    CHECK(d2 == doctest::Approx(expect2).epsilon(1e-4));
  }
}

TEST_CASE("moment table layout") {
  FrequencyView geo(FrequencySpec::geometric(0.5));
  std::vector<double> grid = {1.0, 2.0, 4.0};
  MomentTable tab = tabulate_moments(geo, {1, 2}, grid, {}, true, 1);
  CHECK(tab.entries.size() == 6);
  CHECK(tab.pairs.size() == 3);
  CHECK(tab.entries[0].t == 1.0);
  CHECK(tab.entries[1].r == 2);
  for (const auto& e : tab.entries) {
    CHECK(e.var < e.phi);
    CHECK(e.var > 0.0);
  }
  for (const auto& p : tab.pairs) {
    CHECK(p.cov <= 0.0);
    CHECK(p.corr <= 0.0);
    CHECK(p.corr >= -1.0);
  }
}
