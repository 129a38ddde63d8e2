#include "doctest.h"
#include "occlab/rng.hpp"

#include <cmath>
#include <vector>

using namespace occlab;

TEST_CASE("philox streams are deterministic and keyed") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::vector<std::uint64_t> va, vb;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a.next_u64());
    vb.push_back(b.next_u64());
  }
  CHECK(va == vb);
  bool differs_stream = false, differs_seed = false;
  for (int i = 0; i < 64; ++i) {
    if (c.next_u64() != va[i]) differs_stream = true;
    if (d.next_u64() != va[i]) differs_seed = true;
  }
  CHECK(differs_stream);
  CHECK(differs_seed);
}

TEST_CASE("sections restart deterministically and never reuse counters") {
  RngStream a(1, 1);
  a.set_section(3);
  std::uint64_t first = a.next_u64();
  std::uint64_t second = a.next_u64();
  // revisiting the same section continues rather than restarting
  a.set_section(3);
  std::uint64_t third = a.next_u64();
  CHECK(first != second);
  CHECK(second != third);
  // a fresh stream visiting section 3 reproduces the same draws
  RngStream b(1, 1);
  b.set_section(3);
  CHECK(b.next_u64() == first);
}

TEST_CASE("uniforms look uniform") {
  RngStream g(2024, 0);
  const int n = 200000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    double u = g.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("poisson draws match their moments") {
  for (double mu : {0.3, 3.0, 50.0, 4000.0}) {
    RngStream g(5, std::uint64_t(mu * 100));
    const int n = 60000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
      double k = double(poisson_draw(g, mu));
      sum += k;
      sumsq += k * k;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    double se_mean = std::sqrt(mu / n);
    double se_var = std::sqrt(2.0 * mu * mu + mu) / std::sqrt(double(n));
    CHECK(std::abs(mean - mu) < 4.5 * se_mean);
    CHECK(std::abs(var - mu) < 4.5 * se_var);
  }
}

TEST_CASE("binomial draws match their moments") {
  struct Case {
    std::uint64_t n;
    double p;
  };
  for (Case c : {Case{50, 0.02}, Case{1000, 0.3}, Case{10000, 0.77}, Case{7, 1.0}}) {
    RngStream g(6, c.n);
    const int reps = 60000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < reps; ++i) {
      double k = double(binomial_draw(g, c.n, c.p));
      CHECK(k <= double(c.n));
      sum += k;
      sumsq += k * k;
    }
    double mean = sum / reps;
    double var = sumsq / reps - mean * mean;
    double m = double(c.n) * c.p;
    double v = m * (1 - c.p);
    CHECK(std::abs(mean - m) < 4.5 * std::sqrt(v / reps) + 1e-12);
    if (v > 0) {
      double se_var = std::sqrt(2.0 * v * v / reps) + v * 0.05;
      CHECK(std::abs(var - v) < 4.5 * se_var);
    }
  }
}

TEST_CASE("degenerate draws") {
  RngStream g(1, 2);
  CHECK(poisson_draw(g, 0.0) == 0);
  CHECK(binomial_draw(g, 100, 0.0) == 0);
  CHECK(binomial_draw(g, 100, 1.0) == 100);
  CHECK(binomial_draw(g, 0, 0.5) == 0);
}
