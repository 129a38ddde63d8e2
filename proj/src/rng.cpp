#include "occlab/rng.hpp"

#include <algorithm>

namespace occlab {

namespace {

std::uint64_t poisson_inversion(RngStream& g, double mu, double exp_neg_mu) {
  double f = exp_neg_mu > 0 ? exp_neg_mu : std::exp(-mu);
  double u = g.uniform();
  if (u < f) return 0;  // dominant case for the small box rates
  std::uint64_t k = 0;
  double cum = f;
  while (u > cum) {
    ++k;
    f *= mu / double(k);
    cum += f;
    if (f < 1e-320 || k > 200) break;
  }
  return k;
}

// Hormann (1993), "The transformed rejection method for generating Poisson
// random variables": exact rejection, valid for mu >= 10.
std::uint64_t poisson_ptrs(RngStream& g, double mu) {
  const double b = 0.931 + 2.53 * std::sqrt(mu);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  const double lmu = std::log(mu);
  for (;;) {
    double u = g.uniform() - 0.5;
    double v = g.uniform();
    double us = 0.5 - std::abs(u);
    double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
    if (us >= 0.07 && v <= vr) return std::uint64_t(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        kf * lmu - mu - std::lgamma(kf + 1.0)) {
      return std::uint64_t(kf);
    }
  }
}

std::uint64_t binomial_inversion(RngStream& g, std::uint64_t n, double p) {
  const double s = p / (1.0 - p);
  double f = std::exp(double(n) * std::log1p(-p));
  double u = g.uniform();
  std::uint64_t k = 0;
  while (u > f) {
    u -= f;
    if (k >= n) return n;
    f *= double(n - k) * s / double(k + 1);
    ++k;
    if (f <= 0.0) return k;
  }
  return k;
}

// Hormann (1993), BTRS transformed rejection for Binomial(n, p), p <= 1/2
// and n p >= 10.
std::uint64_t binomial_btrs(RngStream& g, std::uint64_t n, double p) {
  const double nd = double(n);
  const double q = 1.0 - p;
  const double spq = std::sqrt(nd * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double vr = 0.92 - 4.2 / b;
  const double urvr = 0.86 * vr;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const double m = std::floor((nd + 1.0) * p);
  const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
  for (;;) {
    double v = g.uniform();
    double u;
    if (v <= urvr) {
      u = v / vr - 0.43;
      return std::uint64_t(std::floor((2.0 * a / (0.5 - std::abs(u)) + b) * u + c));
    }
    if (v >= vr) {
      u = g.uniform() - 0.5;
    } else {
      u = v / vr - 0.93;
      u = (u < 0 ? -0.5 : 0.5) - u;
      v = g.uniform() * vr;
    }
    double us = 0.5 - std::abs(u);
    double kf = std::floor((2.0 * a / us + b) * u + c);
    if (kf < 0.0 || kf > nd) continue;
    v = v * alpha / (a / (us * us) + b);
    if (std::log(v) <= h - std::lgamma(kf + 1.0) - std::lgamma(nd - kf + 1.0) +
                           (kf - m) * lpq) {
      return std::uint64_t(kf);
    }
  }
}

}  // namespace

std::uint64_t poisson_draw(RngStream& g, double mu, double exp_neg_mu) {
  if (!(mu > 0.0)) return 0;
  if (mu < 10.0) return poisson_inversion(g, mu, exp_neg_mu);
  return poisson_ptrs(g, mu);
}

std::uint64_t binomial_draw(RngStream& g, std::uint64_t n, double p) {
  if (n == 0 || !(p > 0.0)) return 0;
  if (p >= 1.0) return n;
  bool flip = p > 0.5;
  double q = flip ? 1.0 - p : p;
  std::uint64_t k =
      double(n) * q < 10.0 ? binomial_inversion(g, n, q) : binomial_btrs(g, n, q);
  return flip ? n - k : k;
}

}  // namespace occlab
