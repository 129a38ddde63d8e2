#include "occlab/numerics.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace occlab {

namespace {

constexpr int kFactCacheSize = 171;  // 170! is the last finite double

const std::array<double, kFactCacheSize>& factorial_table() {
  static const auto table = [] {
    std::array<double, kFactCacheSize> t{};
    t[0] = 1.0;
    for (int r = 1; r < kFactCacheSize; ++r) t[r] = t[r - 1] * r;
    return t;
  }();
  return table;
}

const std::array<double, kFactCacheSize>& log_factorial_table() {
  static const auto table = [] {
    std::array<double, kFactCacheSize> t{};
    for (int r = 0; r < kFactCacheSize; ++r) t[r] = std::lgamma(double(r) + 1.0);
    return t;
  }();
  return table;
}

}  // namespace

double factorial(int r) {
  if (r < 0) throw std::invalid_argument("factorial: negative argument");
  if (r < kFactCacheSize) return factorial_table()[r];
  return std::numeric_limits<double>::infinity();
}

double log_factorial(int r) {
  if (r < 0) throw std::invalid_argument("log_factorial: negative argument");
  if (r < kFactCacheSize) return log_factorial_table()[r];
  return std::lgamma(double(r) + 1.0);
}

double binomial_coeff(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  if (n <= 64) {
    // C(64, 32) = 1.8e18; the intermediate product needs 128 bits.
    unsigned __int128 c = 1;
    for (int i = 1; i <= k; ++i) {
      c = c * unsigned(n - k + i) / unsigned(i);
    }
    return double(std::uint64_t(c));
  }
  return std::exp(log_factorial(n) - log_factorial(k) - log_factorial(n - k));
}

double poisson_pmf(double x, int r) {
  if (x == 0.0) return r == 0 ? 1.0 : 0.0;
  if (x <= 700.0 && r <= 100) {
    // x^r by binary powering keeps the error at a few ulp and stays finite
    // for the guarded ranges (700^100 < DBL_MAX).
    double p = 1.0, b = x;
    int e = r;
    while (e > 0) {
      if (e & 1) p *= b;
      b *= b;
      e >>= 1;
    }
    return std::exp(-x) * p / factorial(r);
  }
  double lt = -x + r * std::log(x) - log_factorial(r);
  return lt < -745.0 ? 0.0 : std::exp(lt);
}

double log_poisson_pmf_from_log(double log_x, int r) {
  if (log_x > 709.0) return -std::numeric_limits<double>::infinity();
  double x = std::exp(log_x);
  return -x + r * log_x - log_factorial(r);
}

double poisson_one_upper_tail(int r) {
  if (r < 0) return 1.0;
  KahanSum head;
  double term = 1.0;  // 1/0!
  head.add(term);
  for (int i = 1; i <= r; ++i) {
    term /= i;
    head.add(term);
  }
  return 1.0 - kInvE * head.value();
}

double zeta_tail(double a, double n) {
  if (a <= 1.0) throw std::invalid_argument("zeta_tail: requires a > 1");
  // Explicit terms keep the Euler-Maclaurin remainder small; its error is
  // bounded by the first omitted correction since the derivatives of x^{-a}
  // alternate in sign.
  double n0 = std::max(n, std::ceil(32.0 + 2.0 * a));
  KahanSum head;
  for (double i = n + 1; i <= n0; ++i) head.add(std::pow(i, -a));
  double inv = 1.0 / n0;
  double f = std::pow(n0, -a);  // n0^{-a}
  double tail = f * n0 / (a - 1.0);
  tail -= 0.5 * f;
  tail += a * f * inv / 12.0;
  double inv3 = inv * inv * inv;
  tail -= a * (a + 1.0) * (a + 2.0) * f * inv3 / 720.0;
  tail += a * (a + 1.0) * (a + 2.0) * (a + 3.0) * (a + 4.0) * f * inv3 * inv * inv / 30240.0;
  return head.value() + tail;
}

double riemann_zeta(double a) {
  if (a <= 1.0) throw std::invalid_argument("riemann_zeta: requires a > 1");
  return 1.0 + zeta_tail(a, 1.0);
}

double upper_incomplete_gamma(double s, double x) {
  if (s <= 0.0 || x < 0.0) throw std::invalid_argument("upper_incomplete_gamma: domain");
  if (x == 0.0) return std::tgamma(s);
  if (x < s + 1.0) {
    // Gamma(s,x) = Gamma(s) - x^s e^{-x} sum_{n>=0} x^n / (s (s+1) ... (s+n))
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < 500; ++n) {
      term *= x / (s + n);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    double lower = std::exp(s * std::log(x) - x) * sum;
    return std::tgamma(s) - lower;
  }
  // Lentz continued fraction for x >= s + 1.
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  double lg = s * std::log(x) - x;
  return lg < -745.0 ? 0.0 : std::exp(lg) * h;
}

std::vector<double> sym_eigenvalues(std::vector<double> a, int m) {
  if (m <= 0 || int(a.size()) != m * m) throw std::invalid_argument("sym_eigenvalues: shape");
  auto at = [&](int i, int j) -> double& { return a[std::size_t(i) * m + j]; };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < m; ++p)
      for (int q = p + 1; q < m; ++q) off += at(p, q) * at(p, q);
    if (off < 1e-28) break;
    for (int p = 0; p < m; ++p) {
      for (int q = p + 1; q < m; ++q) {
        double apq = at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < m; ++k) {
          double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < m; ++k) {
          double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(m);
  for (int i = 0; i < m; ++i) ev[i] = at(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

double sym_min_eigenvalue(const std::vector<double>& a, int m) {
  return sym_eigenvalues(a, m).front();
}

}  // namespace occlab
