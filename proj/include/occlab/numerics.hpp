#pragma once
// Shared numeric primitives: compensated summation, Poisson pmf terms in
// log space, exact small binomial coefficients, zeta tails with certified
// remainders, incomplete gamma upper bounds, and a small symmetric
// eigenvalue solver.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace occlab {

inline constexpr double kLn2 = 0.69314718055994530941723212145817657;
inline constexpr double kLog2E = 1.44269504088896340735992468100189214;
inline constexpr double kInvE = 0.36787944117144232159552377016146087;

// Neumaier-compensated accumulator (Kahan variant that also tracks
// cancellation when the addend dominates the running sum).
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

/// r! as a double; exact for r <= 22, correctly rounded up to 170.
double factorial(int r);

/// lgamma(r + 1), cached for small r.
double log_factorial(int r);

inline double log_factorial_u64(std::uint64_t j) { return std::lgamma(double(j) + 1.0); }

/// Binomial coefficient; exact integer arithmetic for n <= 64, log-gamma
/// beyond.
double binomial_coeff(int n, int k);

/// e^{-x} x^r / r!  for x in [0, ~700] and moderate r.
double poisson_pmf(double x, int r);

/// log of e^{-x} x^r / r! given ln(x); tolerates arguments whose exponential
/// overflows a double (returns -inf when the mass is below every
/// representable scale).
double log_poisson_pmf_from_log(double log_x, int r);

/// P(Poisson(1) >= r + 1).
double poisson_one_upper_tail(int r);

/// Sum_{i > n} i^{-a} for a > 1, via explicit terms plus an Euler-Maclaurin
/// tail whose remainder is bounded by the first omitted term. Relative error
/// below ~1e-13.
double zeta_tail(double a, double n);

/// Riemann zeta(a) for a > 1.
double riemann_zeta(double a);

/// Upper incomplete gamma Gamma(s, x), s > 0, x >= 0. Series for x < s + 1,
/// Lentz continued fraction otherwise; ~1e-14 relative accuracy.
double upper_incomplete_gamma(double s, double x);

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

/// Eigenvalues of a symmetric m x m matrix (row-major), ascending. Cyclic
/// Jacobi; intended for the small correlation matrices used here (m <= 16).
std::vector<double> sym_eigenvalues(std::vector<double> a, int m);

/// Smallest eigenvalue convenience wrapper.
double sym_min_eigenvalue(const std::vector<double>& a, int m);

}  // namespace occlab
