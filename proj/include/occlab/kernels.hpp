#pragma once
// Inner summation kernels for the moment series. Each family exposes its
// term argument x_j = t p_j through a closed form in j, so the hot loops
// stream over an index range without touching the view. A scalar reference
// implementation is always available; an AVX2 variant is selected at run
// time and equivalence-tested against it.

#include <cstdint>
#include <span>

namespace occlab::kernels {

enum class Isa { scalar, avx2 };

/// Instruction set the dispatched kernels will use. Honors the
/// OCCUPANCY_SIMD environment variable ("scalar" or "avx2") on first call.
Isa active_isa();

/// Test hook: override the dispatched instruction set.
void force_isa(Isa isa);

const char* isa_name(Isa isa);

// ln x_j parameterizations (x_j = t p_j):
//   geometric:     ln x_j = base + j * step            (step < 0)
//   power law:     ln x_j = base - expo * ln j
//   stretched exp: ln x_j = base - j^beta
struct LogArgGeometric {
  double base, step;
};
struct LogArgPowerLaw {
  double base, expo;
};
struct LogArgStretched {
  double base, beta;
};

// Summand kinds:
//   pmf:       w_j = e^{-x_j} x_j^r / r!   (caller guarantees x_j <= 709)
//   occupancy: w_j = 1 - e^{-x_j}
enum class TermKind { pmf, occupancy };

struct TermSums {
  double sum = 0;
  double sum_sq = 0;  // sum of w_j^2, for the Bernoulli variance forms
};

TermSums accumulate(const LogArgGeometric& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1);
TermSums accumulate(const LogArgPowerLaw& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1);
TermSums accumulate(const LogArgStretched& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1);
/// Explicit probability array: x_j = t p[j].
TermSums accumulate_array(std::span<const double> probs, double t, TermKind kind, int r);

// Reference paths, used directly by the equivalence tests.
namespace scalar {
TermSums accumulate(const LogArgGeometric& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1);
TermSums accumulate(const LogArgPowerLaw& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1);
TermSums accumulate(const LogArgStretched& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1);
TermSums accumulate_array(std::span<const double> probs, double t, TermKind kind, int r);
}  // namespace scalar

}  // namespace occlab::kernels
