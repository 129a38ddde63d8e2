#pragma once
// AVX2 kernel entry points; compiled into a separate translation unit with
// -mavx2 -mfma and reached only after a cpuid check.

#include "occlab/kernels.hpp"

namespace occlab::kernels::avx2 {

TermSums accumulate(const LogArgGeometric& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1);
TermSums accumulate(const LogArgPowerLaw& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1);
TermSums accumulate(const LogArgStretched& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1);
TermSums accumulate_array(std::span<const double> probs, double t, TermKind kind, int r);

}  // namespace occlab::kernels::avx2
