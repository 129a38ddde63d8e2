#pragma once
// De-Poissonization: the total-variation bound pi_k + 2k e^{-n p_k / 10}
// between the fixed-n and Poissonized small-count vectors, with the
// standard truncation-index rule k(n) = max{k : 20 log k <= n p_k}.

#include <cstdint>

#include "occlab/frequencies.hpp"

namespace occlab {

struct DepoissonBound {
  std::uint64_t n = 0;
  int m = 0;             // largest count index being compared
  std::uint64_t k = 0;   // chosen truncation index
  double p_k = 0;
  double pi_k = 0;       // certified upper bound on the tail mass past k
  bool pi_k_exact = false;
  double bound = 0;      // pi_k + 2 k e^{-n p_k / 10}
  bool applicable = false;  // m <= n p_k / 2
  bool support_capped = false;
};

/// max{k : 20 log k <= n p_k}; the left side is nondecreasing and the right
/// nonincreasing in k, so a forward scan finds the exact maximizer. k = 1 is
/// always admissible (log 1 = 0).
std::uint64_t choose_k(const FrequencyView& view, std::uint64_t n);

DepoissonBound tv_bound(const FrequencyView& view, std::uint64_t n, int m);

}  // namespace occlab
