#include "occlab/depoisson.hpp"

#include <cmath>
#include <stdexcept>

namespace occlab {

std::uint64_t choose_k(const FrequencyView& view, std::uint64_t n) {
  if (n < 1) throw std::invalid_argument("choose_k: n >= 1");
  std::uint64_t k = 1;
  for (;;) {
    std::uint64_t next = k + 1;
    if (view.finite_support() && next > view.support_size()) return k;
    if (20.0 * std::log(double(next)) > double(n) * view.prob(next)) return k;
    k = next;
    if (k > (std::uint64_t(1) << 40)) return k;  // unreachable for sane models
  }
}

DepoissonBound tv_bound(const FrequencyView& view, std::uint64_t n, int m) {
  if (m < 1) throw std::invalid_argument("tv_bound: m >= 1");
  DepoissonBound out;
  out.n = n;
  out.m = m;
  out.k = choose_k(view, n);
  out.support_capped = view.finite_support() && out.k >= view.support_size();
  out.p_k = view.prob(out.k);
  TailBound tb = view.tail_bound(out.k, 1);
  out.pi_k = tb.value;
  out.pi_k_exact = tb.exact;
  double decay = double(n) * out.p_k / 10.0;
  out.bound = out.pi_k + 2.0 * double(out.k) * std::exp(-decay);
  out.applicable = double(m) <= 0.5 * double(n) * out.p_k;
  return out;
}

}  // namespace occlab
