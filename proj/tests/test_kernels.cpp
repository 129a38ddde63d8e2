#include "doctest.h"
#include "occlab/kernels.hpp"
#include "occlab/numerics.hpp"

#include <cmath>
#include <vector>

using namespace occlab;
using namespace occlab::kernels;

namespace {

struct IsaGuard {
  Isa saved;
  IsaGuard() : saved(active_isa()) {}
  ~IsaGuard() { force_isa(saved); }
};

void check_close(const TermSums& a, const TermSums& b, double rel, double abs_tol = 1e-280) {
  CHECK(a.sum == doctest::Approx(b.sum).epsilon(rel).scale(abs_tol));
  CHECK(a.sum_sq == doctest::Approx(b.sum_sq).epsilon(rel).scale(abs_tol));
}

}  // namespace

TEST_CASE("scalar kernels match a naive per-term loop") {
  // naive reference written independently of the kernel implementation
  auto naive = [](auto lx_of, TermKind kind, int r, std::uint64_t j0, std::uint64_t j1) {
    TermSums out;
    for (std::uint64_t j = j0; j < j1; ++j) {
      double x = std::exp(lx_of(double(j)));
      double w = kind == TermKind::occupancy ? 1.0 - std::exp(-x)
                                             : std::exp(-x) * std::pow(x, r) / factorial(r);
      out.sum += w;
      out.sum_sq += w * w;
    }
    return out;
  };
  LogArgPowerLaw pl{std::log(4000.0 * 0.6079), 2.0};
  for (int r : {1, 3, 12}) {
    auto got = scalar::accumulate(pl, TermKind::pmf, r, 3, 5000);
    auto ref = naive([&](double j) { return pl.base - pl.expo * std::log(j); }, TermKind::pmf, r,
                     3, 5000);
    check_close(got, ref, 1e-11);
  }
  auto goto_ = scalar::accumulate(pl, TermKind::occupancy, 1, 3, 5000);
  auto refo = naive([&](double j) { return pl.base - pl.expo * std::log(j); },
                    TermKind::occupancy, 1, 3, 5000);
  check_close(goto_, refo, 1e-9);
}

TEST_CASE("simd kernels agree with scalar reference") {
  if (active_isa() != Isa::avx2) {
    MESSAGE("avx2 unavailable; dispatch equivalence trivially scalar");
    return;
  }
  IsaGuard guard;

  // geometric: t c q^j across decades
  for (double t : {1.0, 64.0, 1e6}) {
    LogArgGeometric g{std::log(t), std::log(0.5)};
    for (int r : {1, 2, 6, 24}) {
      force_isa(Isa::avx2);
      auto simd = accumulate(g, TermKind::pmf, r, 1, 700);
      force_isa(Isa::scalar);
      auto ref = accumulate(g, TermKind::pmf, r, 1, 700);
      check_close(simd, ref, 1e-10);
    }
  }

  // power law: includes the near-709 head boundary and deep tail
  for (double t : {100.0, 1e8}) {
    LogArgPowerLaw p{std::log(t * 0.60792710185402663), 2.0};
    std::uint64_t j0 = std::uint64_t(std::sqrt(t * 0.608 / 700.0)) + 1;
    for (int r : {1, 2, 12}) {
      force_isa(Isa::avx2);
      auto simd = accumulate(p, TermKind::pmf, r, j0, j0 + 2'000'000);
      force_isa(Isa::scalar);
      auto ref = accumulate(p, TermKind::pmf, r, j0, j0 + 2'000'000);
      check_close(simd, ref, 1e-10);
    }
    force_isa(Isa::avx2);
    auto simd = accumulate(p, TermKind::occupancy, 1, j0, j0 + 2'000'000);
    force_isa(Isa::scalar);
    auto ref = accumulate(p, TermKind::occupancy, 1, j0, j0 + 2'000'000);
    // occupancy small-x terms carry ~1e-17 absolute noise per term
    CHECK(simd.sum == doctest::Approx(ref.sum).epsilon(1e-10).scale(1e-8));
    CHECK(simd.sum_sq == doctest::Approx(ref.sum_sq).epsilon(1e-10).scale(1e-8));
  }

  // stretched exponential
  LogArgStretched s{std::log(1e5 * 0.59865656033268834), 0.5};
  for (int r : {1, 4}) {
    force_isa(Isa::avx2);
    auto simd = accumulate(s, TermKind::pmf, r, 180, 40000);
    force_isa(Isa::scalar);
    auto ref = accumulate(s, TermKind::pmf, r, 180, 40000);
    check_close(simd, ref, 1e-10);
  }

  // explicit array path (odd length exercises the remainder lanes)
  std::vector<double> probs;
  for (int i = 1; i <= 1001; ++i) probs.push_back(0.5 / std::pow(double(i), 1.7));
  force_isa(Isa::avx2);
  auto simd = accumulate_array(probs, 37.0, TermKind::pmf, 2);
  force_isa(Isa::scalar);
  auto ref = accumulate_array(probs, 37.0, TermKind::pmf, 2);
  check_close(simd, ref, 1e-10);
}

TEST_CASE("kernel range splitting is consistent") {
  // [a, c) equals [a, b) + [b, c) for awkward split points
  LogArgPowerLaw p{std::log(500.0), 2.0};
  auto whole = accumulate(p, TermKind::pmf, 2, 1, 1003);
  auto left = accumulate(p, TermKind::pmf, 2, 1, 617);
  auto right = accumulate(p, TermKind::pmf, 2, 617, 1003);
  CHECK(whole.sum == doctest::Approx(left.sum + right.sum).epsilon(1e-12));
  CHECK(whole.sum_sq == doctest::Approx(left.sum_sq + right.sum_sq).epsilon(1e-12));
}

TEST_CASE("isa override is honored") {
  IsaGuard guard;
  force_isa(Isa::scalar);
  CHECK(active_isa() == Isa::scalar);
}
