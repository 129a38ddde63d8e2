#include "occlab/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "occlab/numerics.hpp"

#ifdef OCCLAB_HAVE_AVX2
#include "kernels_avx2.hpp"
#endif

namespace occlab::kernels {

namespace {

Isa detect_isa() {
#ifdef OCCLAB_HAVE_AVX2
  const char* env = std::getenv("OCCUPANCY_SIMD");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(env, "avx2") == 0) return Isa::avx2;
  }
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
  return Isa::scalar;
}

std::atomic<Isa> g_isa{detect_isa()};

}  // namespace

Isa active_isa() { return g_isa.load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
#ifndef OCCLAB_HAVE_AVX2
  isa = Isa::scalar;
#endif
  g_isa.store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

namespace scalar {

namespace {

inline double term_from_x(double x, TermKind kind, int r, double inv_rfact) {
  if (kind == TermKind::occupancy) return -std::expm1(-x);
  // binary powering; x <= 709 and r <= 100 keep every intermediate finite
  double p = 1.0, b = x;
  int e = r;
  while (e > 0) {
    if (e & 1) p *= b;
    b *= b;
    e >>= 1;
  }
  return std::exp(-x) * p * inv_rfact;
}

template <typename LogArgFn>
TermSums accumulate_impl(LogArgFn&& log_x_of, TermKind kind, int r, std::uint64_t j0,
                         std::uint64_t j1) {
  const double inv_rfact = 1.0 / factorial(r);
  KahanSum s, s2;
  for (std::uint64_t j = j0; j < j1; ++j) {
    double lx = log_x_of(double(j));
    double x = lx < -745.0 ? 0.0 : std::exp(lx);
    double w = term_from_x(x, kind, r, inv_rfact);
    s.add(w);
    s2.add(w * w);
  }
  return {s.value(), s2.value()};
}

}  // namespace

TermSums accumulate(const LogArgGeometric& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1) {
  return accumulate_impl([&](double j) { return arg.base + j * arg.step; }, kind, r, j0, j1);
}

TermSums accumulate(const LogArgPowerLaw& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1) {
  return accumulate_impl([&](double j) { return arg.base - arg.expo * std::log(j); }, kind, r, j0,
                         j1);
}

TermSums accumulate(const LogArgStretched& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1) {
  return accumulate_impl([&](double j) { return arg.base - std::pow(j, arg.beta); }, kind, r, j0,
                         j1);
}

TermSums accumulate_array(std::span<const double> probs, double t, TermKind kind, int r) {
  const double inv_rfact = 1.0 / factorial(r);
  KahanSum s, s2;
  for (double p : probs) {
    double w = term_from_x(t * p, kind, r, inv_rfact);
    s.add(w);
    s2.add(w * w);
  }
  return {s.value(), s2.value()};
}

}  // namespace scalar

#ifdef OCCLAB_HAVE_AVX2
#define OCCLAB_DISPATCH(...) \
  return active_isa() == Isa::avx2 ? avx2::__VA_ARGS__ : scalar::__VA_ARGS__
#else
#define OCCLAB_DISPATCH(...) return scalar::__VA_ARGS__
#endif

TermSums accumulate(const LogArgGeometric& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1) {
  OCCLAB_DISPATCH(accumulate(arg, kind, r, j0, j1));
}
TermSums accumulate(const LogArgPowerLaw& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1) {
  OCCLAB_DISPATCH(accumulate(arg, kind, r, j0, j1));
}
TermSums accumulate(const LogArgStretched& arg, TermKind kind, int r, std::uint64_t j0,
                    std::uint64_t j1) {
  OCCLAB_DISPATCH(accumulate(arg, kind, r, j0, j1));
}
TermSums accumulate_array(std::span<const double> probs, double t, TermKind kind, int r) {
  OCCLAB_DISPATCH(accumulate_array(probs, t, kind, r));
}

#undef OCCLAB_DISPATCH

}  // namespace occlab::kernels
