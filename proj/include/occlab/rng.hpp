#pragma once
// Counter-based random streams (philox4x32-10, Salmon et al. SC'11) plus
// exact Poisson and binomial variate generators. Streams are keyed by
// (seed, stream id) and advance a 128-bit counter whose high word selects a
// section, so replicate draws are reproducible under any thread schedule.

#include <cmath>
#include <cstdint>

namespace occlab {

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t k = mix64(seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1));
    k = mix64(k ^ mix64(stream_id));
    key0_ = std::uint32_t(k);
    key1_ = std::uint32_t(k >> 32);
  }

  /// Select the counter section. Sections must be visited in increasing
  /// order within one stream; revisiting the current section keeps its
  /// position (so the draw sequence never reuses a counter).
  void set_section(std::uint64_t s) {
    if (s != hi_) {
      hi_ = s;
      lo_ = 0;
      pos_ = 4;
    }
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      fill();
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t a = next_u32();
    return (a << 32) | next_u32();
  }

  /// [0, 1) with 53 random bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = std::uint64_t(a) * b;
    hi = std::uint32_t(p >> 32);
    lo = std::uint32_t(p);
  }

  void fill() {
    std::uint32_t c0 = std::uint32_t(lo_), c1 = std::uint32_t(lo_ >> 32);
    std::uint32_t c2 = std::uint32_t(hi_), c3 = std::uint32_t(hi_ >> 32);
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c0, hi0, lo0);
      mulhilo(0xCD9E8D57u, c2, hi1, lo1);
      std::uint32_t n0 = hi1 ^ c1 ^ k0;
      std::uint32_t n1 = lo1;
      std::uint32_t n2 = hi0 ^ c3 ^ k1;
      std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    buf_[0] = c0;
    buf_[1] = c1;
    buf_[2] = c2;
    buf_[3] = c3;
    ++lo_;
  }

  std::uint32_t key0_ = 0, key1_ = 0;
  std::uint64_t hi_ = 0, lo_ = 0;
  std::uint32_t buf_[4] = {};
  int pos_ = 4;
};

/// Poisson(mu). Inversion below mean 10, Hormann's PTRS transformed
/// rejection above; both exact up to double rounding. exp_neg_mu may carry a
/// precomputed e^{-mu} for the inversion path (pass a negative value to
/// compute it here).
std::uint64_t poisson_draw(RngStream& g, double mu, double exp_neg_mu = -1.0);

/// Binomial(n, p); inversion below mean 10, BTRS transformed rejection
/// above.
std::uint64_t binomial_draw(RngStream& g, std::uint64_t n, double p);

}  // namespace occlab
