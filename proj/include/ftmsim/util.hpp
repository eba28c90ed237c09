#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <thread>
#include <vector>

#include "ftmsim/common.hpp"

namespace ftmsim {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ with an explicit Box-Muller Gaussian so that streams are
/// bit-reproducible independent of the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Circularly symmetric complex normal, unit total variance.
  cplx cgaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-std::log(u1));  // each component N(0, 1/2)
    return {r * std::cos(2.0 * std::numbers::pi * u2), r * std::sin(2.0 * std::numbers::pi * u2)};
  }

  /// Derives an independent stream seed from a master seed and tags.
  static uint64_t derive(uint64_t master, uint64_t stream, uint64_t index = 0) {
    uint64_t s = master;
    splitmix64(s);
    s ^= 0x6a09e667f3bcc908ULL + stream;
    splitmix64(s);
    s ^= 0xbb67ae8584caa73bULL + index;
    return splitmix64(s);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

/// MSB-first bit consumption over a byte stream.
class BitReader {
 public:
  explicit BitReader(std::function<uint8_t()> next_byte) : next_byte_(std::move(next_byte)) {}

  uint32_t take(int nbits) {
    uint32_t v = 0;
    for (int i = 0; i < nbits; ++i) {
      if (bit_pos_ == 0) {
        cur_ = next_byte_();
        bit_pos_ = 8;
      }
      --bit_pos_;
      v = (v << 1) | ((cur_ >> bit_pos_) & 1u);
    }
    consumed_ += static_cast<std::size_t>(nbits);
    return v;
  }

  std::size_t consumed_bits() const { return consumed_; }

 private:
  std::function<uint8_t()> next_byte_;
  uint8_t cur_ = 0;
  int bit_pos_ = 0;
  std::size_t consumed_ = 0;
};

/// Runs fn(i) for i in [0,n) on up to `jobs` threads. Results must be
/// written to pre-sized slots so output ordering stays deterministic.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t per = (n + jobs - 1) / jobs;
  for (unsigned t = 0; t < jobs; ++t) {
    std::size_t lo = t * per;
    std::size_t hi = std::min(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace ftmsim
