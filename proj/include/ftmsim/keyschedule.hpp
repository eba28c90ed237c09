#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <vector>

#include "ftmsim/common.hpp"
#include "ftmsim/crypto.hpp"

namespace ftmsim {

/// 32-byte long-term secret from which all per-instance training material
/// is derived. Never serialized into experiment outputs.
struct LtfSeed {
  std::array<uint8_t, 32> bytes{};

  static LtfSeed from_hex(const std::string& hex64);
};

/// Per-instance material: validation code plus the key feeding the
/// pseudorandom training content. Pure function of (seed, counter).
struct InstanceMaterial {
  uint16_t sac = 0;
  std::array<uint8_t, 32> waveform_key{};
  uint64_t counter = 0;
};

/// KDF: extract-and-expand over HMAC-SHA256. The counter is encoded as
/// 8-byte big-endian; "SAC" and "LTFKEY" are the domain-separation labels.
InstanceMaterial derive_material(const LtfSeed& seed, uint64_t counter);

bool verify_sac(uint16_t received, const InstanceMaterial& expected);

/// Owns the strictly monotone instance counter. A consumed counter value is
/// never handed out again; reuse attempts raise CounterReuse.
///
/// Consumption is tracked as a low-water mark plus a 64-wide bitmask window,
/// which is observably identical to an unbounded set for monotone use.
class SecureLtfState {
 public:
  explicit SecureLtfState(LtfSeed seed, uint64_t initial_counter = 0)
      : seed_(seed), counter_(initial_counter), low_water_(initial_counter) {}

  uint64_t counter() const { return counter_; }
  const LtfSeed& seed() const { return seed_; }

  /// Test/fault hook: rewinds the counter without erasing the consumption
  /// record, so the next derive attempt on a consumed value fails.
  void set_counter(uint64_t value) { counter_ = value; }

  bool consumed(uint64_t value) const;

  /// Derives material for the current counter, marks it consumed and
  /// advances. Throws CounterReuse if the value was already consumed.
  InstanceMaterial derive_instance();

 private:
  void mark_consumed(uint64_t value);

  LtfSeed seed_;
  uint64_t counter_ = 0;
  uint64_t low_water_ = 0;  // everything below is consumed
  uint64_t window_ = 0;     // bitmask for [low_water_, low_water_+64)
};

/// Pseudorandom training content for one NDP: per-symbol, per-active-tone
/// indices into the 64-point QAM alphabet plus a common phase bit per symbol.
struct QamSymbolGrid {
  std::size_t n_ltf = 0;
  std::size_t n_active = 0;
  std::vector<uint8_t> symbols;    // n_ltf * n_active entries, each 0..63
  std::vector<uint8_t> beta_bits;  // one per symbol: 0 -> 0, 1 -> pi/4
  std::size_t keystream_bits = 0;

  uint8_t at(std::size_t sym, std::size_t tone) const { return symbols[sym * n_active + tone]; }
  double beta(std::size_t sym) const { return beta_bits[sym] ? std::numbers::pi / 4.0 : 0.0; }
};

/// Expands the waveform key into the QAM grid: 6 bits per tone index and one
/// phase bit per symbol, consumed MSB-first from a counter-mode HMAC stream.
QamSymbolGrid expand_qam_grid(const InstanceMaterial& material, std::size_t n_ltf,
                              std::size_t n_active);

}  // namespace ftmsim
