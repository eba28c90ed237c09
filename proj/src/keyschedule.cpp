#include "ftmsim/keyschedule.hpp"

#include <cstring>

#include "ftmsim/util.hpp"

namespace ftmsim {

namespace {

constexpr const char* kExtractLabel = "ftmsim/ltf/v1";

void put_be64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

Digest expand(const Digest& prk, const char* label, uint64_t counter) {
  std::vector<uint8_t> info;
  info.insert(info.end(), label, label + std::strlen(label));
  put_be64(info, counter);
  info.push_back(0x01);
  return hmac_sha256(prk, info);
}

}  // namespace

LtfSeed LtfSeed::from_hex(const std::string& hex64) {
  const auto raw = ftmsim::from_hex(hex64);
  if (raw.size() != 32) throw ConfigError("LTF seed must be exactly 64 hex characters");
  LtfSeed s;
  std::copy(raw.begin(), raw.end(), s.bytes.begin());
  return s;
}

InstanceMaterial derive_material(const LtfSeed& seed, uint64_t counter) {
  const Digest prk = hmac_sha256(as_bytes(std::string(kExtractLabel)), seed.bytes);
  const Digest sac_block = expand(prk, "SAC", counter);
  const Digest key_block = expand(prk, "LTFKEY", counter);
  InstanceMaterial m;
  m.sac = static_cast<uint16_t>((sac_block[0] << 8) | sac_block[1]);
  m.waveform_key = key_block;
  m.counter = counter;
  return m;
}

bool verify_sac(uint16_t received, const InstanceMaterial& expected) {
  return received == expected.sac;
}

bool SecureLtfState::consumed(uint64_t value) const {
  if (value < low_water_) return true;
  const uint64_t off = value - low_water_;
  if (off < 64) return (window_ >> off) & 1u;
  return false;
}

void SecureLtfState::mark_consumed(uint64_t value) {
  if (value < low_water_) return;
  uint64_t off = value - low_water_;
  if (off >= 64) {
    // Forward jumps slide the window; skipped values are treated as
    // consumed, which is the conservative direction for a no-reuse guard.
    const uint64_t advance = off - 63;
    window_ = advance < 64 ? (window_ >> advance) : 0;
    low_water_ += advance;
    off = 63;
  }
  window_ |= (1ULL << off);
  while (window_ & 1u) {
    window_ >>= 1;
    low_water_ += 1;
  }
}

InstanceMaterial SecureLtfState::derive_instance() {
  if (consumed(counter_)) {
    throw CounterReuse("secure LTF counter value " + std::to_string(counter_) +
                       " was already consumed");
  }
  InstanceMaterial m = derive_material(seed_, counter_);
  mark_consumed(counter_);
  counter_ += 1;
  return m;
}

QamSymbolGrid expand_qam_grid(const InstanceMaterial& material, std::size_t n_ltf,
                              std::size_t n_active) {
  if (n_active != 122 && n_active != 242 && n_active != 498) {
    throw UnsupportedBandwidth("active tone count must be 122, 242 or 498, got " +
                               std::to_string(n_active));
  }
  if (n_ltf < 1) throw DimensionMismatch("n_ltf must be >= 1");

  // Counter-mode stream: block_i = HMAC(waveform_key, "GRID" || be64(i)).
  uint64_t block_index = 0;
  Digest block{};
  std::size_t block_pos = sizeof(Digest);
  auto next_byte = [&]() -> uint8_t {
    if (block_pos == sizeof(Digest)) {
      std::vector<uint8_t> info{'G', 'R', 'I', 'D'};
      put_be64(info, block_index++);
      block = hmac_sha256(material.waveform_key, info);
      block_pos = 0;
    }
    return block[block_pos++];
  };
  BitReader bits(next_byte);

  QamSymbolGrid grid;
  grid.n_ltf = n_ltf;
  grid.n_active = n_active;
  grid.symbols.resize(n_ltf * n_active);
  grid.beta_bits.resize(n_ltf);
  for (std::size_t s = 0; s < n_ltf; ++s) {
    for (std::size_t k = 0; k < n_active; ++k) {
      grid.symbols[s * n_active + k] = static_cast<uint8_t>(bits.take(6));
    }
    grid.beta_bits[s] = static_cast<uint8_t>(bits.take(1));
  }
  grid.keystream_bits = bits.consumed_bits();
  return grid;
}

}  // namespace ftmsim
