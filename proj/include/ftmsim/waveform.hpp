#pragma once

#include <cstdint>
#include <vector>

#include "ftmsim/common.hpp"
#include "ftmsim/keyschedule.hpp"

namespace ftmsim {

enum class GiMode : uint8_t { cyclic_prefix, zero_power };

/// Ranging NDP shape. Secure format pairs with the zero-power GI, the
/// legacy format with a cyclic prefix; other combinations are rejected.
struct NdpConfig {
  int bandwidth_mhz = 20;  // 20, 40 or 80
  int n_ltf = 1;
  GiMode gi_mode = GiMode::zero_power;
  bool secure = true;
  int oversample = 1;

  void validate() const;

  int fft_size() const;     // 256 / 512 / 1024
  int n_active() const;     // 122 / 242 / 498
  double base_rate_hz() const { return bandwidth_mhz * 1e6; }
  double sample_rate_hz() const { return base_rate_hz() * oversample; }

  // All lengths in samples at the oversampled rate. One LTF symbol spans
  // 8 us: a 1.6 us GI followed by a 6.4 us body (half of the 12.8 us IFFT
  // frame). The trailing PE pad is 4 us.
  std::size_t body_len() const { return static_cast<std::size_t>(fft_size()) * oversample / 2; }
  std::size_t gi_len() const { return static_cast<std::size_t>(fft_size()) * oversample / 8; }
  std::size_t symbol_len() const { return gi_len() + body_len(); }
  std::size_t pe_len() const { return static_cast<std::size_t>(fft_size()) * oversample / 4; }
  std::size_t frame_len() const { return symbol_len() * n_ltf + pe_len(); }
};

/// Active/null tone layout on the signed tone grid [-fft/2, fft/2).
///
/// Fixed deterministic stand-in for the standard's per-bandwidth tone
/// plans: DC is nulled, guard bands take |k| > n_active, and within the
/// occupied band every odd tone is nulled, leaving the nonzero even tones
/// |k| <= n_active as the active set.
struct SubcarrierMap {
  int fft_size = 0;
  std::vector<int> active;  // ascending signed tone indices
  std::vector<int> nulled;
};

SubcarrierMap build_subcarrier_map(int bandwidth_mhz);

/// Tone values actually transmitted per LTF symbol: constellation points
/// rotated by the symbol's common phase and scaled so the realized mean
/// tone power over the whole grid is exactly one (which makes the mean
/// body sample power exactly one as well).
std::vector<std::vector<cplx>> transmitted_tones(const QamSymbolGrid& grid, const NdpConfig& cfg,
                                                 const SubcarrierMap& map);

/// Fixed, publicly known BPSK tone pattern used by the legacy format.
std::vector<double> legacy_tone_pattern(const SubcarrierMap& map);

/// One symbol body from explicit tone values: first half of the zero-padded
/// IFFT frame, x[n] = (1/sqrt(A)) sum_k Y_k e^{i 2 pi k n / NL}.
std::vector<cplx> synth_body_from_tones(const std::vector<cplx>& tone_values,
                                        const NdpConfig& cfg, const SubcarrierMap& map);

BasebandSignal synth_secure_ltf(const NdpConfig& cfg, const QamSymbolGrid& grid,
                                const SubcarrierMap& map);

BasebandSignal synth_legacy_ltf(const NdpConfig& cfg, const SubcarrierMap& map);

/// Per-symbol tone estimates on the active subcarriers, assuming coarse
/// alignment at the configured symbol boundaries.
std::vector<std::vector<cplx>> demodulate_ltf(const BasebandSignal& signal, const NdpConfig& cfg,
                                              const SubcarrierMap& map);

/// I/Q export: interleaved little-endian float32 plus a JSON sidecar.
void export_iq(const BasebandSignal& signal, const std::string& path_base,
               const std::string& config_hash);

}  // namespace ftmsim
