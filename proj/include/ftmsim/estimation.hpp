#pragma once

#include <cstdint>
#include <vector>

#include "ftmsim/common.hpp"
#include "ftmsim/keyschedule.hpp"
#include "ftmsim/waveform.hpp"

namespace ftmsim {

/// FTM timestamps, quantized to integer picoseconds.
struct FtmTimestamps {
  int64_t t1_ps = 0;
  int64_t t2_ps = 0;
  int64_t t3_ps = 0;
  int64_t t4_ps = 0;
};

/// (t4 - t1) - (t3 - t2), exact integer arithmetic.
int64_t rtt_picoseconds(const FtmTimestamps& ts);

/// d = (c/2) * RTT. Negative results are returned as-is.
double distance_from_timestamps(const FtmTimestamps& ts);

enum class ToaMethod : uint8_t { correlation, music };

struct ToaEstimate {
  double toa_s = 0.0;
  ToaMethod method = ToaMethod::correlation;
  std::vector<std::pair<double, double>> pseudospectrum;  // (delay_ns, power_db)
  double peak_sharpness_db = 0.0;
  int model_order = 0;
};

/// Argmax of |cross-correlation| with quadratic sub-sample refinement.
ToaEstimate toa_correlation(const BasebandSignal& rx, const BasebandSignal& tmpl);

struct MusicParams {
  double grid_start_ns = 0.0;
  double grid_stop_ns = 500.0;
  double grid_step_ns = 0.05;
  double subarray_fraction = 0.5;  // subarray length over CFR grid length
  double peak_threshold = 0.10;    // relative to pseudospectrum max, linear
  int model_order_override = 0;    // 0 = largest log-eigenvalue gap
  bool keep_pseudospectrum = false;
};

/// Delay-domain MUSIC over the channel frequency response estimated from
/// known training tones. ToA is the earliest pseudospectrum peak above the
/// threshold.
ToaEstimate toa_music(const BasebandSignal& rx, const QamSymbolGrid& known_tones,
                      const NdpConfig& cfg, const SubcarrierMap& map,
                      const MusicParams& params = {});

/// Same estimator on an already-estimated CFR over a uniform tone grid.
ToaEstimate music_from_cfr(const std::vector<cplx>& cfr, double tone_spacing_hz,
                           const MusicParams& params = {});

/// CFR on the uniform virtual grid (DC filled by neighbor interpolation).
std::vector<cplx> estimate_cfr(const BasebandSignal& rx, const QamSymbolGrid& known_tones,
                               const NdpConfig& cfg, const SubcarrierMap& map);

/// RMS error vector magnitude in percent, normalized by the RMS magnitude
/// of the reference tones.
double evm_rms(const std::vector<cplx>& rx_tones, const std::vector<cplx>& tx_tones);
double evm_rms(const std::vector<std::vector<cplx>>& rx_tones,
               const std::vector<std::vector<cplx>>& tx_tones);

/// EVM after the receiver's nominal one-tap equalization: a common complex
/// gain and linear phase ramp (i.e. a pure delay) are fitted and removed
/// first, so a clean time shift scores as zero distortion.
double evm_after_linear_phase_eq(const std::vector<std::vector<cplx>>& rx_tones,
                                 const std::vector<std::vector<cplx>>& tx_tones,
                                 const std::vector<double>& tone_freqs_hz);

}  // namespace ftmsim
