#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "ftmsim/common.hpp"

namespace ftmsim {

/// Propagation delay plus AWGN. Noise power is set relative to the mean
/// power over the signal support (samples above 5% of the peak magnitude),
/// so zero-power GI intervals do not dilute the SNR definition.
struct ChannelSpec {
  double delay_s = 0.0;
  double snr_db = std::numeric_limits<double>::infinity();
  uint64_t seed = 0;
};

/// Band-limited fractional delay: FFT phase ramp on the input grid (exact
/// and compositional; content wraps circularly, so the delay must stay
/// within the frame's trailing quiet region), then AWGN.
BasebandSignal propagate(const BasebandSignal& signal, const ChannelSpec& spec);

/// Attacker-side superposition. The replica is shifted by offset_s
/// (negative = advance) on the victim's timeline; optionally the legitimate
/// signal is zeroed from a sample index onward first (idealized
/// cancellation) before the replica is added.
struct InjectionSpec {
  BasebandSignal replica;
  double offset_s = 0.0;
  std::optional<std::size_t> cancel_legitimate_from;
};

BasebandSignal inject(const BasebandSignal& victim, const InjectionSpec& inj);

/// Shifts by a (possibly fractional) number of samples via an FFT phase
/// ramp; out_len selects the returned window length. Content shifted
/// before sample 0 is discarded.
std::vector<cplx> fractional_shift(const std::vector<cplx>& x, double shift_samples,
                                   std::size_t out_len);

/// Mean power over the signal support (samples above 5% of peak magnitude).
double support_power(const std::vector<cplx>& x);

}  // namespace ftmsim
