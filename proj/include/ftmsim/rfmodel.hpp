#pragma once

#include <utility>
#include <vector>

#include "ftmsim/common.hpp"

namespace ftmsim {

/// Memoryless Rapp AM/AM model; phase is preserved (no AM/PM).
struct RappParams {
  double smoothness_p = 4.0;
  double a_sat = 0.7;
  double small_signal_gain = 1.0;

  void validate() const;
};

BasebandSignal rapp_pa(const BasebandSignal& signal, const RappParams& params);

struct PsdParams {
  int segment = 256;       // Hann-windowed segment length
  int nfft = 256;
  double overlap = 0.5;
};

/// Two-sided averaged-periodogram PSD in dBr; 0 dBr is the in-band maximum
/// (|offset| <= inband_halfwidth_mhz).
struct PsdCurve {
  std::vector<double> offset_mhz;
  std::vector<double> dbr;
};

PsdCurve psd(const BasebandSignal& signal, const PsdParams& params, double inband_halfwidth_mhz);

/// Piecewise-linear transmit mask over |offset|; symmetric by construction.
struct SpectralMask {
  std::vector<std::pair<double, double>> breakpoints;  // (offset_mhz >= 0, limit_dbr)

  double limit_at(double offset_mhz) const;
  void validate() const;
};

SpectralMask default_mask_20mhz();

struct MaskReport {
  double worst_excess_db = 0.0;
  double p99_margin_db = 0.0;
  double frac_bins_above = 0.0;
  PsdCurve psd;
};

/// Compares PSD against the mask over [-range_mhz, +range_mhz].
MaskReport mask_check(const PsdCurve& curve, const SpectralMask& mask, double range_mhz);

}  // namespace ftmsim
