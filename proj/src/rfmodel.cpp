#include "ftmsim/rfmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ftmsim/fft.hpp"
#include "ftmsim/util.hpp"

namespace ftmsim {

void RappParams::validate() const {
  if (!(smoothness_p > 0.0) || !std::isfinite(smoothness_p) || !(a_sat > 0.0) ||
      !std::isfinite(a_sat) || !(small_signal_gain > 0.0) || !std::isfinite(small_signal_gain)) {
    throw ConfigError("Rapp parameters must be positive and finite");
  }
}

BasebandSignal rapp_pa(const BasebandSignal& signal, const RappParams& params) {
  params.validate();
  BasebandSignal out = signal;
  const double g = params.small_signal_gain;
  const double two_p = 2.0 * params.smoothness_p;
  for (auto& v : out.samples) {
    const double amp = g * std::abs(v);
    if (amp == 0.0) continue;
    const double denom = std::pow(1.0 + std::pow(amp / params.a_sat, two_p), 1.0 / two_p);
    v *= g / denom;
  }
  return out;
}

PsdCurve psd(const BasebandSignal& signal, const PsdParams& params, double inband_halfwidth_mhz) {
  const std::size_t seg = static_cast<std::size_t>(params.segment);
  if (signal.size() <= seg) throw TooShort("psd: signal shorter than one segment");
  const std::size_t nfft = std::max<std::size_t>(seg, static_cast<std::size_t>(params.nfft));
  const std::size_t hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(seg * (1.0 - params.overlap))));

  std::vector<double> window(seg);
  for (std::size_t n = 0; n < seg; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (seg - 1));
  }

  std::vector<double> acc(nfft, 0.0);
  std::size_t n_seg = 0;
  for (std::size_t start = 0; start + seg <= signal.size(); start += hop) {
    std::vector<cplx> buf(nfft, cplx(0.0, 0.0));
    for (std::size_t n = 0; n < seg; ++n) {
      buf[n] = signal.samples[start + n] * window[n];
    }
    const auto spec = fft_forward(buf);
    for (std::size_t k = 0; k < nfft; ++k) acc[k] += std::norm(spec[k]);
    ++n_seg;
  }

  // fftshift to signed offsets.
  PsdCurve curve;
  curve.offset_mhz.resize(nfft);
  curve.dbr.resize(nfft);
  const double bin_hz = signal.sample_rate_hz / static_cast<double>(nfft);
  std::vector<double> power(nfft);
  for (std::size_t i = 0; i < nfft; ++i) {
    const std::size_t k = (i + nfft / 2) % nfft;
    const double f = (static_cast<double>(i) - static_cast<double>(nfft / 2)) * bin_hz;
    curve.offset_mhz[i] = f / 1e6;
    power[i] = acc[k] / static_cast<double>(n_seg);
  }

  double inband_max = 0.0;
  for (std::size_t i = 0; i < nfft; ++i) {
    if (std::abs(curve.offset_mhz[i]) <= inband_halfwidth_mhz) {
      inband_max = std::max(inband_max, power[i]);
    }
  }
  if (inband_max <= 0.0) inband_max = *std::max_element(power.begin(), power.end());
  for (std::size_t i = 0; i < nfft; ++i) {
    curve.dbr[i] = lin_to_db(std::max(power[i], inband_max * 1e-30) / inband_max);
  }
  return curve;
}

double SpectralMask::limit_at(double offset_mhz) const {
  const double x = std::abs(offset_mhz);
  if (breakpoints.empty()) return 0.0;
  if (x <= breakpoints.front().first) return breakpoints.front().second;
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (x <= breakpoints[i].first) {
      const auto& [x0, y0] = breakpoints[i - 1];
      const auto& [x1, y1] = breakpoints[i];
      const double t = (x - x0) / (x1 - x0);
      return y0 + t * (y1 - y0);
    }
  }
  return breakpoints.back().second;
}

void SpectralMask::validate() const {
  if (breakpoints.empty()) throw ConfigError("mask needs at least one breakpoint");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!std::isfinite(breakpoints[i].second) || breakpoints[i].first < 0.0) {
      throw ConfigError("mask breakpoints must have finite limits and offsets >= 0");
    }
    if (i > 0 && breakpoints[i].first <= breakpoints[i - 1].first) {
      throw ConfigError("mask offsets must be strictly increasing");
    }
  }
}

SpectralMask default_mask_20mhz() {
  return SpectralMask{{{9.0, 0.0}, {11.0, -20.0}, {20.0, -28.0}, {30.0, -40.0}}};
}

MaskReport mask_check(const PsdCurve& curve, const SpectralMask& mask, double range_mhz) {
  mask.validate();
  MaskReport report;
  report.psd = curve;

  std::vector<double> excess;
  std::size_t above = 0;
  for (std::size_t i = 0; i < curve.offset_mhz.size(); ++i) {
    const double f = curve.offset_mhz[i];
    if (std::abs(f) > range_mhz) continue;
    const double e = curve.dbr[i] - mask.limit_at(f);
    excess.push_back(e);
    if (e > 0.0) ++above;
  }
  if (excess.empty()) throw TooShort("mask_check: PSD does not cover the requested range");

  std::sort(excess.begin(), excess.end());
  report.worst_excess_db = excess.back();
  const std::size_t p99_idx = static_cast<std::size_t>(
      std::min<double>(excess.size() - 1.0, std::ceil(0.99 * excess.size()) - 1.0));
  report.p99_margin_db = excess[p99_idx];
  report.frac_bins_above = static_cast<double>(above) / static_cast<double>(excess.size());
  return report;
}

}  // namespace ftmsim
