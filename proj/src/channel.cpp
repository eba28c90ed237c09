#include "ftmsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ftmsim/fft.hpp"
#include "ftmsim/util.hpp"

namespace ftmsim {

std::vector<cplx> fractional_shift(const std::vector<cplx>& x, double shift_samples,
                                   std::size_t out_len) {
  if (x.empty()) return std::vector<cplx>(out_len, cplx(0.0, 0.0));
  // Head room keeps interpolation tails that spill before t=0 from wrapping
  // to the end of the field, where they would contaminate later shifts.
  const std::size_t shift_mag = static_cast<std::size_t>(std::ceil(std::abs(shift_samples)));
  const std::size_t head = 128 + (shift_samples < 0.0 ? shift_mag : 0);
  const std::size_t tail = 128 + (shift_samples > 0.0 ? shift_mag : 0);
  const std::size_t n = next_pow2(head + std::max(out_len, x.size()) + tail);

  std::vector<cplx> padded(n, cplx(0.0, 0.0));
  std::copy(x.begin(), x.end(), padded.begin() + head);
  auto spec = fft_forward(padded);
  for (std::size_t k = 0; k < n; ++k) {
    // Signed frequency index; the Nyquist bin gets the symmetric real factor.
    const double kf = (k <= n / 2) ? static_cast<double>(k)
                                   : static_cast<double>(k) - static_cast<double>(n);
    if (k == n / 2) {
      spec[k] *= std::cos(std::numbers::pi * shift_samples);
    } else {
      const double phase = -2.0 * std::numbers::pi * kf * shift_samples / static_cast<double>(n);
      spec[k] *= std::polar(1.0, phase);
    }
  }
  const auto shifted = fft_inverse(spec);
  std::vector<cplx> out(out_len, cplx(0.0, 0.0));
  const std::size_t avail = std::min(out_len, n - head);
  std::copy(shifted.begin() + head, shifted.begin() + head + avail, out.begin());
  return out;
}

double support_power(const std::vector<cplx>& x) {
  double peak = 0.0;
  for (const auto& v : x) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) return 0.0;
  const double thresh = 0.05 * peak;
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& v : x) {
    if (std::abs(v) > thresh) {
      acc += std::norm(v);
      ++count;
    }
  }
  return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

BasebandSignal propagate(const BasebandSignal& signal, const ChannelSpec& spec) {
  if (signal.empty()) throw EmptySignal("propagate: empty input");
  const double fs = signal.sample_rate_hz;
  const double shift = spec.delay_s * fs;
  if (std::ceil(std::abs(shift)) >= static_cast<double>(signal.size())) {
    throw ConfigError("propagate: delay exceeds the signal duration");
  }

  // Phase ramp on the input grid: exact, and exactly compositional. Content
  // shifted past the end wraps to the front, which is harmless as long as
  // the delay stays within the trailing quiet region (PE pad).
  BasebandSignal out;
  out.sample_rate_hz = fs;
  if (shift == 0.0) {
    out.samples = signal.samples;
  } else {
    const std::size_t n = signal.size();
    auto spec_f = fft_forward(signal.samples);
    for (std::size_t k = 0; k < n; ++k) {
      const double kf = (k <= n / 2) ? static_cast<double>(k)
                                     : static_cast<double>(k) - static_cast<double>(n);
      if (n % 2 == 0 && k == n / 2) {
        spec_f[k] *= std::cos(2.0 * std::numbers::pi * kf * shift / static_cast<double>(n));
      } else {
        spec_f[k] *=
            std::polar(1.0, -2.0 * std::numbers::pi * kf * shift / static_cast<double>(n));
      }
    }
    out.samples = fft_inverse(spec_f);
  }

  if (std::isfinite(spec.snr_db)) {
    const double psig = support_power(out.samples);
    const double sigma2 = psig * db_to_lin(-spec.snr_db);
    const double sigma = std::sqrt(sigma2);
    Rng rng(Rng::derive(spec.seed, 0x6368616eULL));  // channel noise stream
    for (auto& v : out.samples) v += sigma * rng.cgaussian();
  }
  return out;
}

BasebandSignal inject(const BasebandSignal& victim, const InjectionSpec& inj) {
  if (inj.replica.sample_rate_hz != victim.sample_rate_hz) {
    throw RateMismatch("inject: replica sample rate differs from victim");
  }
  BasebandSignal out = victim;
  if (inj.cancel_legitimate_from && *inj.cancel_legitimate_from < out.size()) {
    std::fill(out.samples.begin() + *inj.cancel_legitimate_from, out.samples.end(),
              cplx(0.0, 0.0));
  }
  const double shift = inj.offset_s * victim.sample_rate_hz;
  std::vector<cplx> contribution;
  if (shift == 0.0) {
    contribution = inj.replica.samples;
    contribution.resize(out.size(), cplx(0.0, 0.0));
  } else {
    contribution = fractional_shift(inj.replica.samples, shift, out.size());
  }
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += contribution[i];
  return out;
}

}  // namespace ftmsim
