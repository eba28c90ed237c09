#include "ftmsim/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ftmsim/constellation.hpp"
#include "ftmsim/fft.hpp"

#include "json.hpp"

namespace ftmsim {

void NdpConfig::validate() const {
  if (bandwidth_mhz != 20 && bandwidth_mhz != 40 && bandwidth_mhz != 80) {
    throw UnsupportedBandwidth("bandwidth must be 20, 40 or 80 MHz, got " +
                               std::to_string(bandwidth_mhz));
  }
  if (n_ltf < 1) throw ConfigError("n_ltf must be >= 1");
  if (oversample < 1) throw ConfigError("oversample must be >= 1");
  if (secure && gi_mode != GiMode::zero_power) {
    throw ConfigError("secure format requires the zero-power GI");
  }
  if (!secure && gi_mode != GiMode::cyclic_prefix) {
    throw ConfigError("legacy format requires the cyclic-prefix GI");
  }
}

int NdpConfig::fft_size() const {
  switch (bandwidth_mhz) {
    case 20: return 256;
    case 40: return 512;
    case 80: return 1024;
    default:
      throw UnsupportedBandwidth("bandwidth must be 20, 40 or 80 MHz, got " +
                                 std::to_string(bandwidth_mhz));
  }
}

int NdpConfig::n_active() const {
  switch (bandwidth_mhz) {
    case 20: return 122;
    case 40: return 242;
    case 80: return 498;
    default:
      throw UnsupportedBandwidth("bandwidth must be 20, 40 or 80 MHz, got " +
                                 std::to_string(bandwidth_mhz));
  }
}

SubcarrierMap build_subcarrier_map(int bandwidth_mhz) {
  NdpConfig probe;
  probe.bandwidth_mhz = bandwidth_mhz;
  const int fft = probe.fft_size();
  const int n_active = probe.n_active();

  SubcarrierMap map;
  map.fft_size = fft;
  for (int k = -fft / 2; k < fft / 2; ++k) {
    const bool active = (k != 0) && (k % 2 == 0) && (std::abs(k) <= n_active);
    if (active) {
      map.active.push_back(k);
    } else {
      map.nulled.push_back(k);
    }
  }
  return map;
}

// Only even tones are populated, so the discarded second half of the IFFT
// frame is a repetition of the transmitted first half.
std::vector<cplx> synth_body_from_tones(const std::vector<cplx>& tone_values,
                                        const NdpConfig& cfg, const SubcarrierMap& map) {
  const std::size_t nl = static_cast<std::size_t>(cfg.fft_size()) * cfg.oversample;
  std::vector<cplx> freq(nl, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < map.active.size(); ++i) {
    const int k = map.active[i];
    const std::size_t bin = static_cast<std::size_t>((k + static_cast<int>(nl)) % static_cast<int>(nl));
    freq[bin] = tone_values[i];
  }
  std::vector<cplx> time = fft_inverse(freq);
  const double scale = static_cast<double>(nl) / std::sqrt(static_cast<double>(map.active.size()));
  std::vector<cplx> body(time.begin(), time.begin() + nl / 2);
  for (auto& v : body) v *= scale;
  return body;
}

std::vector<std::vector<cplx>> transmitted_tones(const QamSymbolGrid& grid, const NdpConfig& cfg,
                                                 const SubcarrierMap& map) {
  if (grid.n_active != map.active.size() ||
      grid.n_ltf != static_cast<std::size_t>(cfg.n_ltf)) {
    throw DimensionMismatch("QAM grid dimensions do not match config/map");
  }
  double power_sum = 0.0;
  for (uint8_t idx : grid.symbols) power_sum += std::norm(qam64::point(idx));
  const double gain = 1.0 / std::sqrt(power_sum / static_cast<double>(grid.symbols.size()));

  std::vector<std::vector<cplx>> tones(grid.n_ltf);
  for (std::size_t s = 0; s < grid.n_ltf; ++s) {
    const cplx rot = std::polar(gain, grid.beta(s));
    tones[s].resize(grid.n_active);
    for (std::size_t k = 0; k < grid.n_active; ++k) {
      tones[s][k] = rot * qam64::point(grid.at(s, k));
    }
  }
  return tones;
}

std::vector<double> legacy_tone_pattern(const SubcarrierMap& map) {
  // LFSR x^7 + x^4 + 1, all-ones start; one sign bit per active tone.
  std::vector<double> pattern(map.active.size());
  uint8_t lfsr = 0x7f;
  for (auto& p : pattern) {
    const uint8_t bit = ((lfsr >> 6) ^ (lfsr >> 3)) & 1u;
    lfsr = static_cast<uint8_t>(((lfsr << 1) | bit) & 0x7f);
    p = bit ? -1.0 : 1.0;
  }
  return pattern;
}

BasebandSignal synth_secure_ltf(const NdpConfig& cfg, const QamSymbolGrid& grid,
                                const SubcarrierMap& map) {
  cfg.validate();
  if (!cfg.secure) throw ConfigError("synth_secure_ltf requires cfg.secure = true");
  const auto tones = transmitted_tones(grid, cfg, map);

  BasebandSignal sig;
  sig.sample_rate_hz = cfg.sample_rate_hz();
  sig.samples.assign(cfg.frame_len(), cplx(0.0, 0.0));
  for (int s = 0; s < cfg.n_ltf; ++s) {
    const auto body = synth_body_from_tones(tones[s], cfg, map);
    const std::size_t body_start = s * cfg.symbol_len() + cfg.gi_len();
    std::copy(body.begin(), body.end(), sig.samples.begin() + body_start);
  }
  // GI intervals and the PE pad stay exactly zero.
  return sig;
}

BasebandSignal synth_legacy_ltf(const NdpConfig& cfg, const SubcarrierMap& map) {
  cfg.validate();
  if (cfg.secure) throw ConfigError("synth_legacy_ltf requires cfg.secure = false");
  const auto pattern = legacy_tone_pattern(map);
  std::vector<cplx> tone_values(pattern.begin(), pattern.end());
  const auto body = synth_body_from_tones(tone_values, cfg, map);

  BasebandSignal sig;
  sig.sample_rate_hz = cfg.sample_rate_hz();
  sig.samples.assign(cfg.frame_len(), cplx(0.0, 0.0));
  for (int s = 0; s < cfg.n_ltf; ++s) {
    const std::size_t sym_start = s * cfg.symbol_len();
    const std::size_t body_start = sym_start + cfg.gi_len();
    std::copy(body.begin(), body.end(), sig.samples.begin() + body_start);
    // Cyclic prefix: verbatim copy of the body tail.
    std::copy(body.end() - cfg.gi_len(), body.end(), sig.samples.begin() + sym_start);
  }
  return sig;
}

std::vector<std::vector<cplx>> demodulate_ltf(const BasebandSignal& signal, const NdpConfig& cfg,
                                              const SubcarrierMap& map) {
  cfg.validate();
  if (signal.size() < cfg.frame_len()) {
    throw LengthMismatch("signal shorter than the configured frame");
  }
  const std::size_t nl = static_cast<std::size_t>(cfg.fft_size()) * cfg.oversample;
  const std::size_t half = nl / 2;
  const double scale = 2.0 * std::sqrt(static_cast<double>(map.active.size())) /
                       static_cast<double>(nl);

  std::vector<std::vector<cplx>> out(cfg.n_ltf);
  for (int s = 0; s < cfg.n_ltf; ++s) {
    const std::size_t body_start = s * cfg.symbol_len() + cfg.gi_len();
    std::vector<cplx> body(signal.samples.begin() + body_start,
                           signal.samples.begin() + body_start + half);
    if (cfg.gi_mode == GiMode::zero_power) {
      // The region after the body (next GI or PE) is zero-power at the
      // transmitter, so a delayed body tail spills into it. Overlap-adding
      // it back restores circular convolution for delay spreads shorter
      // than the GI, exactly as in a zero-padded OFDM receiver.
      const std::size_t fold = std::min(cfg.gi_len(), signal.size() - body_start - half);
      for (std::size_t i = 0; i < fold; ++i) {
        body[i] += signal.samples[body_start + half + i];
      }
    }
    const auto spec = fft_forward(body);
    out[s].resize(map.active.size());
    for (std::size_t i = 0; i < map.active.size(); ++i) {
      const int k = map.active[i];
      // Even tone k of the full frame lands on bin k/2 of the half-length FFT.
      const int m = ((k / 2) % static_cast<int>(half) + static_cast<int>(half)) %
                    static_cast<int>(half);
      out[s][i] = spec[static_cast<std::size_t>(m)] * scale;
    }
  }
  return out;
}

void export_iq(const BasebandSignal& signal, const std::string& path_base,
               const std::string& config_hash) {
  std::ofstream bin(path_base + ".iq", std::ios::binary);
  if (!bin) throw SimError("cannot open " + path_base + ".iq for writing");
  for (const cplx& v : signal.samples) {
    const float re = static_cast<float>(v.real());
    const float im = static_cast<float>(v.imag());
    bin.write(reinterpret_cast<const char*>(&re), sizeof(float));
    bin.write(reinterpret_cast<const char*>(&im), sizeof(float));
  }
  bin.close();

  nlohmann::json sidecar;
  sidecar["sample_rate_hz"] = signal.sample_rate_hz;
  sidecar["n_samples"] = signal.samples.size();
  sidecar["format"] = "interleaved float32 little-endian I/Q";
  sidecar["config_sha256"] = config_hash;
  std::ofstream meta(path_base + ".json");
  if (!meta) throw SimError("cannot open " + path_base + ".json for writing");
  meta << sidecar.dump(2) << "\n";
}

}  // namespace ftmsim
