#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "ftmsim/constellation.hpp"
#include "ftmsim/fft.hpp"
#include "ftmsim/keyschedule.hpp"
#include "ftmsim/util.hpp"
#include "ftmsim/waveform.hpp"

using namespace ftmsim;

namespace {

LtfSeed test_seed(uint8_t fill = 0x42) {
  LtfSeed s;
  for (std::size_t i = 0; i < s.bytes.size(); ++i) {
    s.bytes[i] = static_cast<uint8_t>(fill + 3 * i);
  }
  return s;
}

NdpConfig secure_cfg(int bw = 20, int n_ltf = 1, int os = 1) {
  NdpConfig cfg;
  cfg.bandwidth_mhz = bw;
  cfg.n_ltf = n_ltf;
  cfg.oversample = os;
  cfg.secure = true;
  cfg.gi_mode = GiMode::zero_power;
  return cfg;
}

NdpConfig legacy_cfg(int bw = 20, int n_ltf = 2, int os = 1) {
  NdpConfig cfg;
  cfg.bandwidth_mhz = bw;
  cfg.n_ltf = n_ltf;
  cfg.oversample = os;
  cfg.secure = false;
  cfg.gi_mode = GiMode::cyclic_prefix;
  return cfg;
}

QamSymbolGrid grid_for(const NdpConfig& cfg, const SubcarrierMap& map, uint64_t ctr = 0) {
  return expand_qam_grid(derive_material(test_seed(), ctr), cfg.n_ltf, map.active.size());
}

}  // namespace

TEST_CASE("subcarrier maps have the right active counts") {
  struct Want {
    int bw, fft, active;
  };
  for (const auto& w : {Want{20, 256, 122}, Want{40, 512, 242}, Want{80, 1024, 498}}) {
    const auto map = build_subcarrier_map(w.bw);
    CHECK(map.fft_size == w.fft);
    CHECK(static_cast<int>(map.active.size()) == w.active);
    CHECK(map.active.size() + map.nulled.size() == static_cast<std::size_t>(w.fft));

    std::set<int> act(map.active.begin(), map.active.end());
    for (int k : map.nulled) CHECK(act.count(k) == 0);
    CHECK(act.count(0) == 0);  // DC nulled
    for (int k : map.active) CHECK(k % 2 == 0);
  }
  CHECK_THROWS_AS(build_subcarrier_map(160), UnsupportedBandwidth);
}

TEST_CASE("config validation couples format and GI mode") {
  NdpConfig bad = secure_cfg();
  bad.gi_mode = GiMode::cyclic_prefix;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  NdpConfig bad2 = legacy_cfg();
  bad2.gi_mode = GiMode::zero_power;
  CHECK_THROWS_AS(bad2.validate(), ConfigError);
}

TEST_CASE("secure LTF: zero-power GI and PE, exact") {
  for (int bw : {20, 40, 80}) {
    const auto cfg = secure_cfg(bw, 3, bw == 20 ? 2 : 1);
    const auto map = build_subcarrier_map(bw);
    const auto sig = synth_secure_ltf(cfg, grid_for(cfg, map), map);

    CHECK(sig.size() == cfg.frame_len());
    CHECK(sig.sample_rate_hz == doctest::Approx(cfg.sample_rate_hz()));

    for (int s = 0; s < cfg.n_ltf; ++s) {
      for (std::size_t i = 0; i < cfg.gi_len(); ++i) {
        CHECK(std::abs(sig.samples[s * cfg.symbol_len() + i]) == 0.0);
      }
    }
    for (std::size_t i = sig.size() - cfg.pe_len(); i < sig.size(); ++i) {
      CHECK(std::abs(sig.samples[i]) == 0.0);
    }
  }
}

TEST_CASE("secure LTF: unit mean power over non-GI samples") {
  const auto cfg = secure_cfg(20, 4);
  const auto map = build_subcarrier_map(20);
  const auto sig = synth_secure_ltf(cfg, grid_for(cfg, map), map);
  double acc = 0.0;
  std::size_t count = 0;
  for (int s = 0; s < cfg.n_ltf; ++s) {
    const std::size_t start = s * cfg.symbol_len() + cfg.gi_len();
    for (std::size_t i = 0; i < cfg.body_len(); ++i) {
      acc += std::norm(sig.samples[start + i]);
      ++count;
    }
  }
  CHECK(acc / static_cast<double>(count) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("secure LTF: distinct symbols give distinct bodies") {
  const auto cfg = secure_cfg(20, 2);
  const auto map = build_subcarrier_map(20);
  const auto sig = synth_secure_ltf(cfg, grid_for(cfg, map), map);
  const std::size_t b0 = cfg.gi_len();
  const std::size_t b1 = cfg.symbol_len() + cfg.gi_len();
  double diff = 0.0;
  for (std::size_t i = 0; i < cfg.body_len(); ++i) {
    diff += std::abs(sig.samples[b0 + i] - sig.samples[b1 + i]);
  }
  CHECK(diff > 1.0);
}

TEST_CASE("secure LTF: nulled tones carry no energy") {
  const auto cfg = secure_cfg(20, 1);
  const auto map = build_subcarrier_map(20);
  const auto sig = synth_secure_ltf(cfg, grid_for(cfg, map), map);

  // FFT of the body resolves the even tones of the full frame.
  const std::size_t half = cfg.body_len();
  std::vector<cplx> body(sig.samples.begin() + cfg.gi_len(),
                         sig.samples.begin() + cfg.gi_len() + half);
  const auto spec = fft_forward(body);

  std::set<int> active_bins;
  for (int k : map.active) {
    active_bins.insert(((k / 2) % static_cast<int>(half) + static_cast<int>(half)) %
                       static_cast<int>(half));
  }
  double active_pow = 0.0, null_pow = 0.0;
  for (std::size_t m = 0; m < half; ++m) {
    if (active_bins.count(static_cast<int>(m))) {
      active_pow += std::norm(spec[m]);
    } else {
      null_pow = std::max(null_pow, std::norm(spec[m]));
    }
  }
  active_pow /= static_cast<double>(active_bins.size());
  CHECK(lin_to_db(null_pow / active_pow) < -100.0);
}

TEST_CASE("round trip: demodulation recovers the transmitted tones exactly") {
  const auto cfg = secure_cfg(20, 2);
  const auto map = build_subcarrier_map(20);
  const auto grid = grid_for(cfg, map);
  const auto sig = synth_secure_ltf(cfg, grid, map);
  const auto got = demodulate_ltf(sig, cfg, map);
  const auto want = transmitted_tones(grid, cfg, map);
  REQUIRE(got.size() == want.size());
  for (std::size_t s = 0; s < got.size(); ++s) {
    for (std::size_t i = 0; i < got[s].size(); ++i) {
      CHECK(std::abs(got[s][i] - want[s][i]) <= 1e-9 * std::abs(want[s][i]));
    }
  }
}

TEST_CASE("round trip recovers grid indices under hard decision") {
  const auto cfg = secure_cfg(40, 1);
  const auto map = build_subcarrier_map(40);
  const auto grid = grid_for(cfg, map, 9);
  const auto sig = synth_secure_ltf(cfg, grid, map);
  const auto tones = demodulate_ltf(sig, cfg, map);

  // Undo the common phase and the power normalization before slicing.
  double power = 0.0;
  for (const auto& v : tones[0]) power += std::norm(v);
  const double gain = std::sqrt(power / static_cast<double>(tones[0].size()));
  for (std::size_t i = 0; i < tones[0].size(); ++i) {
    const cplx back = tones[0][i] / gain / std::polar(1.0, grid.beta(0));
    CHECK(qam64::nearest(back) == grid.at(0, i));
  }
}

TEST_CASE("legacy LTF: GI is a verbatim copy of the body tail") {
  const auto cfg = legacy_cfg(20, 3);
  const auto map = build_subcarrier_map(20);
  const auto sig = synth_legacy_ltf(cfg, map);
  CHECK(sig.size() == cfg.frame_len());
  for (int s = 0; s < cfg.n_ltf; ++s) {
    const std::size_t sym = s * cfg.symbol_len();
    for (std::size_t i = 0; i < cfg.gi_len(); ++i) {
      CHECK(sig.samples[sym + i] == sig.samples[sym + cfg.symbol_len() - cfg.gi_len() + i]);
    }
  }
}

TEST_CASE("legacy LTF: repeated symbols are identical vectors") {
  const auto cfg = legacy_cfg(20, 2);
  const auto map = build_subcarrier_map(20);
  const auto sig = synth_legacy_ltf(cfg, map);
  for (std::size_t i = 0; i < cfg.symbol_len(); ++i) {
    CHECK(sig.samples[i] == sig.samples[cfg.symbol_len() + i]);
  }
}

TEST_CASE("legacy LTF: zero energy on guard-band tones") {
  const auto cfg = legacy_cfg(20, 1);
  const auto map = build_subcarrier_map(20);
  const auto sig = synth_legacy_ltf(cfg, map);
  const std::size_t half = cfg.body_len();
  std::vector<cplx> body(sig.samples.begin() + cfg.gi_len(),
                         sig.samples.begin() + cfg.gi_len() + half);
  const auto spec = fft_forward(body);
  // Guard band: |k| > 122 on the full grid -> bins 62..66 around half/2.
  double guard_max = 0.0, active_sum = 0.0;
  for (int k = -128; k < 128; k += 2) {
    if (k == 0) continue;
    const int m = ((k / 2) % static_cast<int>(half) + static_cast<int>(half)) %
                  static_cast<int>(half);
    if (std::abs(k) > 122) {
      guard_max = std::max(guard_max, std::norm(spec[m]));
    } else {
      active_sum += std::norm(spec[m]);
    }
  }
  CHECK(guard_max <= 1e-20 * active_sum);
}

TEST_CASE("demodulation noise level matches the channel noise") {
  // AWGN only (no delay): tone error variance follows from the fold-back
  // window: sum over half+gi sample variances scaled by (2 sqrt(A)/NL)^2.
  const auto cfg = secure_cfg(20, 4);
  const auto map = build_subcarrier_map(20);
  const auto grid = grid_for(cfg, map, 3);
  const auto sig = synth_secure_ltf(cfg, grid, map);
  const auto want = transmitted_tones(grid, cfg, map);

  const double snr_db = 25.0;
  const double sigma2 = db_to_lin(-snr_db);  // body power is 1 by construction
  const double nl = static_cast<double>(cfg.fft_size()) * cfg.oversample;
  const double a = static_cast<double>(map.active.size());
  const double tone_var =
      sigma2 * (4.0 * a / (nl * nl)) * static_cast<double>(cfg.body_len() + cfg.gi_len());

  Rng rng(777);
  double mse = 0.0;
  std::size_t count = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    BasebandSignal noisy = sig;
    for (auto& v : noisy.samples) v += std::sqrt(sigma2) * rng.cgaussian();
    const auto got = demodulate_ltf(noisy, cfg, map);
    for (std::size_t s = 0; s < got.size(); ++s) {
      for (std::size_t i = 0; i < got[s].size(); ++i) {
        mse += std::norm(got[s][i] - want[s][i]);
        ++count;
      }
    }
  }
  mse /= static_cast<double>(count);
  CHECK(mse == doctest::Approx(tone_var).epsilon(0.20));
}

TEST_CASE("demodulating an all-zero signal yields all-zero tones") {
  const auto cfg = secure_cfg(20, 1);
  const auto map = build_subcarrier_map(20);
  BasebandSignal zero;
  zero.sample_rate_hz = cfg.sample_rate_hz();
  zero.samples.assign(cfg.frame_len(), cplx(0.0, 0.0));
  const auto tones = demodulate_ltf(zero, cfg, map);
  for (const auto& row : tones) {
    for (const auto& v : row) CHECK(std::abs(v) == 0.0);
  }
}

TEST_CASE("demodulation rejects short signals") {
  const auto cfg = secure_cfg(20, 2);
  const auto map = build_subcarrier_map(20);
  BasebandSignal shorty;
  shorty.sample_rate_hz = cfg.sample_rate_hz();
  shorty.samples.assign(cfg.frame_len() - 1, cplx(0.0, 0.0));
  CHECK_THROWS_AS(demodulate_ltf(shorty, cfg, map), LengthMismatch);
}
