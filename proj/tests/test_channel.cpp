#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "ftmsim/channel.hpp"
#include "ftmsim/keyschedule.hpp"
#include "ftmsim/util.hpp"
#include "ftmsim/waveform.hpp"

using namespace ftmsim;

namespace {

BasebandSignal test_ltf(int n_ltf = 2, int os = 1) {
  NdpConfig cfg;
  cfg.bandwidth_mhz = 20;
  cfg.n_ltf = n_ltf;
  cfg.oversample = os;
  LtfSeed seed;
  for (std::size_t i = 0; i < seed.bytes.size(); ++i) seed.bytes[i] = static_cast<uint8_t>(i);
  const auto map = build_subcarrier_map(20);
  const auto grid = expand_qam_grid(derive_material(seed, 1), cfg.n_ltf, map.active.size());
  return synth_secure_ltf(cfg, grid, map);
}

double rms(const std::vector<cplx>& x) {
  double acc = 0.0;
  for (const auto& v : x) acc += std::norm(v);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace

TEST_CASE("impulse delayed 10 ns peaks within half a sample") {
  const double fs = 320e6;  // 16x oversampled 20 MHz
  BasebandSignal imp;
  imp.sample_rate_hz = fs;
  imp.samples.assign(64, cplx(0.0, 0.0));
  imp.samples[0] = 1.0;

  ChannelSpec spec;
  spec.delay_s = 10e-9;
  const auto out = propagate(imp, spec);

  std::size_t peak = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (std::abs(out.samples[i]) > best) {
      best = std::abs(out.samples[i]);
      peak = i;
    }
  }
  const double peak_time = static_cast<double>(peak) / fs;
  CHECK(std::abs(peak_time - 10e-9) <= 0.5 / fs);
}

TEST_CASE("zero delay without noise is the identity") {
  const auto sig = test_ltf();
  ChannelSpec spec;  // delay 0, snr inf
  const auto out = propagate(sig, spec);
  REQUIRE(out.size() == sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    CHECK(std::abs(out.samples[i] - sig.samples[i]) <= 1e-9);
  }
}

TEST_CASE("realized SNR matches the requested level within 0.5 dB") {
  const auto sig = test_ltf(8);
  ChannelSpec spec;
  spec.delay_s = 0.0;
  spec.snr_db = 7.0;
  spec.seed = 1234;
  const auto out = propagate(sig, spec);

  // Known clean signal: separate noise from signal exactly.
  REQUIRE(out.size() == sig.size());
  std::vector<cplx> noise(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    noise[i] = out.samples[i] - sig.samples[i];
  }
  const double p_sig = support_power(sig.samples);
  const double p_noise = rms(noise) * rms(noise);
  const double snr_est = lin_to_db(p_sig / p_noise);
  CHECK(snr_est == doctest::Approx(7.0).epsilon(0.07));  // within ~0.5 dB
}

TEST_CASE("noise is reproducible bit-for-bit given the seed") {
  const auto sig = test_ltf();
  ChannelSpec spec;
  spec.delay_s = 3.7e-9;
  spec.snr_db = 10.0;
  spec.seed = 99;
  const auto a = propagate(sig, spec);
  const auto b = propagate(sig, spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].real() == b.samples[i].real());
    CHECK(a.samples[i].imag() == b.samples[i].imag());
  }
}

TEST_CASE("two successive delays compose to their sum") {
  const auto sig = test_ltf(2, 4);
  ChannelSpec d1;
  d1.delay_s = 4.3e-9;
  ChannelSpec d2;
  d2.delay_s = 5.7e-9;
  ChannelSpec d12;
  d12.delay_s = 10e-9;

  const auto two_step = propagate(propagate(sig, d1), d2);
  const auto one_step = propagate(sig, d12);
  const std::size_t n = std::min(two_step.size(), one_step.size());
  std::vector<cplx> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = two_step.samples[i] - one_step.samples[i];
  CHECK(rms(diff) <= 1e-6 * rms(sig.samples));
}

TEST_CASE("replacing the victim with itself is the identity") {
  const auto sig = test_ltf();
  InjectionSpec inj;
  inj.replica = sig;
  inj.offset_s = 0.0;
  inj.cancel_legitimate_from = 0;
  const auto out = inject(sig, inj);
  REQUIRE(out.size() == sig.size());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.samples[i] == sig.samples[i]);
}

TEST_CASE("zero replica with no cancellation is the identity") {
  const auto sig = test_ltf();
  InjectionSpec inj;
  inj.replica.sample_rate_hz = sig.sample_rate_hz;
  inj.replica.samples.assign(sig.size(), cplx(0.0, 0.0));
  const auto out = inject(sig, inj);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.samples[i] == sig.samples[i]);
}

TEST_CASE("injection rejects mismatched sample rates") {
  const auto sig = test_ltf();
  InjectionSpec inj;
  inj.replica = sig;
  inj.replica.sample_rate_hz = 2 * sig.sample_rate_hz;
  CHECK_THROWS_AS(inject(sig, inj), RateMismatch);
}

TEST_CASE("two additive replicas are order-independent") {
  const auto sig = test_ltf();
  auto r1 = sig, r2 = sig;
  for (auto& v : r1.samples) v *= 0.3;
  for (auto& v : r2.samples) v *= cplx(0.0, 0.5);

  InjectionSpec i1{r1, 2.1e-9, std::nullopt};
  InjectionSpec i2{r2, -1.4e-9, std::nullopt};
  const auto ab = inject(inject(sig, i1), i2);
  const auto ba = inject(inject(sig, i2), i1);
  REQUIRE(ab.size() == ba.size());
  for (std::size_t i = 0; i < ab.size(); ++i) {
    CHECK(std::abs(ab.samples[i] - ba.samples[i]) <= 1e-12);
  }
}

TEST_CASE("advanced replica with full cancellation moves the energy onset earlier") {
  const auto sig = test_ltf(1, 16);
  const double fs = sig.sample_rate_hz;  // 320 MHz
  const double advance = 10e-9;          // 3.2 samples

  InjectionSpec inj;
  inj.replica.sample_rate_hz = fs;
  inj.replica.samples = fractional_shift(sig.samples, -advance * fs, sig.size());
  inj.offset_s = 0.0;
  inj.cancel_legitimate_from = 0;
  const auto attacked = inject(sig, inj);

  // Onset oracle: first sample above 30% of the peak magnitude.
  auto onset = [](const std::vector<cplx>& x) {
    double peak = 0.0;
    for (const auto& v : x) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i]) > 0.3 * peak) return static_cast<double>(i);
    }
    return 0.0;
  };
  const double shift_samples = onset(sig.samples) - onset(attacked.samples);
  CHECK(shift_samples == doctest::Approx(advance * fs).epsilon(0.5));
}
