#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

#include "ftmsim/channel.hpp"
#include "ftmsim/common.hpp"
#include "ftmsim/estimation.hpp"
#include "ftmsim/keyschedule.hpp"
#include "ftmsim/waveform.hpp"

namespace ftmsim {

/// Prefix of one LTF symbol's body as seen by the attacker, plus the SNR at
/// which it was observed. M = round(fraction * body length) samples.
struct ObservationWindow {
  double fraction = 1.0;
  std::vector<cplx> observed;
  double snr_db = 7.0;
};

/// Approximate per-tone symbol marginals and the common-phase marginal,
/// with their MAP decisions and the summary statistics used for reporting.
/// Entropy and NLL are in nats, averaged over tones.
struct PosteriorSummary {
  std::size_t n_tones = 0;
  std::size_t alphabet_size = 0;
  std::vector<double> symbol_pmfs;  // n_tones * alphabet_size, row-major
  std::array<double, 2> beta_pmf{0.5, 0.5};
  std::vector<uint16_t> map_symbols;
  int beta_map = 0;
  double nll = 0.0;      // only meaningful when scored against ground truth
  double entropy = 0.0;  // mean per-tone posterior entropy

  double pmf(std::size_t tone, std::size_t sym) const {
    return symbol_pmfs[tone * alphabet_size + sym];
  }
  double tone_entropy(std::size_t tone) const;
  /// Mean -log posterior mass of the given ground-truth symbols.
  double score_nll(const std::vector<uint16_t>& truth) const;
};

struct InferenceParams {
  int n_particles = 300;
  int n_iter = 10;
  uint64_t seed = 0;
  double snr_cap_db = 60.0;  // likelihood noise floor for noise-free inputs
};

/// A generic linear-mixing inference instance: y = mixing * (e^{i beta} x) + w
/// with x drawn per-tone from a finite alphabet and beta from a small set.
struct InferenceProblem {
  Eigen::MatrixXcd mixing;      // M_obs x n_tones
  std::vector<cplx> alphabet;
  std::vector<double> betas;    // candidate common phases
  double sigma2 = 0.1;          // complex noise variance
};

/// Particle message passing over the factor graph of the observation model:
/// a population of joint assignments is evolved through likelihood-weighted
/// stages over the observed samples (systematic resampling each stage)
/// with per-tone conditional moves, and marginals are read out by averaging
/// the per-tone conditionals over the population.
PosteriorSummary infer_marginals(const InferenceProblem& problem, const std::vector<cplx>& y_obs,
                                 const InferenceParams& params);

/// 64-QAM instance built from the NDP layout; observation is the body
/// prefix of a single secure LTF symbol.
PosteriorSummary infer_posterior(const ObservationWindow& obs, const NdpConfig& cfg,
                                 const SubcarrierMap& map, const InferenceParams& params);

/// MAP re-synthesis of the full symbol body.
std::vector<cplx> resynth_body_map(const PosteriorSummary& post, const NdpConfig& cfg,
                                   const SubcarrierMap& map);

/// MAP prediction restricted to the unobserved sample range.
BasebandSignal predict_remainder(const PosteriorSummary& post, const ObservationWindow& obs,
                                 const NdpConfig& cfg, const SubcarrierMap& map);

enum class AttackMode : uint8_t { full_knowledge, partial };

struct AttackScenario {
  AttackMode mode = AttackMode::partial;
  double fraction = 0.5;      // observed fraction (partial mode)
  double advance_s = 0.0;     // positive advances the replica (reduces distance)
  double snr_db = 25.0;
  uint64_t seed = 0;
  double true_distance_m = 15.0;
  NdpConfig cfg{};            // secure single-symbol 20 MHz by default
  InferenceParams inference{};
  MusicParams music{-100.0, 500.0, 0.05, 0.5, 0.10, 0, false};
  double evm_threshold_percent = 8.0;
  bool run_music = true;      // EVM-only sweeps can skip the estimator
};

struct AttackResult {
  double advance_s = 0.0;
  double observed_fraction = 1.0;
  double distance_bias_m = 0.0;  // one-way: positive advance => negative bias
  double evm_percent = 0.0;
  bool demod_ok = false;
  double toa_baseline_s = 0.0;
  double toa_attacked_s = 0.0;
};

/// Synthesizes a victim exchange, injects the (exact or predicted) advanced
/// replica and reports the MUSIC distance bias against the un-attacked
/// baseline, plus post-demodulation EVM.
AttackResult run_distance_attack(const AttackScenario& scenario);

}  // namespace ftmsim
