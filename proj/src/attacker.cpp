#include "ftmsim/attacker.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ftmsim/constellation.hpp"
#include "ftmsim/util.hpp"

namespace ftmsim {

double PosteriorSummary::tone_entropy(std::size_t tone) const {
  double h = 0.0;
  for (std::size_t c = 0; c < alphabet_size; ++c) {
    const double p = pmf(tone, c);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double PosteriorSummary::score_nll(const std::vector<uint16_t>& truth) const {
  if (truth.size() != n_tones) throw ShapeMismatch("score_nll: truth size mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < n_tones; ++k) {
    acc += -std::log(std::max(pmf(k, truth[k]), 1e-300));
  }
  return acc / static_cast<double>(n_tones);
}

namespace {

// Draws one index from unnormalized log-scores.
std::size_t sample_softmax(const std::vector<double>& logscore, Rng& rng,
                           std::vector<double>& scratch) {
  const std::size_t n = logscore.size();
  double mx = -1e300;
  for (double v : logscore) mx = std::max(mx, v);
  if (!std::isfinite(mx)) throw DegenerateWeights("all particle weights underflowed");
  scratch.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += std::exp(logscore[i] - mx);
    scratch[i] = total;
  }
  const double u = rng.uniform() * total;
  return static_cast<std::size_t>(
      std::lower_bound(scratch.begin(), scratch.end(), u) - scratch.begin());
}

void softmax_into(const std::vector<double>& logscore, std::vector<double>& out) {
  const std::size_t n = logscore.size();
  out.resize(n);
  double mx = -1e300;
  for (double v : logscore) mx = std::max(mx, v);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(logscore[i] - mx);
    total += out[i];
  }
  for (auto& v : out) v /= total;
}

}  // namespace

namespace {

struct FixedBetaResult {
  std::vector<double> pmf;  // n_tones * n_alpha
  double log_evidence = 0.0;
};

// SMC over the observed samples for one fixed common phase: stage weights
// over each data chunk, systematic resampling, then a per-tone conditional
// (Gibbs) sweep; marginals are population averages of the conditionals and
// the accumulated normalizers give the phase's marginal likelihood.
FixedBetaResult run_fixed_beta(const InferenceProblem& problem,
                               const Eigen::VectorXcd& y_derot, std::size_t n_part,
                               int n_stages, Rng& rng) {
  const std::size_t m_obs = static_cast<std::size_t>(y_derot.size());
  const std::size_t n_tones = static_cast<std::size_t>(problem.mixing.cols());
  const std::size_t n_alpha = problem.alphabet.size();
  const double sigma2 = problem.sigma2;

  std::vector<uint8_t> sym(n_part * n_tones);
  Eigen::MatrixXcd raw(m_obs, n_part);
  for (std::size_t p = 0; p < n_part; ++p) {
    Eigen::VectorXcd x(n_tones);
    for (std::size_t k = 0; k < n_tones; ++k) {
      const uint8_t c = static_cast<uint8_t>(rng.uniform_int(n_alpha));
      sym[p * n_tones + k] = c;
      x(k) = problem.alphabet[c];
    }
    raw.col(p) = problem.mixing * x;
  }

  std::vector<double> logw(n_part), scratch, cond, cond_prob;

  auto gibbs_sweep = [&](std::size_t e, std::vector<double>* pmf_acc) {
    for (std::size_t k = 0; k < n_tones; ++k) {
      const Eigen::VectorXcd fk = problem.mixing.col(k);
      const double f_energy = fk.head(e).squaredNorm();
      for (std::size_t p = 0; p < n_part; ++p) {
        const uint8_t old_c = sym[p * n_tones + k];
        // z = <f_k, y - model_without_tone_k>_e
        cplx z = (fk.head(e).conjugate().array() *
                  (y_derot.head(e) - raw.col(p).head(e)).array())
                     .sum();
        z += problem.alphabet[old_c] * f_energy;

        cond.resize(n_alpha);
        for (std::size_t c = 0; c < n_alpha; ++c) {
          const cplx a = problem.alphabet[c];
          cond[c] = (2.0 * (std::conj(a) * z).real() - std::norm(a) * f_energy) / sigma2;
        }
        if (pmf_acc != nullptr) {
          softmax_into(cond, cond_prob);
          for (std::size_t c = 0; c < n_alpha; ++c) {
            (*pmf_acc)[k * n_alpha + c] += cond_prob[c];
          }
        }
        const std::size_t new_c = sample_softmax(cond, rng, scratch);
        if (new_c != old_c) {
          sym[p * n_tones + k] = static_cast<uint8_t>(new_c);
          raw.col(p) += (problem.alphabet[new_c] - problem.alphabet[old_c]) * fk;
        }
      }
    }
  };

  FixedBetaResult result;
  std::size_t prev_end = 0;
  for (int stage = 1; stage <= n_stages; ++stage) {
    const std::size_t end =
        static_cast<std::size_t>(std::llround(static_cast<double>(m_obs) * stage / n_stages));
    if (end == prev_end && stage < n_stages) continue;

    for (std::size_t p = 0; p < n_part; ++p) {
      double acc = 0.0;
      for (std::size_t n = prev_end; n < end; ++n) {
        acc += std::norm(y_derot(n) - raw(n, p));
      }
      logw[p] = -acc / sigma2;
    }
    double mx = -1e300;
    for (double v : logw) mx = std::max(mx, v);
    if (!std::isfinite(mx)) throw DegenerateWeights("all particle weights underflowed");

    double total = 0.0;
    std::vector<double> cum(n_part);
    for (std::size_t p = 0; p < n_part; ++p) {
      total += std::exp(logw[p] - mx);
      cum[p] = total;
    }
    // Unbiased per-stage normalizer; the product over stages estimates the
    // marginal likelihood of this phase hypothesis.
    result.log_evidence += mx + std::log(total / static_cast<double>(n_part));

    const double step = total / static_cast<double>(n_part);
    double u = rng.uniform() * step;
    std::vector<uint32_t> pick(n_part);
    std::size_t j = 0;
    for (std::size_t p = 0; p < n_part; ++p) {
      while (j + 1 < n_part && cum[j] < u) ++j;
      pick[p] = static_cast<uint32_t>(j);
      u += step;
    }
    std::vector<uint8_t> new_sym(n_part * n_tones);
    Eigen::MatrixXcd new_raw(m_obs, n_part);
    for (std::size_t p = 0; p < n_part; ++p) {
      std::copy_n(sym.begin() + pick[p] * n_tones, n_tones, new_sym.begin() + p * n_tones);
      new_raw.col(p) = raw.col(pick[p]);
    }
    sym.swap(new_sym);
    raw.swap(new_raw);

    gibbs_sweep(end, nullptr);
    prev_end = end;
  }

  result.pmf.assign(n_tones * n_alpha, 0.0);
  gibbs_sweep(m_obs, &result.pmf);
  const double inv_p = 1.0 / static_cast<double>(n_part);
  for (auto& v : result.pmf) v *= inv_p;
  return result;
}

}  // namespace

PosteriorSummary infer_marginals(const InferenceProblem& problem, const std::vector<cplx>& y_obs,
                                 const InferenceParams& params) {
  const std::size_t m_obs = y_obs.size();
  const std::size_t n_tones = static_cast<std::size_t>(problem.mixing.cols());
  const std::size_t n_alpha = problem.alphabet.size();
  const std::size_t n_beta = problem.betas.size();

  if (m_obs == 0) throw EmptySignal("infer_marginals: no observed samples");
  if (static_cast<std::size_t>(problem.mixing.rows()) != m_obs) {
    throw DimensionMismatch("infer_marginals: mixing rows != observed samples");
  }
  if (n_beta < 1 || n_beta > 2) throw ConfigError("expected one or two phase candidates");
  for (const cplx& v : y_obs) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw DegenerateWeights("observation contains non-finite samples");
    }
  }

  // One sub-population per phase candidate; the phase posterior comes from
  // the SMC evidence of each hypothesis, so a wrong phase can never lock
  // the whole population in.
  const std::size_t total_particles = static_cast<std::size_t>(std::max(1, params.n_particles));
  const std::size_t per_beta = std::max<std::size_t>(1, total_particles / n_beta);
  const int n_stages = std::max(1, params.n_iter);

  std::vector<FixedBetaResult> results(n_beta);
  std::vector<double> log_ev(n_beta);
  for (std::size_t b = 0; b < n_beta; ++b) {
    Eigen::VectorXcd y_derot(m_obs);
    const cplx r = std::polar(1.0, -problem.betas[b]);
    for (std::size_t n = 0; n < m_obs; ++n) y_derot(n) = r * y_obs[n];
    Rng rng(Rng::derive(params.seed, 0x696e666572ULL, b));
    results[b] = run_fixed_beta(problem, y_derot, per_beta, n_stages, rng);
    log_ev[b] = results[b].log_evidence;
  }

  PosteriorSummary post;
  post.n_tones = n_tones;
  post.alphabet_size = n_alpha;

  double ev_max = -1e300;
  for (double v : log_ev) ev_max = std::max(ev_max, v);
  double ev_total = 0.0;
  std::vector<double> beta_w(n_beta);
  for (std::size_t b = 0; b < n_beta; ++b) {
    beta_w[b] = std::exp(log_ev[b] - ev_max);
    ev_total += beta_w[b];
  }
  for (auto& w : beta_w) w /= ev_total;
  post.beta_pmf = {beta_w[0], n_beta > 1 ? beta_w[1] : 0.0};

  post.symbol_pmfs.assign(n_tones * n_alpha, 0.0);
  for (std::size_t b = 0; b < n_beta; ++b) {
    for (std::size_t i = 0; i < post.symbol_pmfs.size(); ++i) {
      post.symbol_pmfs[i] += beta_w[b] * results[b].pmf[i];
    }
  }

  post.map_symbols.resize(n_tones);
  double entropy_acc = 0.0;
  for (std::size_t k = 0; k < n_tones; ++k) {
    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t c = 0; c < n_alpha; ++c) {
      if (post.pmf(k, c) > best_p) {
        best_p = post.pmf(k, c);
        best = c;
      }
    }
    post.map_symbols[k] = static_cast<uint16_t>(best);
    entropy_acc += post.tone_entropy(k);
  }
  post.entropy = entropy_acc / static_cast<double>(n_tones);
  post.beta_map = post.beta_pmf[1] > post.beta_pmf[0] ? 1 : 0;
  return post;
}

namespace {

InferenceProblem build_ndp_problem(std::size_t m_obs, double snr_db, double snr_cap_db,
                                   const NdpConfig& cfg, const SubcarrierMap& map) {
  InferenceProblem prob;
  const std::size_t nl = static_cast<std::size_t>(cfg.fft_size()) * cfg.oversample;
  const double inv_sqrt_a = 1.0 / std::sqrt(static_cast<double>(map.active.size()));
  prob.mixing.resize(m_obs, map.active.size());
  for (std::size_t j = 0; j < map.active.size(); ++j) {
    const double w = 2.0 * std::numbers::pi * map.active[j] / static_cast<double>(nl);
    for (std::size_t n = 0; n < m_obs; ++n) {
      prob.mixing(n, j) = std::polar(inv_sqrt_a, w * static_cast<double>(n));
    }
  }
  const auto& pts = qam64::points();
  prob.alphabet.assign(pts.begin(), pts.end());
  prob.betas = {0.0, std::numbers::pi / 4.0};
  prob.sigma2 = db_to_lin(-std::min(snr_db, snr_cap_db));
  return prob;
}

}  // namespace

PosteriorSummary infer_posterior(const ObservationWindow& obs, const NdpConfig& cfg,
                                 const SubcarrierMap& map, const InferenceParams& params) {
  if (obs.fraction <= 0.0 || obs.fraction > 1.0) {
    throw ConfigError("observation fraction must be in (0, 1]");
  }
  if (obs.observed.empty()) throw EmptySignal("infer_posterior: empty observation");
  const auto problem =
      build_ndp_problem(obs.observed.size(), obs.snr_db, params.snr_cap_db, cfg, map);
  return infer_marginals(problem, obs.observed, params);
}

std::vector<cplx> resynth_body_map(const PosteriorSummary& post, const NdpConfig& cfg,
                                   const SubcarrierMap& map) {
  if (post.map_symbols.size() != map.active.size()) {
    throw DimensionMismatch("resynth_body_map: posterior/map tone count mismatch");
  }
  std::vector<cplx> tones(map.active.size());
  const cplx rot = std::polar(1.0, post.beta_map == 1 ? std::numbers::pi / 4.0 : 0.0);
  for (std::size_t k = 0; k < tones.size(); ++k) {
    tones[k] = rot * qam64::point(post.map_symbols[k]);
  }
  return synth_body_from_tones(tones, cfg, map);
}

BasebandSignal predict_remainder(const PosteriorSummary& post, const ObservationWindow& obs,
                                 const NdpConfig& cfg, const SubcarrierMap& map) {
  const auto body = resynth_body_map(post, cfg, map);
  const std::size_t m_obs = obs.observed.size();
  BasebandSignal out;
  out.sample_rate_hz = cfg.sample_rate_hz();
  if (m_obs < body.size()) {
    out.samples.assign(body.begin() + m_obs, body.end());
  }
  return out;
}

AttackResult run_distance_attack(const AttackScenario& scenario) {
  NdpConfig cfg = scenario.cfg;
  cfg.secure = true;
  cfg.gi_mode = GiMode::zero_power;
  cfg.validate();
  if (std::abs(scenario.advance_s) > 100e-9) {
    throw ConfigError("attack advance must stay within +/-100 ns");
  }

  const auto map = build_subcarrier_map(cfg.bandwidth_mhz);

  // Per-run keying material: seed bytes drawn from the scenario seed.
  LtfSeed ltf_seed;
  {
    Rng srng(Rng::derive(scenario.seed, 0x7365656400ULL));
    for (auto& b : ltf_seed.bytes) b = static_cast<uint8_t>(srng.next_u64() & 0xff);
  }
  const auto material = derive_material(ltf_seed, 0);
  const auto grid = expand_qam_grid(material, cfg.n_ltf, map.active.size());
  const auto clean = synth_secure_ltf(cfg, grid, map);

  const double fs = cfg.sample_rate_hz();
  const double tau0 = scenario.true_distance_m / kSpeedOfLight;
  const double shift0 = tau0 * fs;
  const std::size_t out_len =
      clean.size() + static_cast<std::size_t>(std::ceil(shift0)) + 32;

  BasebandSignal legit;
  legit.sample_rate_hz = fs;
  legit.samples = fractional_shift(clean.samples, shift0, out_len);

  // Shared noise realization so baseline and attacked runs are paired.
  const double sigma =
      std::sqrt(support_power(legit.samples) * db_to_lin(-scenario.snr_db));
  std::vector<cplx> noise(out_len);
  {
    Rng nrng(Rng::derive(scenario.seed, 0x6e6f697365ULL));
    for (auto& v : noise) v = sigma * nrng.cgaussian();
  }
  auto add_noise = [&](const BasebandSignal& s) {
    BasebandSignal r = s;
    for (std::size_t i = 0; i < r.size(); ++i) r.samples[i] += noise[i];
    return r;
  };

  const BasebandSignal baseline = add_noise(legit);

  BasebandSignal attacked;
  double observed_fraction = 1.0;
  if (scenario.mode == AttackMode::full_knowledge) {
    // Exact replica, advanced; legitimate path fully replaced.
    BasebandSignal replica;
    replica.sample_rate_hz = fs;
    replica.samples =
        fractional_shift(clean.samples, shift0 - scenario.advance_s * fs, out_len);
    InjectionSpec inj;
    inj.replica = std::move(replica);
    inj.offset_s = 0.0;
    inj.cancel_legitimate_from = 0;
    attacked = add_noise(inject(legit, inj));
  } else {
    observed_fraction = scenario.fraction;
    const std::size_t body_len = cfg.body_len();
    const std::size_t m_obs = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(scenario.fraction * body_len)));
    if (m_obs >= body_len) throw ConfigError("partial attack requires fraction < 1");

    // The attacker observes the clean body prefix at its own SNR.
    ObservationWindow obs;
    obs.fraction = scenario.fraction;
    obs.snr_db = scenario.snr_db;
    obs.observed.resize(m_obs);
    {
      Rng orng(Rng::derive(scenario.seed, 0x6f627334ULL));
      const double osigma = std::sqrt(db_to_lin(-scenario.snr_db));
      const std::size_t body_start = cfg.gi_len();
      for (std::size_t i = 0; i < m_obs; ++i) {
        obs.observed[i] = clean.samples[body_start + i] + osigma * orng.cgaussian();
      }
    }
    InferenceParams inf = scenario.inference;
    inf.seed = Rng::derive(scenario.seed, 0x696e66ULL);
    const auto post = infer_posterior(obs, cfg, map, inf);
    const auto body_hat = resynth_body_map(post, cfg, map);

    // Predicted frame, shifted to arrive advance_s earlier than legitimate.
    BasebandSignal predicted;
    predicted.sample_rate_hz = fs;
    predicted.samples.assign(cfg.frame_len(), cplx(0.0, 0.0));
    std::copy(body_hat.begin(), body_hat.end(), predicted.samples.begin() + cfg.gi_len());
    std::vector<cplx> replica_shifted = fractional_shift(
        predicted.samples, shift0 - scenario.advance_s * fs, out_len);

    // Receiver-side takeover point: once the attacker has seen M samples.
    const std::size_t t_m = static_cast<std::size_t>(
        std::llround(shift0 + static_cast<double>(cfg.gi_len() + m_obs)));
    std::fill(replica_shifted.begin(),
              replica_shifted.begin() + std::min(t_m, replica_shifted.size()),
              cplx(0.0, 0.0));

    BasebandSignal replica;
    replica.sample_rate_hz = fs;
    replica.samples = std::move(replica_shifted);
    InjectionSpec inj;
    inj.replica = std::move(replica);
    inj.offset_s = 0.0;
    inj.cancel_legitimate_from = t_m;
    attacked = add_noise(inject(legit, inj));
  }

  AttackResult result;
  result.advance_s = scenario.advance_s;
  result.observed_fraction = observed_fraction;

  const auto tx_tones = transmitted_tones(grid, cfg, map);
  const auto rx_tones = demodulate_ltf(attacked, cfg, map);
  // Remove the common propagation ramp per tone before scoring EVM, as a
  // receiver equalizing against the known channel would.
  std::vector<std::vector<cplx>> eq(rx_tones.size());
  for (std::size_t s = 0; s < rx_tones.size(); ++s) {
    eq[s].resize(rx_tones[s].size());
    for (std::size_t i = 0; i < rx_tones[s].size(); ++i) {
      const double w = -2.0 * std::numbers::pi * map.active[i] *
                       cfg.base_rate_hz() / cfg.fft_size() * tau0;
      eq[s][i] = rx_tones[s][i] * std::polar(1.0, -w);
    }
  }
  result.evm_percent = evm_rms(eq, tx_tones);
  result.demod_ok = result.evm_percent < scenario.evm_threshold_percent;

  if (scenario.run_music) {
    const auto base_est = toa_music(baseline, grid, cfg, map, scenario.music);
    const auto att_est = toa_music(attacked, grid, cfg, map, scenario.music);
    result.toa_baseline_s = base_est.toa_s;
    result.toa_attacked_s = att_est.toa_s;
    result.distance_bias_m = kSpeedOfLight * (att_est.toa_s - base_est.toa_s);
  }
  return result;
}

}  // namespace ftmsim
