#include "ftmsim/estimation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ftmsim/fft.hpp"
#include "ftmsim/util.hpp"

namespace ftmsim {

int64_t rtt_picoseconds(const FtmTimestamps& ts) {
  const __int128 rtt = (static_cast<__int128>(ts.t4_ps) - ts.t1_ps) -
                       (static_cast<__int128>(ts.t3_ps) - ts.t2_ps);
  return static_cast<int64_t>(rtt);
}

double distance_from_timestamps(const FtmTimestamps& ts) {
  return static_cast<double>(rtt_picoseconds(ts)) * (kSpeedOfLight * 1e-12 / 2.0);
}

namespace {

// Quadratic peak refinement over three equally spaced ordinates; returns
// the fractional offset of the vertex from the center point, in [-1, 1].
double parabolic_offset(double a, double b, double c) {
  const double denom = a - 2.0 * b + c;
  if (denom >= 0.0 || !std::isfinite(denom)) return 0.0;  // not a proper maximum
  double off = 0.5 * (a - c) / denom;
  return std::clamp(off, -1.0, 1.0);
}

}  // namespace

ToaEstimate toa_correlation(const BasebandSignal& rx, const BasebandSignal& tmpl) {
  if (tmpl.empty()) throw EmptySignal("toa_correlation: empty template");
  if (rx.empty()) throw EmptySignal("toa_correlation: empty rx");

  const std::size_t n = next_pow2(rx.size() + tmpl.size());
  std::vector<cplx> a(n, cplx(0.0, 0.0)), b(n, cplx(0.0, 0.0));
  std::copy(rx.samples.begin(), rx.samples.end(), a.begin());
  std::copy(tmpl.samples.begin(), tmpl.samples.end(), b.begin());
  const auto fa = fft_forward(a);
  const auto fb = fft_forward(b);
  std::vector<cplx> prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = fa[i] * std::conj(fb[i]);
  const auto corr = fft_inverse(prod);

  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = std::abs(corr[i]);
    if (m > best_mag) {
      best_mag = m;
      best = i;
    }
  }
  const double prev = std::abs(corr[(best + n - 1) % n]);
  const double next = std::abs(corr[(best + 1) % n]);
  const double frac = parabolic_offset(prev, best_mag, next);

  double lag = static_cast<double>(best);
  if (lag > static_cast<double>(n) / 2.0) lag -= static_cast<double>(n);

  double rms = 0.0;
  for (std::size_t i = 0; i < n; ++i) rms += std::norm(corr[i]);
  rms = std::sqrt(rms / static_cast<double>(n));

  ToaEstimate est;
  est.method = ToaMethod::correlation;
  est.toa_s = (lag + frac) / rx.sample_rate_hz;
  est.peak_sharpness_db = lin_to_db(best_mag * best_mag / std::max(rms * rms, 1e-300));
  return est;
}

std::vector<cplx> estimate_cfr(const BasebandSignal& rx, const QamSymbolGrid& known_tones,
                               const NdpConfig& cfg, const SubcarrierMap& map) {
  const auto measured = demodulate_ltf(rx, cfg, map);
  const auto reference = transmitted_tones(known_tones, cfg, map);

  const std::size_t n_act = map.active.size();
  std::vector<cplx> cfr_active(n_act, cplx(0.0, 0.0));
  for (int s = 0; s < cfg.n_ltf; ++s) {
    for (std::size_t i = 0; i < n_act; ++i) {
      cfr_active[i] += measured[s][i] / reference[s][i];
    }
  }
  for (auto& h : cfr_active) h /= static_cast<double>(cfg.n_ltf);

  // The active set is the even tones with |k| <= n_active and a hole at DC.
  // Fill DC by neighbor interpolation to obtain a uniform grid.
  std::vector<cplx> uniform;
  uniform.reserve(n_act + 1);
  const std::size_t half = n_act / 2;  // actives below DC
  for (std::size_t i = 0; i < half; ++i) uniform.push_back(cfr_active[i]);
  uniform.push_back(0.5 * (cfr_active[half - 1] + cfr_active[half]));
  for (std::size_t i = half; i < n_act; ++i) uniform.push_back(cfr_active[i]);
  return uniform;
}

ToaEstimate music_from_cfr(const std::vector<cplx>& cfr, double tone_spacing_hz,
                           const MusicParams& params) {
  const std::size_t m_tot = cfr.size();
  const std::size_t l_sub = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::lround(params.subarray_fraction * m_tot)));
  if (l_sub >= m_tot) throw SingularCovariance("subarray length leaves no smoothing snapshots");
  const std::size_t n_sub = m_tot - l_sub + 1;

  // Forward-backward smoothed covariance.
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(l_sub, l_sub);
  for (std::size_t s = 0; s < n_sub; ++s) {
    Eigen::VectorXcd x(l_sub);
    for (std::size_t i = 0; i < l_sub; ++i) x(i) = cfr[s + i];
    r += x * x.adjoint();
  }
  r /= static_cast<double>(n_sub);
  Eigen::MatrixXcd j = Eigen::MatrixXcd::Zero(l_sub, l_sub);
  for (std::size_t i = 0; i < l_sub; ++i) j(i, l_sub - 1 - i) = 1.0;
  r = 0.5 * (r + j * r.conjugate() * j);

  if (!r.allFinite()) throw SingularCovariance("covariance has non-finite entries");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(r);
  if (eig.info() != Eigen::Success) throw SingularCovariance("eigendecomposition failed");
  // Ascending order; flip to descending.
  Eigen::VectorXd evals = eig.eigenvalues().reverse();
  Eigen::MatrixXcd evecs = eig.eigenvectors().rowwise().reverse();

  int order = params.model_order_override;
  if (order <= 0) {
    // Largest gap in log-eigenvalues over the first half of the spectrum.
    const double floor = std::max(evals(0), 0.0) * 1e-15 + 1e-300;
    int best_i = 1;
    double best_gap = -1.0;
    const int i_max = std::max(1, static_cast<int>(l_sub) / 2);
    for (int i = 1; i <= i_max && i < static_cast<int>(l_sub); ++i) {
      const double gap = std::log(std::max(evals(i - 1), floor)) -
                         std::log(std::max(evals(i), floor));
      if (gap > best_gap) {
        best_gap = gap;
        best_i = i;
      }
    }
    order = best_i;
  }
  order = std::clamp(order, 1, static_cast<int>(l_sub) - 1);

  const Eigen::MatrixXcd noise = evecs.rightCols(static_cast<int>(l_sub) - order);

  const double step_s = params.grid_step_ns * 1e-9;
  const std::size_t n_grid = static_cast<std::size_t>(
      std::floor((params.grid_stop_ns - params.grid_start_ns) / params.grid_step_ns)) + 1;

  // Steering matrix over the delay grid; pseudospectrum from projections
  // onto the noise subspace.
  Eigen::MatrixXcd steer(l_sub, n_grid);
  for (std::size_t t = 0; t < n_grid; ++t) {
    const double tau = params.grid_start_ns * 1e-9 + static_cast<double>(t) * step_s;
    const double w = -2.0 * std::numbers::pi * tone_spacing_hz * tau;
    for (std::size_t i = 0; i < l_sub; ++i) {
      steer(i, t) = std::polar(1.0, w * static_cast<double>(i));
    }
  }
  const Eigen::MatrixXcd proj = noise.adjoint() * steer;  // (l_sub-order) x n_grid
  std::vector<double> pseudo(n_grid);
  double p_max = 0.0;
  for (std::size_t t = 0; t < n_grid; ++t) {
    const double denom = proj.col(t).squaredNorm();
    pseudo[t] = 1.0 / std::max(denom, 1e-300);
    p_max = std::max(p_max, pseudo[t]);
  }

  // Earliest local maximum above the threshold.
  const double thresh = params.peak_threshold * p_max;
  std::size_t peak_idx = n_grid;  // sentinel
  for (std::size_t t = 0; t < n_grid; ++t) {
    const bool left_ok = (t == 0) || pseudo[t] >= pseudo[t - 1];
    const bool right_ok = (t + 1 == n_grid) || pseudo[t] > pseudo[t + 1];
    if (left_ok && right_ok && pseudo[t] >= thresh) {
      peak_idx = t;
      break;
    }
  }
  if (peak_idx == n_grid) {
    // Fall back to the global maximum.
    peak_idx = static_cast<std::size_t>(
        std::max_element(pseudo.begin(), pseudo.end()) - pseudo.begin());
  }

  double frac = 0.0;
  if (peak_idx > 0 && peak_idx + 1 < n_grid) {
    frac = parabolic_offset(std::log(pseudo[peak_idx - 1]), std::log(pseudo[peak_idx]),
                            std::log(pseudo[peak_idx + 1]));
  }

  std::vector<double> sorted = pseudo;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];

  ToaEstimate est;
  est.method = ToaMethod::music;
  est.toa_s = params.grid_start_ns * 1e-9 + (static_cast<double>(peak_idx) + frac) * step_s;
  est.model_order = order;
  est.peak_sharpness_db = lin_to_db(pseudo[peak_idx] / std::max(median, 1e-300));
  if (params.keep_pseudospectrum) {
    est.pseudospectrum.reserve(n_grid);
    for (std::size_t t = 0; t < n_grid; ++t) {
      const double tau_ns = params.grid_start_ns + static_cast<double>(t) * params.grid_step_ns;
      est.pseudospectrum.emplace_back(tau_ns, lin_to_db(pseudo[t] / p_max));
    }
  }
  return est;
}

ToaEstimate toa_music(const BasebandSignal& rx, const QamSymbolGrid& known_tones,
                      const NdpConfig& cfg, const SubcarrierMap& map,
                      const MusicParams& params) {
  const auto cfr = estimate_cfr(rx, known_tones, cfg, map);
  // Uniform virtual grid spacing is twice the base subcarrier spacing.
  const double spacing = 2.0 * cfg.base_rate_hz() / cfg.fft_size();
  return music_from_cfr(cfr, spacing, params);
}

double evm_rms(const std::vector<cplx>& rx_tones, const std::vector<cplx>& tx_tones) {
  if (rx_tones.size() != tx_tones.size() || rx_tones.empty()) {
    throw ShapeMismatch("evm_rms: tone vectors must be non-empty and equal length");
  }
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < rx_tones.size(); ++i) {
    err += std::norm(rx_tones[i] - tx_tones[i]);
    ref += std::norm(tx_tones[i]);
  }
  if (ref <= 0.0) throw ShapeMismatch("evm_rms: zero reference power");
  return 100.0 * std::sqrt(err / ref);
}

double evm_after_linear_phase_eq(const std::vector<std::vector<cplx>>& rx_tones,
                                 const std::vector<std::vector<cplx>>& tx_tones,
                                 const std::vector<double>& tone_freqs_hz) {
  if (rx_tones.size() != tx_tones.size() || rx_tones.empty()) {
    throw ShapeMismatch("evm_after_linear_phase_eq: symbol counts differ");
  }
  const std::size_t n_tones = tone_freqs_hz.size();

  // Fit tau by maximizing |sum_k rx_k conj(tx_k) e^{+i 2 pi f_k tau}| on a
  // fine grid, then the complex gain in closed form.
  std::vector<cplx> cross(n_tones, cplx(0.0, 0.0));
  double ref_pow = 0.0;
  for (std::size_t s = 0; s < rx_tones.size(); ++s) {
    if (rx_tones[s].size() != n_tones || tx_tones[s].size() != n_tones) {
      throw ShapeMismatch("evm_after_linear_phase_eq: tone counts differ");
    }
    for (std::size_t k = 0; k < n_tones; ++k) {
      cross[k] += rx_tones[s][k] * std::conj(tx_tones[s][k]);
      ref_pow += std::norm(tx_tones[s][k]);
    }
  }
  if (ref_pow <= 0.0) throw ShapeMismatch("evm_after_linear_phase_eq: zero reference power");

  const double span = std::abs(tone_freqs_hz.back() - tone_freqs_hz.front()) + 1.0;
  const double tau_max = std::min(0.5 * static_cast<double>(n_tones) / span, 1e-6);
  auto fit_mag = [&](double tau) {
    cplx acc(0.0, 0.0);
    for (std::size_t k = 0; k < n_tones; ++k) {
      acc += cross[k] * std::polar(1.0, 2.0 * std::numbers::pi * tone_freqs_hz[k] * tau);
    }
    return std::abs(acc);
  };
  double best_tau = 0.0;
  double best_mag = -1.0;
  const int grid = 8192;
  const double step = 2.0 * tau_max / grid;
  for (int i = 0; i <= grid; ++i) {
    const double tau = -tau_max + step * i;
    const double m = fit_mag(tau);
    if (m > best_mag) {
      best_mag = m;
      best_tau = tau;
    }
  }
  {  // parabolic refinement around the coarse peak
    const double a = fit_mag(best_tau - step);
    const double c = fit_mag(best_tau + step);
    const double denom = a - 2.0 * best_mag + c;
    if (denom < 0.0) best_tau += 0.5 * (a - c) / denom * step;
  }

  // Equalize and score.
  cplx num(0.0, 0.0);
  for (std::size_t k = 0; k < n_tones; ++k) {
    num += cross[k] * std::polar(1.0, 2.0 * std::numbers::pi * tone_freqs_hz[k] * best_tau);
  }
  const cplx gain = num / ref_pow;  // combined gain of the fitted channel

  double err = 0.0;
  for (std::size_t s = 0; s < rx_tones.size(); ++s) {
    for (std::size_t k = 0; k < n_tones; ++k) {
      const cplx h = gain * std::polar(1.0, -2.0 * std::numbers::pi * tone_freqs_hz[k] * best_tau);
      err += std::norm(rx_tones[s][k] - h * tx_tones[s][k]);
    }
  }
  return 100.0 * std::sqrt(err / ref_pow);
}

double evm_rms(const std::vector<std::vector<cplx>>& rx_tones,
               const std::vector<std::vector<cplx>>& tx_tones) {
  if (rx_tones.size() != tx_tones.size() || rx_tones.empty()) {
    throw ShapeMismatch("evm_rms: symbol counts differ");
  }
  std::vector<cplx> rx_flat, tx_flat;
  for (std::size_t s = 0; s < rx_tones.size(); ++s) {
    if (rx_tones[s].size() != tx_tones[s].size()) {
      throw ShapeMismatch("evm_rms: tone counts differ");
    }
    rx_flat.insert(rx_flat.end(), rx_tones[s].begin(), rx_tones[s].end());
    tx_flat.insert(tx_flat.end(), tx_tones[s].begin(), tx_tones[s].end());
  }
  return evm_rms(rx_flat, tx_flat);
}

}  // namespace ftmsim
