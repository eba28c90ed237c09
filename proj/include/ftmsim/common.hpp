#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ftmsim {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Complex time-domain sample vector with its sample rate; the common
/// currency between all PHY-side modules.
struct BasebandSignal {
  std::vector<cplx> samples;
  double sample_rate_hz = 0.0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return sample_rate_hz > 0.0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CounterReuse : SimError {
  using SimError::SimError;
};
struct UnsupportedBandwidth : SimError {
  using SimError::SimError;
};
struct DimensionMismatch : SimError {
  using SimError::SimError;
};
struct LengthMismatch : SimError {
  using SimError::SimError;
};
struct RateMismatch : SimError {
  using SimError::SimError;
};
struct EmptySignal : SimError {
  using SimError::SimError;
};
struct ShapeMismatch : SimError {
  using SimError::SimError;
};
struct SingularCovariance : SimError {
  using SimError::SimError;
};
struct DegenerateWeights : SimError {
  using SimError::SimError;
};
struct TooShort : SimError {
  using SimError::SimError;
};
struct ConfigError : SimError {
  using SimError::SimError;
};

}  // namespace ftmsim
