#pragma once

#include <array>
#include <cmath>

#include "ftmsim/common.hpp"

namespace ftmsim {

/// Unit-average-power square 64-QAM with Gray-coded axes.
/// Index bits [5:3] select the I level, bits [2:0] the Q level.
namespace qam64 {

inline double gray_level(unsigned bits3) {
  // Gray code over the 8-PAM levels {-7,-5,-3,-1,+1,+3,+5,+7}.
  static constexpr int levels[8] = {-7, -5, -1, -3, +7, +5, +1, +3};
  return static_cast<double>(levels[bits3 & 7]);
}

inline const std::array<cplx, 64>& points() {
  static const std::array<cplx, 64> table = [] {
    std::array<cplx, 64> t{};
    const double scale = 1.0 / std::sqrt(42.0);  // E|X|^2 = 1
    for (unsigned i = 0; i < 64; ++i) {
      t[i] = cplx(gray_level(i >> 3) * scale, gray_level(i & 7) * scale);
    }
    return t;
  }();
  return table;
}

inline cplx point(unsigned idx) { return points()[idx & 63]; }

/// Minimum distance between constellation points (2/sqrt(42)).
inline double min_distance() { return 2.0 / std::sqrt(42.0); }

/// Nearest-point hard decision.
inline unsigned nearest(cplx v) {
  unsigned best = 0;
  double best_d = 1e300;
  const auto& tab = points();
  for (unsigned i = 0; i < 64; ++i) {
    const double d = std::norm(v - tab[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace qam64

/// Unit-power QPSK, used for reduced-size inference checks.
namespace qpsk {

inline const std::array<cplx, 4>& points() {
  static const std::array<cplx, 4> table = [] {
    const double s = 1.0 / std::sqrt(2.0);
    return std::array<cplx, 4>{cplx(s, s), cplx(s, -s), cplx(-s, s), cplx(-s, -s)};
  }();
  return table;
}

}  // namespace qpsk

}  // namespace ftmsim
