#include "ftmsim/fft.hpp"

#include <unsupported/Eigen/FFT>

namespace ftmsim {

std::vector<cplx> fft_forward(const std::vector<cplx>& x) {
  Eigen::FFT<double> fft;
  std::vector<cplx> out;
  fft.fwd(out, x);
  return out;
}

std::vector<cplx> fft_inverse(const std::vector<cplx>& x) {
  Eigen::FFT<double> fft;
  std::vector<cplx> out;
  fft.inv(out, x);
  return out;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace ftmsim
