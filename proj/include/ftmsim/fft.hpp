#pragma once

#include <vector>

#include "ftmsim/common.hpp"

namespace ftmsim {

/// Forward DFT, unscaled: X[k] = sum_n x[n] e^{-i 2 pi k n / N}.
std::vector<cplx> fft_forward(const std::vector<cplx>& x);

/// Inverse DFT with 1/N: x[n] = (1/N) sum_k X[k] e^{+i 2 pi k n / N}.
std::vector<cplx> fft_inverse(const std::vector<cplx>& x);

std::size_t next_pow2(std::size_t n);

}  // namespace ftmsim
