#pragma once

#include <complex>
#include <span>
#include <vector>

namespace qsense::fft {

/// Unnormalized real-to-complex DFT: X_k = Σ_n x_n e^{-2πi kn/N}, k = 0..N/2.
std::vector<std::complex<double>> forward_real(std::span<const double> x);

/// Unnormalized complex-to-real inverse: x_n = Σ_k X_k e^{+2πi kn/N} over the
/// Hermitian-extended spectrum. `half` holds k = 0..N/2.
std::vector<double> inverse_real(std::span<const std::complex<double>> half, std::size_t n);

}  // namespace qsense::fft
