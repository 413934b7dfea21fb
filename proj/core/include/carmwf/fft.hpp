#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace carmwf {

/// One-sided real-input FFT of length n (x is zero-padded or truncated to n).
/// Returns n/2+1 bins; forward transform is unnormalized.
std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t n);

/// Inverse of rfft for a one-sided spectrum of n/2+1 bins; includes the 1/n
/// factor so irfft(rfft(x, n), n) == x for real x of length n.
std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n);

std::size_t next_pow2(std::size_t n);

}  // namespace carmwf
