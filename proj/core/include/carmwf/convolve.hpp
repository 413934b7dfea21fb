#pragma once

#include <span>
#include <vector>

#include "carmwf/signal.hpp"

namespace carmwf {

/// Full linear convolution, length x.size() + h.size() - 1.
std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h);

/// Convolves every channel with the same impulse response.
MultichannelSignal fft_convolve(const MultichannelSignal& signal,
                                std::span<const double> impulse_response);

}  // namespace carmwf
