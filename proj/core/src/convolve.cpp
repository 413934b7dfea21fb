#include "carmwf/convolve.hpp"

#include <stdexcept>

#include "carmwf/fft.hpp"

namespace carmwf {

std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h) {
    if (x.empty() || h.empty()) {
        throw std::invalid_argument("fft_convolve: inputs must be non-empty");
    }
    const std::size_t out_len = x.size() + h.size() - 1;
    const std::size_t n = next_pow2(out_len);
    auto xs = rfft(x, n);
    const auto hs = rfft(h, n);
    for (std::size_t k = 0; k < xs.size(); ++k) xs[k] *= hs[k];
    auto full = irfft(xs, n);
    full.resize(out_len);
    return full;
}

MultichannelSignal fft_convolve(const MultichannelSignal& signal,
                                std::span<const double> impulse_response) {
    signal.validate();
    MultichannelSignal out;
    out.sample_rate = signal.sample_rate;
    out.channels.reserve(signal.num_channels());
    for (const auto& ch : signal.channels) {
        out.channels.push_back(fft_convolve(ch, impulse_response));
    }
    return out;
}

}  // namespace carmwf
