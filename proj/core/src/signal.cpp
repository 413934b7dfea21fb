#include "carmwf/signal.hpp"

#include <cmath>
#include <stdexcept>

namespace carmwf {

void MultichannelSignal::validate() const {
    if (sample_rate <= 0.0) {
        throw std::invalid_argument("signal sample_rate must be positive");
    }
    for (const auto& ch : channels) {
        if (ch.size() != length()) {
            throw std::invalid_argument("all signal channels must have the same length");
        }
    }
}

MultichannelSignal make_signal(std::size_t num_channels, std::size_t length, double sample_rate) {
    MultichannelSignal s;
    s.sample_rate = sample_rate;
    s.channels.assign(num_channels, std::vector<double>(length, 0.0));
    return s;
}

double sum_squares(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc;
}

double rms(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::sqrt(sum_squares(x) / static_cast<double>(x.size()));
}

void add_into(std::span<double> out, std::span<const double> in) {
    if (out.size() != in.size()) {
        throw std::invalid_argument("add_into: size mismatch");
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
}

}  // namespace carmwf
