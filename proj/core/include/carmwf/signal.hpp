#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace carmwf {

/// Sample-domain multichannel audio. All channels share one length and one
/// sample rate; samples are double precision with a nominal range of [-1, 1].
struct MultichannelSignal {
    std::vector<std::vector<double>> channels;
    double sample_rate = 16000.0;

    std::size_t num_channels() const { return channels.size(); }
    std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
    double duration_s() const { return sample_rate > 0.0 ? static_cast<double>(length()) / sample_rate : 0.0; }

    /// Throws std::invalid_argument if channels have mismatched lengths or the rate is not positive.
    void validate() const;
};

/// Zero-filled signal with the given shape.
MultichannelSignal make_signal(std::size_t num_channels, std::size_t length, double sample_rate);

double sum_squares(std::span<const double> x);
double rms(std::span<const double> x);

/// out += in, element-wise; lengths must match.
void add_into(std::span<double> out, std::span<const double> in);

}  // namespace carmwf
