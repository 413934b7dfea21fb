#include "carmwf/stft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "carmwf/fft.hpp"

namespace carmwf {

StftConfig StftConfig::hann(std::size_t frame_len) {
    if (frame_len < 2 || frame_len % 2 != 0) {
        throw std::invalid_argument("StftConfig: frame_len must be even and >= 2");
    }
    StftConfig cfg;
    cfg.frame_len = frame_len;
    cfg.hop = frame_len / 2;
    cfg.fft_len = next_pow2(frame_len);
    cfg.window.resize(frame_len);
    for (std::size_t n = 0; n < frame_len; ++n) {
        // periodic Hann: exact COLA (sum 1) at 50% overlap
        cfg.window[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                              static_cast<double>(frame_len)));
    }
    return cfg;
}

StftConfig StftConfig::rectangular(std::size_t frame_len) {
    StftConfig cfg = hann(frame_len);
    std::fill(cfg.window.begin(), cfg.window.end(), 1.0);
    return cfg;
}

StftConfig StftConfig::from_frame_ms(double frame_ms, double sample_rate) {
    if (frame_ms <= 0.0 || sample_rate <= 0.0) {
        throw std::invalid_argument("StftConfig: frame_ms and sample_rate must be positive");
    }
    auto frame_len = static_cast<std::size_t>(std::lround(frame_ms * sample_rate / 1000.0));
    if (frame_len % 2 != 0) ++frame_len;
    return hann(frame_len);
}

std::size_t StftConfig::frame_count(std::size_t signal_len) const {
    if (signal_len < frame_len) return 0;
    return (signal_len - frame_len) / hop + 1;
}

double StftConfig::bin_hz(std::size_t bin, double sample_rate) const {
    return static_cast<double>(bin) * sample_rate / static_cast<double>(fft_len);
}

double StftConfig::cola_gain() const {
    // overlap sum at an interior sample position
    double s = 0.0;
    for (std::size_t n = 0; n < frame_len; n += hop) s += window[n];
    return s;
}

void StftConfig::validate() const {
    if (frame_len == 0 || hop == 0 || fft_len < frame_len) {
        throw std::invalid_argument("StftConfig: need frame_len > 0, hop > 0, fft_len >= frame_len");
    }
    if (hop != frame_len / 2) {
        throw std::invalid_argument("StftConfig: hop must equal frame_len/2 (50% overlap)");
    }
    if (window.size() != frame_len) {
        throw std::invalid_argument("StftConfig: window length must equal frame_len");
    }
    const double ref = cola_gain();
    if (ref <= 0.0) throw std::invalid_argument("StftConfig: window sums to zero at hop");
    for (std::size_t offset = 0; offset < hop; ++offset) {
        double s = 0.0;
        for (std::size_t n = offset; n < frame_len; n += hop) s += window[n];
        if (std::abs(s - ref) > 1e-6 * ref) {
            throw std::invalid_argument("StftConfig: window violates constant-overlap-add at hop");
        }
    }
}

std::vector<std::complex<double>> analyze_frame(std::span<const double> samples,
                                                std::size_t frame_index, const StftConfig& cfg) {
    const std::size_t start = frame_index * cfg.hop;
    if (start + cfg.frame_len > samples.size()) {
        throw std::out_of_range("analyze_frame: frame extends past end of signal");
    }
    std::vector<double> buf(cfg.fft_len, 0.0);
    for (std::size_t n = 0; n < cfg.frame_len; ++n) {
        buf[n] = samples[start + n] * cfg.window[n];
    }
    return rfft(buf, cfg.fft_len);
}

std::vector<SpectralFrame> stft_analyze(const MultichannelSignal& signal, const StftConfig& cfg) {
    cfg.validate();
    signal.validate();
    const std::size_t frames = cfg.frame_count(signal.length());
    if (frames == 0) {
        throw std::invalid_argument("stft_analyze: signal shorter than one frame");
    }
    std::vector<SpectralFrame> out(frames);
    for (std::size_t m = 0; m < frames; ++m) {
        out[m].index = m;
        out[m].bins.reserve(signal.num_channels());
        for (const auto& ch : signal.channels) {
            out[m].bins.push_back(analyze_frame(ch, m, cfg));
        }
    }
    return out;
}

OverlapAdder::OverlapAdder(std::size_t output_len, const StftConfig& cfg)
    : cfg_(cfg), acc_(output_len, 0.0), norm_(output_len, 0.0) {}

void OverlapAdder::add_frame(std::span<const std::complex<double>> spectrum,
                             std::size_t frame_index) {
    if (spectrum.size() != cfg_.num_bins()) {
        throw std::invalid_argument("OverlapAdder: inconsistent frame size");
    }
    const std::vector<double> block = irfft(spectrum, cfg_.fft_len);
    const std::size_t start = frame_index * cfg_.hop;
    for (std::size_t n = 0; n < block.size(); ++n) {
        const std::size_t idx = start + n;
        if (idx >= acc_.size()) break;
        acc_[idx] += block[n];
    }
    for (std::size_t n = 0; n < cfg_.frame_len; ++n) {
        const std::size_t idx = start + n;
        if (idx >= norm_.size()) break;
        norm_[idx] += cfg_.window[n];
    }
}

std::vector<double> OverlapAdder::finish() const {
    std::vector<double> out(acc_.size(), 0.0);
    double max_norm = 0.0;
    for (double v : norm_) max_norm = std::max(max_norm, v);
    const double floor = 1e-3 * max_norm;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = norm_[i] > floor ? acc_[i] / norm_[i] : 0.0;
    }
    return out;
}

MultichannelSignal istft_synthesize(const std::vector<SpectralFrame>& frames, const StftConfig& cfg,
                                    double sample_rate, std::size_t output_len) {
    cfg.validate();
    if (frames.empty()) return make_signal(0, 0, sample_rate);
    const std::size_t channels = frames.front().num_channels();
    if (output_len == 0) {
        output_len = (frames.size() - 1) * cfg.hop + cfg.fft_len;
    }
    MultichannelSignal out = make_signal(channels, output_len, sample_rate);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        OverlapAdder ola(output_len, cfg);
        for (const auto& frame : frames) {
            if (frame.num_channels() != channels) {
                throw std::invalid_argument("istft_synthesize: inconsistent channel counts");
            }
            ola.add_frame(frame.bins[ch], frame.index);
        }
        out.channels[ch] = ola.finish();
    }
    return out;
}

}  // namespace carmwf
