#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "carmwf/signal.hpp"

namespace carmwf {

/// Framing and transform parameters for overlap-add processing.
/// hop is fixed at frame_len/2 (50% overlap) by the factory functions; the
/// window must satisfy constant-overlap-add at that hop.
struct StftConfig {
    std::size_t frame_len = 0;
    std::size_t hop = 0;
    std::size_t fft_len = 0;
    std::vector<double> window;

    /// Periodic Hann analysis window, hop = frame_len/2,
    /// fft_len = next power of two >= frame_len.
    static StftConfig hann(std::size_t frame_len);
    /// Rectangular window, same sizing rules.
    static StftConfig rectangular(std::size_t frame_len);
    static StftConfig from_frame_ms(double frame_ms, double sample_rate);

    std::size_t num_bins() const { return fft_len / 2 + 1; }
    std::size_t frame_count(std::size_t signal_len) const;
    double bin_hz(std::size_t bin, double sample_rate) const;
    /// Constant-overlap-add level of the window at the configured hop
    /// (1.0 for periodic Hann at 50% overlap).
    double cola_gain() const;

    /// Throws std::invalid_argument when sizes are inconsistent or the window
    /// fails COLA within 1e-6 relative error.
    void validate() const;
};

/// One analysis frame: per-channel one-sided spectra of fft_len/2+1 bins.
struct SpectralFrame {
    std::vector<std::vector<std::complex<double>>> bins;  // [channel][bin]
    std::size_t index = 0;

    std::size_t num_channels() const { return bins.size(); }
};

/// Windowed one-sided spectrum of frame `frame_index` of one channel; the
/// frame covers samples [frame_index*hop, frame_index*hop + frame_len) and is
/// zero-padded to fft_len. Shared by stft_analyze and the streaming MWF path.
std::vector<std::complex<double>> analyze_frame(std::span<const double> samples,
                                                std::size_t frame_index, const StftConfig& cfg);

std::vector<SpectralFrame> stft_analyze(const MultichannelSignal& signal, const StftConfig& cfg);

/// Overlap-add accumulator for synthesis. Divides by the accumulated analysis
/// window overlap so an unmodified analyze/synthesize round trip reconstructs
/// the interior of the input.
class OverlapAdder {
public:
    OverlapAdder(std::size_t output_len, const StftConfig& cfg);

    /// Adds the time-domain frame (inverse transform of a one-sided spectrum).
    void add_frame(std::span<const std::complex<double>> spectrum, std::size_t frame_index);

    /// Window-overlap-normalized output; valid once all frames were added.
    std::vector<double> finish() const;

private:
    StftConfig cfg_;
    std::vector<double> acc_;
    std::vector<double> norm_;
};

MultichannelSignal istft_synthesize(const std::vector<SpectralFrame>& frames, const StftConfig& cfg,
                                    double sample_rate, std::size_t output_len = 0);

}  // namespace carmwf
