#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "carmwf/signal.hpp"

namespace carmwf {

/// Relative power level (dB) over frequency, interpolated linearly in
/// (log-frequency, dB) and clamped to the end values outside the table.
struct SpectralEnvelope {
    std::vector<double> freq_hz;
    std::vector<double> level_db;

    double db_at(double freq) const;
    void validate() const;  // strictly increasing frequencies, finite levels
};

/// Two-column text table: frequency_hz level_db, '#' comments allowed.
SpectralEnvelope parse_envelope(std::string_view text);
SpectralEnvelope load_envelope(const std::string& path);

enum class NoiseColorKind { White, Pink, Red, Green, Hoth };

struct NoiseColor {
    NoiseColorKind kind = NoiseColorKind::White;
    SpectralEnvelope envelope;  // used for Green and Hoth

    static NoiseColor white();
    static NoiseColor pink();
    static NoiseColor red();
    static NoiseColor green();  // built-in mid-band envelope table
    static NoiseColor hoth();   // built-in Hoth room-noise table
    static NoiseColor from_name(const std::string& name);
    std::string name() const;
};

struct NoiseSpec {
    NoiseColor color;
    std::uint64_t seed = 1;
    std::size_t channels = 2;
};

/// Independent per-channel streams (distinct sub-seeds derived from the seed),
/// spectrally shaped per color, each channel RMS-normalized to 1.
/// Deterministic for a fixed spec.
MultichannelSignal generate_noise(const NoiseSpec& spec, std::size_t length_samples, double rate);

using SampleRanges = std::vector<std::pair<std::size_t, std::size_t>>;  // [begin, end)

/// Scales `noise` in place so that the mean over sources of
///   speech power / noise power   (at each source's dedicated mic, over that
/// source's active ranges, in dB) equals target_input_snr_db.
/// speech_components[s] is source s's rendered mic pair; mic s is its
/// reference. Returns the applied scale factor.
double mix_at_snr(const std::vector<MultichannelSignal>& speech_components,
                  MultichannelSignal& noise, double target_input_snr_db,
                  const std::vector<SampleRanges>& active_segments);

namespace detail {
extern const char* kHothTableText;
extern const char* kGreenTableText;
}  // namespace detail

}  // namespace carmwf
