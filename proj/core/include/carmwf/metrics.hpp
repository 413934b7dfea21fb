#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carmwf/activity.hpp"
#include "carmwf/room.hpp"
#include "carmwf/signal.hpp"

namespace carmwf {

struct WelchConfig {
    std::size_t segment_len = 4096;
    std::size_t hop = 2048;
};

/// One-sided power spectral density in dB (unnormalized reference level).
struct Psd {
    std::vector<double> freq_hz;
    std::vector<double> level_db;

    double df_hz() const { return freq_hz.size() > 1 ? freq_hz[1] - freq_hz[0] : 0.0; }
};

/// Welch-averaged PSD with Hann segments at 50% overlap.
Psd long_term_spectrum(std::span<const double> x, double sample_rate,
                       const WelchConfig& cfg = {});

struct NotchStats {
    std::vector<double> freq_hz;
    std::vector<double> depth_db;

    double max_depth_db() const;
};

/// Local PSD minima measured against a fractional-octave moving-median
/// envelope; minima shallower than 1 dB are discarded and near-duplicates
/// within 1/6 octave are merged keeping the deepest.
///
/// The default envelope window is one octave: the comb valleys of the cabin
/// geometry (delay difference ~0.67 ms) are several hundred Hz wide, so a
/// narrower median sits inside the valley and under-reads the depth.
NotchStats notch_depths(const Psd& psd, double smoothing_octaves = 1.0,
                        double band_low_hz = 100.0, double band_high_hz = 7500.0);

/// Envelope-minus-level depth near `freq_hz` (deepest point within
/// +-window_octaves/2), for comparing two PSDs at a predicted null.
double depth_near_db(const Psd& psd, double freq_hz, double window_octaves = 1.0 / 6.0,
                     double smoothing_octaves = 1.0);

/// The mic-side component decomposition of the unprocessed input: per-source
/// speech components and the noise, each as the 2-channel mic pair.
struct InputDecomposition {
    MultichannelSignal driver;      // driver speech at both mics
    MultichannelSignal passenger;   // passenger speech at both mics
    MultichannelSignal noise;       // background noise at both mics
};

/// Component decomposition of one evaluated single-channel signal
/// (mic sum, MWF mixed output, or one extracted source path).
struct OutputDecomposition {
    std::vector<double> driver;
    std::vector<double> passenger;
    std::vector<double> noise;
};

/// SNR gain in dB of the evaluated output over the raw input, where the input
/// SNR is measured at the source's dedicated mic (mic 1 for the driver, mic 2
/// for the passenger) and both ratios use the source's active frames.
double snr_gain_db(const InputDecomposition& input, const OutputDecomposition& output,
                   const ActivityTimeline& timeline, SourceLabel source);

/// SIR gain in dB: target power over its active frames versus competing
/// speech power over the competing source's active frames, output over input.
/// The gain is capped at +-cap_db (perfect rejection would be infinite).
double sir_gain_db(const InputDecomposition& input, const OutputDecomposition& output,
                   const ActivityTimeline& timeline, SourceLabel source, double cap_db = 60.0);

struct MetricsReport {
    double snr_gain_driver_db = 0.0;
    double snr_gain_passenger_db = 0.0;
    double sir_gain_driver_db = 0.0;
    double sir_gain_passenger_db = 0.0;
    std::optional<NotchStats> notch_stats;
    std::string config_echo;
};

}  // namespace carmwf
