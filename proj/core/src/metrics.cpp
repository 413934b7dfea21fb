#include "carmwf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "carmwf/fft.hpp"

namespace carmwf {
namespace {

double masked_power(std::span<const double> x, const SampleRanges& ranges) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& [begin, end] : ranges) {
        const std::size_t stop = std::min(end, x.size());
        for (std::size_t i = begin; i < stop; ++i) {
            acc += x[i] * x[i];
            ++count;
        }
    }
    return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

double db10(double ratio) { return 10.0 * std::log10(ratio); }

/// Moving-median envelope of the PSD over a fractional-octave window.
std::vector<double> median_envelope(const Psd& psd, double octaves) {
    const std::size_t n = psd.level_db.size();
    std::vector<double> env(n);
    const double half = std::pow(2.0, octaves / 2.0);
    std::vector<double> window;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = psd.freq_hz[i];
        if (f <= 0.0) {
            env[i] = psd.level_db[i];
            continue;
        }
        const double lo = f / half;
        const double hi = f * half;
        window.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (psd.freq_hz[j] >= lo && psd.freq_hz[j] <= hi) window.push_back(psd.level_db[j]);
        }
        if (window.empty()) {
            env[i] = psd.level_db[i];
            continue;
        }
        const std::size_t mid = window.size() / 2;
        std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid),
                         window.end());
        env[i] = window[mid];
    }
    return env;
}

}  // namespace

Psd long_term_spectrum(std::span<const double> x, double sample_rate, const WelchConfig& cfg) {
    if (sample_rate <= 0.0) throw std::invalid_argument("long_term_spectrum: bad sample rate");
    if (x.size() < cfg.segment_len || static_cast<double>(x.size()) < sample_rate) {
        throw std::invalid_argument("long_term_spectrum: signal too short (need >= 1 s and one segment)");
    }
    const std::size_t seg = cfg.segment_len;
    const std::size_t hop = cfg.hop;
    std::vector<double> window(seg);
    for (std::size_t n = 0; n < seg; ++n) {
        window[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                          static_cast<double>(seg)));
    }

    const std::size_t bins = seg / 2 + 1;
    std::vector<double> acc(bins, 0.0);
    std::vector<double> buf(seg);
    std::size_t count = 0;
    for (std::size_t start = 0; start + seg <= x.size(); start += hop) {
        for (std::size_t n = 0; n < seg; ++n) buf[n] = x[start + n] * window[n];
        const auto spec = rfft(buf, seg);
        for (std::size_t k = 0; k < bins; ++k) acc[k] += std::norm(spec[k]);
        ++count;
    }

    Psd psd;
    psd.freq_hz.resize(bins);
    psd.level_db.resize(bins);
    const double scale = 1.0 / static_cast<double>(count);
    for (std::size_t k = 0; k < bins; ++k) {
        psd.freq_hz[k] = static_cast<double>(k) * sample_rate / static_cast<double>(seg);
        psd.level_db[k] = 10.0 * std::log10(std::max(acc[k] * scale, 1e-300));
    }
    return psd;
}

double NotchStats::max_depth_db() const {
    double best = 0.0;
    for (double d : depth_db) best = std::max(best, d);
    return best;
}

NotchStats notch_depths(const Psd& psd, double smoothing_octaves, double band_low_hz,
                        double band_high_hz) {
    const auto env = median_envelope(psd, smoothing_octaves);
    NotchStats stats;
    const std::size_t n = psd.level_db.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double f = psd.freq_hz[i];
        if (f < band_low_hz || f > band_high_hz) continue;
        if (psd.level_db[i] >= psd.level_db[i - 1] || psd.level_db[i] >= psd.level_db[i + 1]) {
            continue;  // not a local minimum
        }
        const double depth = env[i] - psd.level_db[i];
        if (depth < 1.0) continue;
        // merge minima within 1/6 octave, keeping the deepest
        if (!stats.freq_hz.empty() && f / stats.freq_hz.back() < std::pow(2.0, 1.0 / 6.0)) {
            if (depth > stats.depth_db.back()) {
                stats.freq_hz.back() = f;
                stats.depth_db.back() = depth;
            }
            continue;
        }
        stats.freq_hz.push_back(f);
        stats.depth_db.push_back(depth);
    }
    return stats;
}

double depth_near_db(const Psd& psd, double freq_hz, double window_octaves,
                     double smoothing_octaves) {
    const auto env = median_envelope(psd, smoothing_octaves);
    const double half = std::pow(2.0, window_octaves / 2.0);
    double depth = 0.0;
    for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) {
        const double f = psd.freq_hz[i];
        if (f < freq_hz / half || f > freq_hz * half) continue;
        depth = std::max(depth, env[i] - psd.level_db[i]);
    }
    return depth;
}

namespace {

struct GainInputs {
    double in_target = 0.0, in_other = 0.0, out_target = 0.0, out_other = 0.0;
};

GainInputs gather(const InputDecomposition& input, const OutputDecomposition& output,
                  const ActivityTimeline& timeline, SourceLabel source, bool other_is_noise) {
    const bool passenger = source == SourceLabel::Passenger;
    const std::size_t ref_mic = passenger ? 1 : 0;
    const SampleRanges target_ranges = passenger ? timeline.passenger_ranges()
                                                 : timeline.driver_ranges();
    const SampleRanges competing_ranges = passenger ? timeline.driver_ranges()
                                                    : timeline.passenger_ranges();
    if (target_ranges.empty()) {
        throw std::invalid_argument("metrics: no active frames for the target source");
    }
    const MultichannelSignal& in_target_sig = passenger ? input.passenger : input.driver;
    const std::vector<double>& out_target_sig = passenger ? output.passenger : output.driver;

    GainInputs g;
    g.in_target = masked_power(in_target_sig.channels.at(ref_mic), target_ranges);
    g.out_target = masked_power(out_target_sig, target_ranges);
    if (other_is_noise) {
        g.in_other = masked_power(input.noise.channels.at(ref_mic), target_ranges);
        g.out_other = masked_power(output.noise, target_ranges);
    } else {
        if (competing_ranges.empty()) {
            throw std::invalid_argument("metrics: no active frames for the competing source");
        }
        const MultichannelSignal& in_comp = passenger ? input.driver : input.passenger;
        const std::vector<double>& out_comp = passenger ? output.driver : output.passenger;
        g.in_other = masked_power(in_comp.channels.at(ref_mic), competing_ranges);
        g.out_other = masked_power(out_comp, competing_ranges);
    }
    return g;
}

}  // namespace

double snr_gain_db(const InputDecomposition& input, const OutputDecomposition& output,
                   const ActivityTimeline& timeline, SourceLabel source) {
    const GainInputs g = gather(input, output, timeline, source, /*other_is_noise=*/true);
    if (g.in_other <= 0.0 || g.out_other <= 0.0) {
        throw std::invalid_argument("snr_gain_db: zero noise power");
    }
    if (g.in_target <= 0.0 || g.out_target <= 0.0) {
        throw std::invalid_argument("snr_gain_db: zero target power");
    }
    return db10(g.out_target / g.out_other) - db10(g.in_target / g.in_other);
}

double sir_gain_db(const InputDecomposition& input, const OutputDecomposition& output,
                   const ActivityTimeline& timeline, SourceLabel source, double cap_db) {
    const GainInputs g = gather(input, output, timeline, source, /*other_is_noise=*/false);
    if (g.in_other <= 0.0) {
        throw std::invalid_argument("sir_gain_db: zero interference power at the input");
    }
    if (g.in_target <= 0.0 || g.out_target <= 0.0) {
        throw std::invalid_argument("sir_gain_db: zero target power");
    }
    const double in_sir = db10(g.in_target / g.in_other);
    if (g.out_other <= 0.0) return cap_db;  // perfect rejection
    const double gain = db10(g.out_target / g.out_other) - in_sir;
    return std::clamp(gain, -cap_db, cap_db);
}

}  // namespace carmwf
