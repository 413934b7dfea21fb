#include "carmwf/activity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace carmwf {
namespace {

std::vector<double> frame_energies(std::span<const double> x, const StftConfig& cfg) {
    const std::size_t frames = cfg.frame_count(x.size());
    std::vector<double> e(frames, 0.0);
    for (std::size_t m = 0; m < frames; ++m) {
        const std::size_t start = m * cfg.hop;
        double acc = 0.0;
        for (std::size_t n = 0; n < cfg.frame_len; ++n) {
            acc += x[start + n] * x[start + n];
        }
        e[m] = acc;
    }
    return e;
}

}  // namespace

const char* to_string(ActivityLabel label) {
    switch (label) {
        case ActivityLabel::Silence: return "silence";
        case ActivityLabel::DriverOnly: return "driver";
        case ActivityLabel::PassengerOnly: return "passenger";
        case ActivityLabel::Both: return "both";
    }
    return "silence";
}

SampleRanges ActivityTimeline::driver_ranges() const {
    return sample_ranges_where([](ActivityLabel l) {
        return l == ActivityLabel::DriverOnly || l == ActivityLabel::Both;
    });
}

SampleRanges ActivityTimeline::passenger_ranges() const {
    return sample_ranges_where([](ActivityLabel l) {
        return l == ActivityLabel::PassengerOnly || l == ActivityLabel::Both;
    });
}

ActivityTimeline oracle_timeline(const MultichannelSignal& dry_sources, const StftConfig& cfg,
                                 double energy_floor_db) {
    cfg.validate();
    dry_sources.validate();
    if (dry_sources.num_channels() != 2) {
        throw std::invalid_argument("oracle_timeline: expected 2 dry source channels");
    }
    const auto e_driver = frame_energies(dry_sources.channels[0], cfg);
    const auto e_pass = frame_energies(dry_sources.channels[1], cfg);
    const double floor_ratio = std::pow(10.0, energy_floor_db / 10.0);

    const auto active_flags = [&](const std::vector<double>& e) {
        const double peak = e.empty() ? 0.0 : *std::max_element(e.begin(), e.end());
        std::vector<bool> on(e.size(), false);
        if (peak <= 0.0) return on;
        const double threshold = peak * floor_ratio;
        for (std::size_t m = 0; m < e.size(); ++m) on[m] = e[m] > threshold;
        return on;
    };
    const auto d_on = active_flags(e_driver);
    const auto p_on = active_flags(e_pass);

    ActivityTimeline tl;
    tl.frame_len = cfg.frame_len;
    tl.hop = cfg.hop;
    tl.labels.resize(e_driver.size());
    for (std::size_t m = 0; m < tl.labels.size(); ++m) {
        if (d_on[m] && p_on[m]) {
            tl.labels[m] = ActivityLabel::Both;
        } else if (d_on[m]) {
            tl.labels[m] = ActivityLabel::DriverOnly;
        } else if (p_on[m]) {
            tl.labels[m] = ActivityLabel::PassengerOnly;
        } else {
            tl.labels[m] = ActivityLabel::Silence;
        }
    }
    return tl;
}

ActivityTimeline power_detector(const MultichannelSignal& mic_signals, const StftConfig& cfg,
                                const PowerDetectorThresholds& thresholds) {
    cfg.validate();
    mic_signals.validate();
    if (mic_signals.num_channels() != 2) {
        throw std::invalid_argument("power_detector: expected 2 mic channels");
    }
    const auto e1 = frame_energies(mic_signals.channels[0], cfg);
    const auto e2 = frame_energies(mic_signals.channels[1], cfg);
    const std::size_t frames = e1.size();

    const double lambda = thresholds.smoothing_lambda;
    std::vector<double> p1(frames), p2(frames);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t m = 0; m < frames; ++m) {
        s1 = lambda * s1 + (1.0 - lambda) * e1[m];
        s2 = lambda * s2 + (1.0 - lambda) * e2[m];
        p1[m] = s1;
        p2[m] = s2;
    }

    // Noise floor estimate: low percentile of the smoothed powers per mic.
    const auto percentile10 = [](std::vector<double> v) {
        if (v.empty()) return 0.0;
        const std::size_t k = v.size() / 10;
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
        return v[k];
    };
    const double floor1 = percentile10(p1);
    const double floor2 = percentile10(p2);
    const double margin = std::pow(10.0, thresholds.margin_db / 10.0);
    const double floor_margin = std::pow(10.0, thresholds.floor_margin_db / 10.0);

    std::vector<ActivityLabel> raw(frames, ActivityLabel::Silence);
    for (std::size_t m = 0; m < frames; ++m) {
        const bool above1 = p1[m] > floor1 * floor_margin;
        const bool above2 = p2[m] > floor2 * floor_margin;
        if (above1 && p1[m] > p2[m] * margin) {
            raw[m] = ActivityLabel::DriverOnly;
        } else if (above2 && p2[m] > p1[m] * margin) {
            raw[m] = ActivityLabel::PassengerOnly;
        }
    }

    // One frame of hysteresis: adopt a new label only once it persists for
    // two consecutive frames.
    ActivityTimeline tl;
    tl.frame_len = cfg.frame_len;
    tl.hop = cfg.hop;
    tl.labels.assign(frames, ActivityLabel::Silence);
    ActivityLabel current = ActivityLabel::Silence;
    for (std::size_t m = 0; m < frames; ++m) {
        if (raw[m] != current && (m + 1 < frames ? raw[m + 1] == raw[m] : true)) {
            current = raw[m];
        }
        tl.labels[m] = current;
    }
    return tl;
}

void export_timeline_csv(const ActivityTimeline& timeline, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("export_timeline_csv: cannot open " + path);
    f << "frame_index,label\n";
    for (std::size_t m = 0; m < timeline.labels.size(); ++m) {
        f << m << ',' << to_string(timeline.labels[m]) << '\n';
    }
}

}  // namespace carmwf
