#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "carmwf/noise.hpp"
#include "carmwf/signal.hpp"
#include "carmwf/stft.hpp"

namespace carmwf {

enum class ActivityLabel : std::uint8_t { Silence, DriverOnly, PassengerOnly, Both };

const char* to_string(ActivityLabel label);

/// Per-frame speaker activity, aligned with an StftConfig framing.
struct ActivityTimeline {
    std::vector<ActivityLabel> labels;
    std::size_t frame_len = 0;
    std::size_t hop = 0;

    std::size_t frames() const { return labels.size(); }
    bool driver_active(std::size_t m) const {
        return labels[m] == ActivityLabel::DriverOnly || labels[m] == ActivityLabel::Both;
    }
    bool passenger_active(std::size_t m) const {
        return labels[m] == ActivityLabel::PassengerOnly || labels[m] == ActivityLabel::Both;
    }
    bool source_active(std::size_t m, bool passenger) const {
        return passenger ? passenger_active(m) : driver_active(m);
    }

    /// Merged sample ranges covered by frames where `pred` holds.
    template <typename Pred>
    SampleRanges sample_ranges_where(Pred pred) const {
        SampleRanges out;
        for (std::size_t m = 0; m < labels.size(); ++m) {
            if (!pred(labels[m])) continue;
            const std::size_t begin = m * hop;
            const std::size_t end = begin + frame_len;
            if (!out.empty() && begin <= out.back().second) {
                out.back().second = end;
            } else {
                out.emplace_back(begin, end);
            }
        }
        return out;
    }

    SampleRanges driver_ranges() const;
    SampleRanges passenger_ranges() const;
};

/// Ground-truth labels from the dry (pre-room) source signals: a source is
/// active in a frame when that frame's energy exceeds energy_floor_db relative
/// to the source's peak frame energy.
ActivityTimeline oracle_timeline(const MultichannelSignal& dry_sources, const StftConfig& cfg,
                                 double energy_floor_db = -45.0);

struct PowerDetectorThresholds {
    // Tuned once against the oracle on the simulated cabin at 5 dB input SNR
    // and frozen. The dominance margin is small because the cross-side level
    // difference shrinks to ~1 dB once smoothed speech rides on equal noise.
    double margin_db = 0.2;        // dominance margin between the smoothed mic powers
    double floor_margin_db = 1.5;  // required headroom above the noise-floor estimate
    double smoothing_lambda = 0.96;
};

/// Simple two-mic detector: single-pole smoothed frame powers, dominance
/// margin against the other mic plus a noise-floor gate, with one frame of
/// hysteresis. Frames that pass neither gate are Silence; the detector never
/// emits Both.
ActivityTimeline power_detector(const MultichannelSignal& mic_signals, const StftConfig& cfg,
                                const PowerDetectorThresholds& thresholds = {});

/// CSV rows "frame_index,label".
void export_timeline_csv(const ActivityTimeline& timeline, const std::string& path);

}  // namespace carmwf
