#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carmwf/activity.hpp"
#include "carmwf/room.hpp"
#include "carmwf/signal.hpp"
#include "carmwf/stft.hpp"

namespace carmwf {

using Complex = std::complex<double>;
using Vec2c = std::array<Complex, 2>;

struct Mat2c {
    Complex a00, a01, a10, a11;

    Complex trace() const { return a00 + a11; }
};

/// Per-bin regularization: the first entry whose max_hz is >= the bin centre
/// frequency applies (boundaries belong to the lower band).
struct DeltaScheduleEntry {
    double max_hz = std::numeric_limits<double>::infinity();
    double delta = 1.0;
};

struct MwfConfig {
    double frame_ms = 8.0;
    double lambda = 0.96;
    std::vector<DeltaScheduleEntry> delta_schedule{{std::numeric_limits<double>::infinity(), 1.0}};
    std::size_t warmup_frames = 10;
    std::optional<double> adaptation_stop_s;
    std::vector<std::size_t> diagnostic_bins;  // per-frame |w| / tr(R) dump rows

    /// delta = 100 below 312.5 Hz, 1.0 above.
    static std::vector<DeltaScheduleEntry> hoth_delta_schedule();

    double delta_for(double freq_hz) const;
    StftConfig stft(double sample_rate) const;
    void validate() const;
};

/// 2x2 Hermitian matrix stored as real diagonal plus upper off-diagonal;
/// Hermitian symmetry and a real non-negative diagonal hold by construction.
struct Hermitian2 {
    double d0 = 0.0, d1 = 0.0;
    Complex off{0.0, 0.0};  // (0,1) entry

    void accumulate(const Complex& x0, const Complex& x1, double lambda) {
        d0 = lambda * d0 + (1.0 - lambda) * std::norm(x0);
        d1 = lambda * d1 + (1.0 - lambda) * std::norm(x1);
        off = lambda * off + (1.0 - lambda) * x0 * std::conj(x1);
    }

    Mat2c full() const { return {Complex(d0, 0.0), off, std::conj(off), Complex(d1, 0.0)}; }
};

/// Tracked second-order statistics per bin for the three frame classes:
/// noise only, driver active (speech+noise), passenger active (speech+noise).
struct CorrelationState {
    std::vector<Hermitian2> noise, driver, passenger;
    std::size_t noise_frames = 0, driver_frames = 0, passenger_frames = 0;

    explicit CorrelationState(std::size_t bins = 0)
        : noise(bins), driver(bins), passenger(bins) {}

    std::size_t bins() const { return noise.size(); }
};

/// One moving-average update with forgetting factor lambda. Exactly one class
/// is updated according to the label; Both freezes all statistics.
void update_statistics(CorrelationState& state, const SpectralFrame& mic_frame,
                       ActivityLabel label, double lambda);

/// R = phi_driver + phi_passenger - phi_noise with negative real diagonal
/// entries floored at 0; p is the noise-subtracted cross-correlation column of
/// the target class (column 0 for the driver at mic 1, column 1 for the
/// passenger at mic 2).
std::pair<Mat2c, Vec2c> assemble_system(const CorrelationState& state, std::size_t bin,
                                        SourceLabel target);

/// w = (R + delta*(tr(R)/2)*I)^-1 p via the closed-form 2x2 inverse. Returns
/// zero (fail-safe mute) when the regularized determinant is negligible.
Vec2c solve_filter(const Mat2c& r, const Vec2c& p, double delta);

struct FilterSet {
    std::vector<Vec2c> driver;     // extracts the driver at mic 1
    std::vector<Vec2c> passenger;  // extracts the passenger at mic 2
};

/// A named 2-channel input component (e.g. "driver", "passenger", "noise")
/// to be passed through the identical time-varying filters.
using NamedComponent = std::pair<std::string, MultichannelSignal>;

struct MwfOutput {
    MultichannelSignal driver_estimate;     // s^_1A
    MultichannelSignal passenger_estimate;  // s^_2B
    MultichannelSignal mixed;               // sum of both estimates

    /// Shadow-filtered decomposition: each input component run through the
    /// same filter sequence. Components sum to the corresponding full output.
    struct ComponentOutput {
        std::string name;
        std::vector<double> driver_path;
        std::vector<double> passenger_path;
        std::vector<double> mixed;
    };
    std::vector<ComponentOutput> components;

    struct DiagnosticRow {
        std::size_t frame = 0, bin = 0;
        double abs_w_driver = 0.0, abs_w_passenger = 0.0, trace_r = 0.0;
    };
    std::vector<DiagnosticRow> diagnostics;

    FilterSet final_filters;  // state at the last processed frame

    const ComponentOutput& component(const std::string& name) const;
};

/// Frequency-domain adaptive MWF over a 2-channel stream: per frame the class
/// statistics are updated (until adaptation_stop_s), both per-bin filters are
/// re-solved with the scheduled regularization, applied as w^H x, and the two
/// estimates are overlap-added back to the time domain. Filters stay muted
/// until the target class and the noise class have each seen warmup_frames
/// updates. component_inputs are shadow-filtered for metric decomposition.
MwfOutput process_stream(const MultichannelSignal& mic_signals, const ActivityTimeline& timeline,
                         const MwfConfig& cfg,
                         const std::vector<NamedComponent>& component_inputs = {});

void export_diagnostics_csv(const std::vector<MwfOutput::DiagnosticRow>& rows,
                            const std::string& path);

}  // namespace carmwf
