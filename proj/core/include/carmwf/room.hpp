#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "carmwf/signal.hpp"

namespace carmwf {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const;
    Vec3 normalized() const;
};

enum class SourceLabel { Driver, Passenger };
enum class MicPattern { Omni, Cardioid };

struct SourceSpec {
    Vec3 position;
    SourceLabel label = SourceLabel::Driver;
};

struct MicSpec {
    Vec3 position;
    Vec3 orientation{1.0, 0.0, 0.0};  // unit vector, look direction
    MicPattern pattern = MicPattern::Cardioid;
};

/// Rectangular cabin with point sources and directional microphones.
/// Coordinates: x from the front wall, y from the left wall, z from the floor.
struct Scene {
    Vec3 room_dims{5.0, 2.0, 1.78};
    double rt60_s = 0.07;
    std::vector<SourceSpec> sources;
    std::vector<MicSpec> mics;
    double speed_of_sound = 343.0;
    std::size_t ir_length = 1024;
    double sample_rate = 16000.0;

    void validate() const;

    /// The simulated two-seat cabin: mics on the headliner 0.8 m apart, each
    /// aimed at its speaker.
    static Scene default_cabin();

    double source_mic_distance(std::size_t source_idx, std::size_t mic_idx) const;
};

/// Uniform wall reflection coefficient from the Sabine estimate
/// alpha = 24*ln(10)*V / (c*S*rt60), beta = sqrt(1 - alpha).
/// Throws std::invalid_argument when alpha >= 1 (rt60 unachievable).
double beta_from_rt60(const Vec3& room_dims, double rt60_s, double speed_of_sound = 343.0);

/// Image-method impulse response for one (source, mic) pair.
std::vector<double> generate_rir(const Scene& scene, std::size_t source_idx, std::size_t mic_idx);

struct ImpulseResponseSet {
    // ir[source][mic]
    std::array<std::array<std::vector<double>, 2>, 2> ir;
    double sample_rate = 16000.0;

    double energy(std::size_t source_idx, std::size_t mic_idx) const;
};

/// All four IRs of a 2x2 scene. When cross_side_attenuation_db is set, the
/// cross IRs (driver->mic2, passenger->mic1) are rescaled so their energy is
/// exactly that many dB below the corresponding same-side IR energy.
ImpulseResponseSet generate_rir_set(const Scene& scene,
                                    std::optional<double> cross_side_attenuation_db = {});

struct PositionSegment {
    double start_s = 0.0;
    Scene scene;
};

struct PositionSchedule {
    std::vector<PositionSegment> segments;
    double crossfade_s = 0.01;

    static PositionSchedule single(const Scene& scene);
    void validate() const;
};

/// Per-mic rendering of the dry sources, with the per-source components kept
/// separate so downstream metrics can decompose processed outputs.
struct RenderedScene {
    std::vector<MultichannelSignal> source_components;  // [source] -> 2-channel mic signal
    MultichannelSignal mic_sum;                         // sum over sources, 2 channels

    const MultichannelSignal& driver_component() const { return source_components.at(0); }
    const MultichannelSignal& passenger_component() const { return source_components.at(1); }
};

/// dry_sources: one channel per scene source. IRs switch at segment
/// boundaries with a linear crossfade of schedule.crossfade_s seconds.
RenderedScene render_scene(const MultichannelSignal& dry_sources, const PositionSchedule& schedule,
                           std::optional<double> cross_side_attenuation_db = {});

/// Writes all four IRs of the set as float32 WAV files under `dir`
/// (ir_<source>_<mic>.wav). Returns the written paths.
std::vector<std::string> dump_ir_set(const ImpulseResponseSet& set, const std::string& dir);

}  // namespace carmwf
