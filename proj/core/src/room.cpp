#include "carmwf/room.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "carmwf/convolve.hpp"
#include "carmwf/wav.hpp"

namespace carmwf {
namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double t) {
    if (std::abs(t) < 1e-12) return 1.0;
    return std::sin(kPi * t) / (kPi * t);
}

void check_inside(const Vec3& p, const Vec3& dims, const std::string& what) {
    if (p.x <= 0.0 || p.x >= dims.x || p.y <= 0.0 || p.y >= dims.y || p.z <= 0.0 ||
        p.z >= dims.z) {
        throw std::invalid_argument("Scene: " + what + " must lie strictly inside the room");
    }
}

double directivity_gain(const MicSpec& mic, const Vec3& to_image_unit) {
    if (mic.pattern == MicPattern::Omni) return 1.0;
    const double cos_theta = mic.orientation.dot(to_image_unit);
    return 0.5 * (1.0 + cos_theta);  // cardioid
}

}  // namespace

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Vec3 Vec3::normalized() const {
    const double n = norm();
    if (n <= 0.0) throw std::invalid_argument("Vec3: cannot normalize a zero vector");
    return {x / n, y / n, z / n};
}

void Scene::validate() const {
    if (room_dims.x <= 0.0 || room_dims.y <= 0.0 || room_dims.z <= 0.0) {
        throw std::invalid_argument("Scene: room dimensions must be positive");
    }
    if (rt60_s <= 0.0) throw std::invalid_argument("Scene: rt60 must be positive");
    if (speed_of_sound <= 0.0) throw std::invalid_argument("Scene: speed of sound must be positive");
    if (sample_rate <= 0.0) throw std::invalid_argument("Scene: sample rate must be positive");
    if (ir_length == 0) throw std::invalid_argument("Scene: ir_length must be positive");
    for (std::size_t i = 0; i < sources.size(); ++i) {
        check_inside(sources[i].position, room_dims, "source " + std::to_string(i));
    }
    for (std::size_t i = 0; i < mics.size(); ++i) {
        check_inside(mics[i].position, room_dims, "mic " + std::to_string(i));
        if (std::abs(mics[i].orientation.norm() - 1.0) > 1e-9) {
            throw std::invalid_argument("Scene: mic " + std::to_string(i) +
                                        " orientation must be unit length");
        }
    }
}

Scene Scene::default_cabin() {
    Scene s;
    s.room_dims = {5.0, 2.0, 1.78};
    s.rt60_s = 0.07;
    const Vec3 driver{2.5, 0.6, 0.75};
    const Vec3 passenger{2.5, 1.4, 0.75};
    const Vec3 mic1{1.65, 0.6, 1.7};
    const Vec3 mic2{1.65, 1.4, 1.7};
    s.sources = {{driver, SourceLabel::Driver}, {passenger, SourceLabel::Passenger}};
    s.mics = {{mic1, (driver - mic1).normalized(), MicPattern::Cardioid},
              {mic2, (passenger - mic2).normalized(), MicPattern::Cardioid}};
    return s;
}

double Scene::source_mic_distance(std::size_t source_idx, std::size_t mic_idx) const {
    return (sources.at(source_idx).position - mics.at(mic_idx).position).norm();
}

double beta_from_rt60(const Vec3& room_dims, double rt60_s, double speed_of_sound) {
    if (rt60_s <= 0.0) throw std::invalid_argument("beta_from_rt60: rt60 must be positive");
    if (room_dims.x <= 0.0 || room_dims.y <= 0.0 || room_dims.z <= 0.0) {
        throw std::invalid_argument("beta_from_rt60: room dimensions must be positive");
    }
    const double volume = room_dims.x * room_dims.y * room_dims.z;
    const double surface = 2.0 * (room_dims.x * room_dims.y + room_dims.x * room_dims.z +
                                  room_dims.y * room_dims.z);
    const double alpha = 24.0 * std::log(10.0) * volume / (speed_of_sound * surface * rt60_s);
    if (alpha >= 1.0) {
        throw std::invalid_argument("beta_from_rt60: rt60 unachievable for this geometry "
                                    "(Sabine absorption >= 1)");
    }
    return std::sqrt(1.0 - alpha);
}

std::vector<double> generate_rir(const Scene& scene, std::size_t source_idx, std::size_t mic_idx) {
    scene.validate();
    const Vec3 src = scene.sources.at(source_idx).position;
    const MicSpec& mic = scene.mics.at(mic_idx);
    const double beta = beta_from_rt60(scene.room_dims, scene.rt60_s, scene.speed_of_sound);
    const double fs = scene.sample_rate;
    const double c = scene.speed_of_sound;

    std::vector<double> h(scene.ir_length, 0.0);

    // Fractional delays via a Hann-windowed sinc of width tw samples.
    const long half = std::lround(0.004 * fs);
    const long tw = 2 * half;

    // Enough image orders that every image within the IR's travel reach is included.
    const double max_dist = c * static_cast<double>(scene.ir_length + tw) / fs;
    const auto order = [&](double dim) {
        return static_cast<long>(std::ceil(max_dist / (2.0 * dim))) + 1;
    };
    const long nx = order(scene.room_dims.x);
    const long ny = order(scene.room_dims.y);
    const long nz = order(scene.room_dims.z);

    const double room[3] = {scene.room_dims.x, scene.room_dims.y, scene.room_dims.z};
    const double s[3] = {src.x, src.y, src.z};
    const double r[3] = {mic.position.x, mic.position.y, mic.position.z};

    for (long mx = -nx; mx <= nx; ++mx) {
        for (long my = -ny; my <= ny; ++my) {
            for (long mz = -nz; mz <= nz; ++mz) {
                const long m[3] = {mx, my, mz};
                for (int q = 0; q < 8; ++q) {
                    const int qv[3] = {q & 1, (q >> 1) & 1, (q >> 2) & 1};
                    double d[3];
                    long reflections = 0;
                    for (int axis = 0; axis < 3; ++axis) {
                        d[axis] = (1 - 2 * qv[axis]) * s[axis] - r[axis] +
                                  2.0 * static_cast<double>(m[axis]) * room[axis];
                        reflections += std::labs(m[axis] - qv[axis]) + std::labs(m[axis]);
                    }
                    const double dist = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
                    const double delay_samples = dist / c * fs;
                    const long int_delay = static_cast<long>(std::floor(delay_samples));
                    if (int_delay >= static_cast<long>(scene.ir_length)) continue;

                    double gain = std::pow(beta, static_cast<double>(reflections)) /
                                  (4.0 * kPi * std::max(dist, 1e-6));
                    if (mic.pattern == MicPattern::Cardioid) {
                        const Vec3 dir{d[0] / dist, d[1] / dist, d[2] / dist};
                        gain *= directivity_gain(mic, dir);
                    }
                    if (gain == 0.0) continue;

                    const double frac = delay_samples - static_cast<double>(int_delay);
                    for (long n = 0; n < tw; ++n) {
                        const long pos = int_delay - half + 1 + n;
                        if (pos < 0 || pos >= static_cast<long>(scene.ir_length)) continue;
                        const double t = static_cast<double>(n - half + 1) - frac;
                        const double win = 0.5 * (1.0 + std::cos(2.0 * kPi * t / static_cast<double>(tw)));
                        h[static_cast<std::size_t>(pos)] += gain * win * sinc(t);
                    }
                }
            }
        }
    }
    return h;
}

double ImpulseResponseSet::energy(std::size_t source_idx, std::size_t mic_idx) const {
    return sum_squares(ir.at(source_idx).at(mic_idx));
}

ImpulseResponseSet generate_rir_set(const Scene& scene,
                                    std::optional<double> cross_side_attenuation_db) {
    if (scene.sources.size() != 2 || scene.mics.size() != 2) {
        throw std::invalid_argument("generate_rir_set: scene must have exactly 2 sources and 2 mics");
    }
    if (cross_side_attenuation_db && *cross_side_attenuation_db < 0.0) {
        throw std::invalid_argument("generate_rir_set: cross-side attenuation must be >= 0 dB");
    }
    ImpulseResponseSet set;
    set.sample_rate = scene.sample_rate;
    for (std::size_t si = 0; si < 2; ++si) {
        for (std::size_t mi = 0; mi < 2; ++mi) {
            set.ir[si][mi] = generate_rir(scene, si, mi);
        }
    }
    if (cross_side_attenuation_db) {
        const double ratio = std::pow(10.0, -*cross_side_attenuation_db / 10.0);
        for (std::size_t si = 0; si < 2; ++si) {
            const std::size_t same_mic = si;      // mic i is dedicated to source i
            const std::size_t cross_mic = 1 - si;
            const double e_same = set.energy(si, same_mic);
            const double e_cross = set.energy(si, cross_mic);
            if (e_cross <= 0.0) continue;
            const double scale = std::sqrt(e_same * ratio / e_cross);
            for (double& v : set.ir[si][cross_mic]) v *= scale;
        }
    }
    return set;
}

PositionSchedule PositionSchedule::single(const Scene& scene) {
    PositionSchedule sched;
    sched.segments.push_back({0.0, scene});
    return sched;
}

void PositionSchedule::validate() const {
    if (segments.empty()) throw std::invalid_argument("PositionSchedule: needs at least one segment");
    if (segments.front().start_s > 0.0) {
        throw std::invalid_argument("PositionSchedule: first segment must start at 0 (gap before start)");
    }
    for (std::size_t i = 1; i < segments.size(); ++i) {
        if (segments[i].start_s <= segments[i - 1].start_s) {
            throw std::invalid_argument("PositionSchedule: segment starts must be strictly increasing");
        }
    }
    if (crossfade_s < 0.0) throw std::invalid_argument("PositionSchedule: crossfade must be >= 0");
}

RenderedScene render_scene(const MultichannelSignal& dry_sources, const PositionSchedule& schedule,
                           std::optional<double> cross_side_attenuation_db) {
    dry_sources.validate();
    schedule.validate();
    const Scene& first = schedule.segments.front().scene;
    if (dry_sources.num_channels() != first.sources.size() || first.sources.size() != 2) {
        throw std::invalid_argument("render_scene: need one dry channel per source (2 sources)");
    }
    const double fs = dry_sources.sample_rate;
    const std::size_t n = dry_sources.length();

    // Per-segment per-sample gains; linear crossfade after each boundary, gains sum to 1.
    const std::size_t num_segments = schedule.segments.size();
    std::vector<ImpulseResponseSet> irs;
    irs.reserve(num_segments);
    for (const auto& seg : schedule.segments) {
        irs.push_back(generate_rir_set(seg.scene, cross_side_attenuation_db));
    }

    const auto segment_gain = [&](std::size_t seg, double t) {
        const double begin = schedule.segments[seg].start_s;
        const double end =
            seg + 1 < num_segments ? schedule.segments[seg + 1].start_s : std::numeric_limits<double>::infinity();
        const double xf = schedule.crossfade_s;
        double g = 0.0;
        if (t >= begin && t < end) {
            g = 1.0;
            if (seg > 0 && xf > 0.0 && t < begin + xf) g = (t - begin) / xf;  // fading in
        } else if (t >= end && xf > 0.0 && t < end + xf) {
            g = 1.0 - (t - end) / xf;  // fading out into the next segment
        }
        return std::clamp(g, 0.0, 1.0);
    };

    RenderedScene out;
    out.source_components.assign(2, make_signal(2, n, fs));
    out.mic_sum = make_signal(2, n, fs);

    for (std::size_t si = 0; si < 2; ++si) {
        for (std::size_t mi = 0; mi < 2; ++mi) {
            auto& dest = out.source_components[si].channels[mi];
            for (std::size_t seg = 0; seg < num_segments; ++seg) {
                const auto conv = fft_convolve(dry_sources.channels[si], irs[seg].ir[si][mi]);
                for (std::size_t i = 0; i < n; ++i) {
                    const double g = segment_gain(seg, static_cast<double>(i) / fs);
                    if (g > 0.0) dest[i] += g * conv[i];
                }
            }
        }
    }
    for (std::size_t mi = 0; mi < 2; ++mi) {
        for (std::size_t si = 0; si < 2; ++si) {
            add_into(out.mic_sum.channels[mi], out.source_components[si].channels[mi]);
        }
    }
    return out;
}

std::vector<std::string> dump_ir_set(const ImpulseResponseSet& set, const std::string& dir) {
    std::filesystem::create_directories(dir);
    static const char* source_names[2] = {"driver", "passenger"};
    std::vector<std::string> paths;
    for (std::size_t si = 0; si < 2; ++si) {
        for (std::size_t mi = 0; mi < 2; ++mi) {
            MultichannelSignal s;
            s.sample_rate = set.sample_rate;
            s.channels = {set.ir[si][mi]};
            const std::string path = dir + "/ir_" + source_names[si] + "_mic" +
                                     std::to_string(mi + 1) + ".wav";
            save_wav(s, path, WavEncoding::Float32);
            paths.push_back(path);
        }
    }
    return paths;
}

}  // namespace carmwf
