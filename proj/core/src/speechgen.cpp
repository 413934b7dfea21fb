#include "carmwf/speechgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "carmwf/wav.hpp"

namespace carmwf {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0xC0FFEEULL) {}
    double uniform() { return (static_cast<double>(splitmix64(state_) >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(splitmix64(state_) % n); }

private:
    std::uint64_t state_;
};

// Two-pole resonator, unity gain at the resonance frequency.
struct Resonator {
    double b0 = 1.0, a1 = 0.0, a2 = 0.0;
    double z1 = 0.0, z2 = 0.0;

    void tune(double freq, double bandwidth, double fs) {
        const double r = std::exp(-std::numbers::pi * bandwidth / fs);
        const double theta = kTwoPi * freq / fs;
        a1 = -2.0 * r * std::cos(theta);
        a2 = r * r;
        b0 = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
    }

    double process(double x) {
        const double y = b0 * x - a1 * z1 - a2 * z2;
        z2 = z1;
        z1 = y;
        return y;
    }
};

struct Vowel {
    double f1, f2, f3;
};

// rough adult vowel formant targets
constexpr Vowel kVowels[] = {
    {730.0, 1090.0, 2440.0},  // a
    {270.0, 2290.0, 3010.0},  // i
    {300.0, 870.0, 2240.0},   // u
    {530.0, 1840.0, 2480.0},  // e
    {570.0, 840.0, 2410.0},   // o
    {660.0, 1720.0, 2410.0},  // ae
};

}  // namespace

std::vector<double> generate_utterance(double duration_s, double sample_rate, std::uint64_t seed) {
    if (duration_s <= 0.0 || sample_rate <= 0.0) {
        throw std::invalid_argument("generate_utterance: duration and rate must be positive");
    }
    const std::size_t n = static_cast<std::size_t>(duration_s * sample_rate);
    std::vector<double> out(n, 0.0);
    Rng rng(seed);

    const double f0_base = rng.uniform(105.0, 215.0);
    Resonator r1, r2, r3;

    std::size_t pos = 0;
    Vowel current = kVowels[rng.index(std::size(kVowels))];
    while (pos < n) {
        const double syll_s = rng.uniform(0.14, 0.30);
        const double gap_s = rng.uniform(0.02, 0.08);
        const std::size_t syll_len = static_cast<std::size_t>(syll_s * sample_rate);
        const std::size_t gap_len = static_cast<std::size_t>(gap_s * sample_rate);
        const Vowel next = kVowels[rng.index(std::size(kVowels))];
        const bool fricative_onset = rng.uniform() < 0.35;
        const double level = std::pow(10.0, rng.uniform(-2.0, 0.0) / 20.0);
        const double f0_start = f0_base * rng.uniform(0.95, 1.15);
        const double f0_end = f0_start * rng.uniform(0.85, 1.0);

        const std::size_t fric_len =
            fricative_onset ? static_cast<std::size_t>(rng.uniform(0.05, 0.10) * sample_rate) : 0;

        double phase = 0.0;
        double lp1 = 0.0, lp2 = 0.0;  // glottal-ish spectral tilt
        double prev_for_diff = 0.0;
        double hp_state = 0.0;
        for (std::size_t i = 0; i < syll_len && pos + i < n; ++i) {
            const double u = static_cast<double>(i) / static_cast<double>(syll_len);
            // formant glide across the syllable
            const double f1 = current.f1 + (next.f1 - current.f1) * u;
            const double f2 = current.f2 + (next.f2 - current.f2) * u;
            const double f3 = current.f3 + (next.f3 - current.f3) * u;
            r1.tune(f1, 60.0, sample_rate);
            r2.tune(f2, 90.0, sample_rate);
            r3.tune(f3, 130.0, sample_rate);

            double excitation;
            if (i < fric_len) {
                // unvoiced onset: first-difference noise, high tilted
                const double w = rng.uniform(-1.0, 1.0);
                excitation = 0.25 * (w - hp_state);
                hp_state = w;
            } else {
                const double f0 = f0_start + (f0_end - f0_start) * u;
                phase += f0 / sample_rate;
                double pulse = 0.0;
                if (phase >= 1.0) {
                    phase -= 1.0;
                    pulse = 1.0;
                }
                // two one-pole lowpasses shape the pulse train towards a
                // glottal -12 dB/oct source spectrum
                lp1 = 0.9 * lp1 + pulse;
                lp2 = 0.92 * lp2 + 0.08 * lp1;
                excitation = lp2;
            }

            double v = r1.process(excitation) + 0.5 * r2.process(excitation) +
                       0.25 * r3.process(excitation);
            // radiation: first difference (+6 dB/oct)
            const double radiated = v - 0.95 * prev_for_diff;
            prev_for_diff = v;

            // syllabic raised-cosine envelope
            const double attack = 0.04, release = 0.10;
            double env = 1.0;
            if (u < attack) env = 0.5 * (1.0 - std::cos(std::numbers::pi * u / attack));
            if (u > 1.0 - release) {
                env = 0.5 * (1.0 - std::cos(std::numbers::pi * (1.0 - u) / release));
            }
            out[pos + i] = level * env * radiated;
        }
        pos += syll_len + gap_len;
        current = next;
    }

    // peak normalize to 0.5
    double peak = 0.0;
    for (double v : out) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) {
        for (double& v : out) v *= 0.5 / peak;
    }
    return out;
}

namespace {

struct Slot {
    std::size_t begin, end;
    bool driver;
};

std::vector<Slot> alternating_slots(const SpeechProgramSpec& spec, double fs, std::size_t total) {
    std::vector<Slot> slots;
    const std::size_t utt_len = static_cast<std::size_t>(spec.utterance_s * fs);
    const std::size_t gap_len = static_cast<std::size_t>(spec.gap_s * fs);
    std::size_t pos = static_cast<std::size_t>(spec.lead_silence_s * fs);
    bool driver = true;
    while (pos + utt_len <= total) {
        slots.push_back({pos, pos + utt_len, driver});
        pos += utt_len + gap_len;
        driver = !driver;
    }
    return slots;
}

SpeechProgram assemble_program(const SpeechProgramSpec& spec, double fs,
                               const std::vector<std::vector<double>>& material) {
    if (spec.total_s <= spec.lead_silence_s + spec.utterance_s) {
        throw std::invalid_argument("SpeechProgram: total_s too short for one utterance");
    }
    const std::size_t total = static_cast<std::size_t>(spec.total_s * fs);
    SpeechProgram program;
    program.dry = make_signal(2, total, fs);

    // both speakers run through the same material sequence
    std::size_t next_material[2] = {0, 0};
    for (const Slot& slot : alternating_slots(spec, fs, total)) {
        std::size_t& counter = next_material[slot.driver ? 0 : 1];
        const auto& utt = material[counter % material.size()];
        ++counter;
        auto& ch = program.dry.channels[slot.driver ? 0 : 1];
        for (std::size_t i = 0; i < utt.size() && slot.begin + i < slot.end; ++i) {
            ch[slot.begin + i] = utt[i];
        }
        auto& ranges = slot.driver ? program.driver_ranges : program.passenger_ranges;
        ranges.emplace_back(slot.begin, slot.end);
    }
    if (program.driver_ranges.empty() || program.passenger_ranges.empty()) {
        throw std::invalid_argument("SpeechProgram: schedule produced no utterances for a speaker");
    }
    return program;
}

std::vector<double> load_mono(const std::string& path, double fs) {
    const MultichannelSignal s = load_wav(path);
    if (s.sample_rate != fs) {
        throw std::invalid_argument("SpeechProgram: " + path + " sample rate " +
                                    std::to_string(s.sample_rate) + " does not match scene rate");
    }
    return s.channels.at(0);
}

}  // namespace

SpeechProgram build_speech_program(const SpeechProgramSpec& spec, double sample_rate) {
    std::vector<std::vector<double>> material;
    if (!spec.driver_wav.empty() || !spec.passenger_wav.empty()) {
        if (!spec.driver_wav.empty()) material.push_back(load_mono(spec.driver_wav, sample_rate));
        if (!spec.passenger_wav.empty()) {
            material.push_back(load_mono(spec.passenger_wav, sample_rate));
        }
    } else {
        // two distinct utterances, reused by both speakers
        material.push_back(generate_utterance(spec.utterance_s, sample_rate, spec.seed));
        material.push_back(generate_utterance(spec.utterance_s, sample_rate, spec.seed + 1));
    }
    return assemble_program(spec, sample_rate, material);
}

SpeechProgram build_white_burst_program(const SpeechProgramSpec& spec, double sample_rate) {
    std::vector<std::vector<double>> material;
    for (int i = 0; i < 2; ++i) {
        NoiseSpec ns;
        ns.color = NoiseColor::white();
        ns.seed = spec.seed + 100 + static_cast<std::uint64_t>(i);
        ns.channels = 1;
        auto burst = generate_noise(ns, static_cast<std::size_t>(spec.utterance_s * sample_rate),
                                    sample_rate);
        auto& samples = burst.channels[0];
        for (double& v : samples) v *= 0.1;  // headroom
        material.push_back(std::move(samples));
    }
    return assemble_program(spec, sample_rate, material);
}

}  // namespace carmwf
