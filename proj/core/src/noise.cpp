#include "carmwf/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "carmwf/fft.hpp"

namespace carmwf {
namespace {

// splitmix64; used to derive independent per-channel stream seeds
std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro-free minimal generator: mt19937_64 + hand-rolled Box-Muller keeps
// the byte stream identical across standard libraries.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : state_(seed ? seed : 0x1234ABCDULL) {}

    double uniform() {  // (0, 1)
        const std::uint64_t v = splitmix64(state_);
        return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Per-color amplitude weight at frequency f. Frequencies below 20 Hz reuse
// the 20 Hz weight to keep 1/f shapes bounded; DC is zeroed.
double amplitude_weight(const NoiseColor& color, double f) {
    constexpr double kRefHz = 1000.0;
    constexpr double kLowClampHz = 20.0;
    switch (color.kind) {
        case NoiseColorKind::White:
            return 1.0;
        case NoiseColorKind::Pink:
            return std::sqrt(kRefHz / std::max(f, kLowClampHz));
        case NoiseColorKind::Red:
            return kRefHz / std::max(f, kLowClampHz);
        case NoiseColorKind::Green:
        case NoiseColorKind::Hoth:
            return std::pow(10.0, color.envelope.db_at(std::max(f, 1.0)) / 20.0);
    }
    return 1.0;
}

}  // namespace

double SpectralEnvelope::db_at(double freq) const {
    if (freq_hz.empty()) throw std::logic_error("SpectralEnvelope: empty table");
    if (freq <= freq_hz.front()) return level_db.front();
    if (freq >= freq_hz.back()) return level_db.back();
    const auto it = std::upper_bound(freq_hz.begin(), freq_hz.end(), freq);
    const std::size_t hi = static_cast<std::size_t>(it - freq_hz.begin());
    const std::size_t lo = hi - 1;
    const double t = (std::log(freq) - std::log(freq_hz[lo])) /
                     (std::log(freq_hz[hi]) - std::log(freq_hz[lo]));
    return level_db[lo] + t * (level_db[hi] - level_db[lo]);
}

void SpectralEnvelope::validate() const {
    if (freq_hz.size() != level_db.size() || freq_hz.size() < 2) {
        throw std::invalid_argument("SpectralEnvelope: need >= 2 (frequency, level) rows");
    }
    for (std::size_t i = 0; i < freq_hz.size(); ++i) {
        if (!std::isfinite(freq_hz[i]) || !std::isfinite(level_db[i]) || freq_hz[i] <= 0.0) {
            throw std::invalid_argument("SpectralEnvelope: non-finite or non-positive entry");
        }
        if (i > 0 && freq_hz[i] <= freq_hz[i - 1]) {
            throw std::invalid_argument("SpectralEnvelope: frequencies must be strictly increasing");
        }
    }
}

SpectralEnvelope parse_envelope(std::string_view text) {
    SpectralEnvelope env;
    std::istringstream stream{std::string(text)};
    std::string line;
    while (std::getline(stream, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        double f = 0.0, db = 0.0;
        if (row >> f >> db) {
            env.freq_hz.push_back(f);
            env.level_db.push_back(db);
        }
    }
    env.validate();
    return env;
}

SpectralEnvelope load_envelope(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_envelope: cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_envelope(buf.str());
}

NoiseColor NoiseColor::white() { return {NoiseColorKind::White, {}}; }
NoiseColor NoiseColor::pink() { return {NoiseColorKind::Pink, {}}; }
NoiseColor NoiseColor::red() { return {NoiseColorKind::Red, {}}; }

NoiseColor NoiseColor::green() {
    return {NoiseColorKind::Green, parse_envelope(detail::kGreenTableText)};
}

NoiseColor NoiseColor::hoth() {
    return {NoiseColorKind::Hoth, parse_envelope(detail::kHothTableText)};
}

NoiseColor NoiseColor::from_name(const std::string& name) {
    if (name == "white") return white();
    if (name == "pink") return pink();
    if (name == "red") return red();
    if (name == "green") return green();
    if (name == "hoth") return hoth();
    throw std::invalid_argument("NoiseColor: unknown color '" + name +
                                "' (expected white|pink|red|green|hoth)");
}

std::string NoiseColor::name() const {
    switch (kind) {
        case NoiseColorKind::White: return "white";
        case NoiseColorKind::Pink: return "pink";
        case NoiseColorKind::Red: return "red";
        case NoiseColorKind::Green: return "green";
        case NoiseColorKind::Hoth: return "hoth";
    }
    return "white";
}

MultichannelSignal generate_noise(const NoiseSpec& spec, std::size_t length_samples, double rate) {
    if (length_samples == 0) throw std::invalid_argument("generate_noise: length must be positive");
    if (spec.channels == 0) throw std::invalid_argument("generate_noise: need >= 1 channel");

    MultichannelSignal out;
    out.sample_rate = rate;
    out.channels.reserve(spec.channels);

    const std::size_t n = next_pow2(length_samples);
    for (std::size_t ch = 0; ch < spec.channels; ++ch) {
        std::uint64_t stream_state = spec.seed;
        // derive an independent stream seed per channel
        std::uint64_t sub_seed = 0;
        for (std::size_t k = 0; k <= ch; ++k) sub_seed = splitmix64(stream_state);
        GaussianRng rng(sub_seed);

        std::vector<double> white(n);
        for (double& v : white) v = rng.gaussian();

        std::vector<double> shaped;
        if (spec.color.kind == NoiseColorKind::White) {
            shaped = std::move(white);
        } else {
            auto spec_bins = rfft(white, n);
            for (std::size_t k = 0; k < spec_bins.size(); ++k) {
                const double f = static_cast<double>(k) * rate / static_cast<double>(n);
                spec_bins[k] *= (k == 0) ? 0.0 : amplitude_weight(spec.color, f);
            }
            shaped = irfft(spec_bins, n);
        }
        shaped.resize(length_samples);
        const double r = rms(shaped);
        if (r > 0.0) {
            for (double& v : shaped) v /= r;
        }
        out.channels.push_back(std::move(shaped));
    }
    return out;
}

namespace {

double power_over_ranges(std::span<const double> x, const SampleRanges& ranges) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& [begin, end] : ranges) {
        for (std::size_t i = begin; i < end && i < x.size(); ++i) {
            acc += x[i] * x[i];
            ++count;
        }
    }
    return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

}  // namespace

double mix_at_snr(const std::vector<MultichannelSignal>& speech_components,
                  MultichannelSignal& noise, double target_input_snr_db,
                  const std::vector<SampleRanges>& active_segments) {
    if (speech_components.size() != active_segments.size() || speech_components.empty()) {
        throw std::invalid_argument("mix_at_snr: need matching speech components and segments");
    }
    double snr_db_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t s = 0; s < speech_components.size(); ++s) {
        if (active_segments[s].empty()) {
            throw std::invalid_argument("mix_at_snr: empty active segments for source " +
                                        std::to_string(s));
        }
        const std::size_t ref_mic = s;  // mic s is dedicated to source s
        const double ps = power_over_ranges(speech_components[s].channels.at(ref_mic),
                                            active_segments[s]);
        const double pn = power_over_ranges(noise.channels.at(ref_mic), active_segments[s]);
        if (ps <= 0.0) throw std::invalid_argument("mix_at_snr: zero speech power for source " +
                                                   std::to_string(s));
        if (pn <= 0.0) throw std::invalid_argument("mix_at_snr: zero noise power");
        snr_db_sum += 10.0 * std::log10(ps / pn);
        ++used;
    }
    const double current_db = snr_db_sum / static_cast<double>(used);
    const double scale = std::pow(10.0, (current_db - target_input_snr_db) / 20.0);
    for (auto& ch : noise.channels) {
        for (double& v : ch) v *= scale;
    }
    return scale;
}

}  // namespace carmwf
