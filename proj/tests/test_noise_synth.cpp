#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <filesystem>
#include <fstream>

#include "carmwf/fft.hpp"
#include "carmwf/metrics.hpp"
#include "carmwf/noise.hpp"

using namespace carmwf;

namespace {

constexpr double kRate = 16000.0;
constexpr std::size_t kLongRun = 480000;  // 30 s

MultichannelSignal noise_30s(const NoiseColor& color, std::uint64_t seed, std::size_t channels = 2) {
    return generate_noise({color, seed, channels}, kLongRun, kRate);
}

/// dB-per-octave slope of a PSD between two frequencies (least squares on
/// log2 frequency).
double psd_slope_db_per_octave(const Psd& psd, double f_lo, double f_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) {
        const double f = psd.freq_hz[i];
        if (f < f_lo || f > f_hi) continue;
        const double x = std::log2(f);
        const double y = psd.level_db[i];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    return (static_cast<double>(n) * sxy - sx * sy) / (static_cast<double>(n) * sxx - sx * sx);
}

double flatness_db(const Psd& psd, double f_lo, double f_hi) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) {
        if (psd.freq_hz[i] < f_lo || psd.freq_hz[i] > f_hi) continue;
        lo = std::min(lo, psd.level_db[i]);
        hi = std::max(hi, psd.level_db[i]);
    }
    return hi - lo;
}

}  // namespace

TEST_CASE("white noise: flat PSD within +-1 dB from 100 Hz to 7 kHz") {
    const auto s = noise_30s(NoiseColor::white(), 1);
    // short segments trade resolution for variance, as usual for flatness checks
    const Psd psd = long_term_spectrum(s.channels[0], kRate, {1024, 512});
    CHECK(flatness_db(psd, 100.0, 7000.0) < 2.0);  // max-min <= 2 dB <=> +-1 dB
}

TEST_CASE("pink noise: -3 dB/octave between 200 Hz and 3.2 kHz") {
    const auto s = noise_30s(NoiseColor::pink(), 2);
    const Psd psd = long_term_spectrum(s.channels[0], kRate);
    CHECK(psd_slope_db_per_octave(psd, 200.0, 3200.0) == Catch::Approx(-3.0).margin(0.5));
}

TEST_CASE("red noise: -6 dB/octave between 200 Hz and 3.2 kHz") {
    const auto s = noise_30s(NoiseColor::red(), 3);
    const Psd psd = long_term_spectrum(s.channels[0], kRate);
    CHECK(psd_slope_db_per_octave(psd, 200.0, 3200.0) == Catch::Approx(-6.0).margin(0.7));
}

TEST_CASE("green noise: broad peak near 500 Hz, rolling off both ways") {
    const auto s = noise_30s(NoiseColor::green(), 4);
    const Psd psd = long_term_spectrum(s.channels[0], kRate);
    double peak_f = 0.0, peak_level = -1e300;
    for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) {
        const double f = psd.freq_hz[i];
        if (f < 50.0 || f > 7000.0) continue;
        if (psd.level_db[i] > peak_level) {
            peak_level = psd.level_db[i];
            peak_f = f;
        }
    }
    CHECK(peak_f > 300.0);
    CHECK(peak_f < 800.0);
    // >= 12 dB per decade away from the peak on both sides (we ship 15)
    CHECK(psd_slope_db_per_octave(psd, 800.0, 6000.0) < -12.0 * 0.301 + 0.7);
    CHECK(psd_slope_db_per_octave(psd, 60.0, 300.0) > 12.0 * 0.301 - 0.7);
}

TEST_CASE("hoth noise: follows the shipped envelope, about -5 dB/octave above 500 Hz") {
    const auto s = noise_30s(NoiseColor::hoth(), 5);
    const Psd psd = long_term_spectrum(s.channels[0], kRate);
    CHECK(psd_slope_db_per_octave(psd, 500.0, 3000.0) == Catch::Approx(-4.9).margin(0.8));

    // relative shape matches the table between two sampled frequencies
    const auto level_at = [&](double f) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) {
            if (std::abs(psd.freq_hz[i] - f) < std::abs(psd.freq_hz[best] - f)) best = i;
        }
        return psd.level_db[best];
    };
    const auto env = NoiseColor::hoth().envelope;
    const double measured = level_at(250.0) - level_at(2000.0);
    const double expected = env.db_at(250.0) - env.db_at(2000.0);
    CHECK(measured == Catch::Approx(expected).margin(1.5));
}

TEST_CASE("channels are independent: tiny lag-0 cross-correlation") {
    for (const auto& color : {NoiseColor::white(), NoiseColor::pink()}) {
        const auto s = noise_30s(color, 6);
        double dot = 0.0, e1 = 0.0, e2 = 0.0;
        for (std::size_t i = 0; i < s.length(); ++i) {
            dot += s.channels[0][i] * s.channels[1][i];
            e1 += s.channels[0][i] * s.channels[0][i];
            e2 += s.channels[1][i] * s.channels[1][i];
        }
        CHECK(std::abs(dot / std::sqrt(e1 * e2)) < 0.05);
    }
}

TEST_CASE("channel independence: magnitude-squared coherence below 0.1") {
    const auto s = noise_30s(NoiseColor::white(), 7);
    const std::size_t seg = 4096, hop = 2048, bins = seg / 2 + 1;
    std::vector<std::complex<double>> sxy(bins, {0.0, 0.0});
    std::vector<double> sxx(bins, 0.0), syy(bins, 0.0);
    std::vector<double> window(seg);
    for (std::size_t n = 0; n < seg; ++n) {
        window[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(n) / double(seg)));
    }
    std::vector<double> bx(seg), by(seg);
    for (std::size_t start = 0; start + seg <= s.length(); start += hop) {
        for (std::size_t n = 0; n < seg; ++n) {
            bx[n] = s.channels[0][start + n] * window[n];
            by[n] = s.channels[1][start + n] * window[n];
        }
        const auto fx = rfft(bx, seg);
        const auto fy = rfft(by, seg);
        for (std::size_t k = 0; k < bins; ++k) {
            sxy[k] += fx[k] * std::conj(fy[k]);
            sxx[k] += std::norm(fx[k]);
            syy[k] += std::norm(fy[k]);
        }
    }
    double coherence_sum = 0.0;
    for (std::size_t k = 1; k < bins - 1; ++k) {
        coherence_sum += std::norm(sxy[k]) / (sxx[k] * syy[k]);
    }
    CHECK(coherence_sum / static_cast<double>(bins - 2) < 0.1);
}

TEST_CASE("fixed seed reproduces bit-identical noise;派 channels differ") {
    const auto a = noise_30s(NoiseColor::pink(), 42);
    const auto b = noise_30s(NoiseColor::pink(), 42);
    REQUIRE(a.length() == b.length());
    for (std::size_t i = 0; i < 1000; ++i) {
        CHECK(a.channels[0][i] == b.channels[0][i]);
        CHECK(a.channels[1][i] == b.channels[1][i]);
    }
    bool any_diff = false;
    for (std::size_t i = 0; i < 1000; ++i) {
        if (a.channels[0][i] != a.channels[1][i]) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("generated noise is RMS-normalized") {
    for (const auto& color :
         {NoiseColor::white(), NoiseColor::red(), NoiseColor::green(), NoiseColor::hoth()}) {
        const auto s = generate_noise({color, 11, 1}, 80000, kRate);
        CHECK(rms(s.channels[0]) == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("mix_at_snr: equal powers at 0 dB target give unit scale") {
    MultichannelSignal speech = make_signal(2, 1000, kRate);
    MultichannelSignal noise = make_signal(2, 1000, kRate);
    for (std::size_t i = 0; i < 1000; ++i) {
        speech.channels[0][i] = std::sin(0.3 * double(i));
        speech.channels[1][i] = std::sin(0.3 * double(i));
        noise.channels[0][i] = std::cos(0.3 * double(i));
        noise.channels[1][i] = std::cos(0.3 * double(i));
    }
    // equal power on the shared range (sin and cos have equal mean square)
    const SampleRanges all{{0, 1000}};
    std::vector<MultichannelSignal> comps{speech, speech};
    const double scale = mix_at_snr(comps, noise, 0.0, {all, all});
    CHECK(scale == Catch::Approx(1.0).margin(2e-3));
}

TEST_CASE("mix_at_snr: raising the target by 10 dB scales noise by 10^(-1/2)") {
    MultichannelSignal speech = make_signal(2, 4000, kRate);
    for (auto& ch : speech.channels) {
        for (std::size_t i = 0; i < ch.size(); ++i) ch[i] = std::sin(0.21 * double(i));
    }
    const SampleRanges all{{0, 4000}};
    std::vector<MultichannelSignal> comps{speech, speech};

    auto noise0 = generate_noise({NoiseColor::white(), 8, 2}, 4000, kRate);
    auto noise10 = noise0;
    const double s0 = mix_at_snr(comps, noise0, 0.0, {all, all});
    const double s10 = mix_at_snr(comps, noise10, 10.0, {all, all});
    CHECK(s10 / s0 == Catch::Approx(std::pow(10.0, -0.5)).epsilon(1e-9));

    // achieved SNR is exact within 0.01 dB
    double ps = 0.0, pn = 0.0;
    for (std::size_t i = 0; i < 4000; ++i) {
        ps += speech.channels[0][i] * speech.channels[0][i];
        pn += noise10.channels[0][i] * noise10.channels[0][i];
    }
    CHECK(10.0 * std::log10(ps / pn) == Catch::Approx(10.0).margin(0.01));
}

TEST_CASE("mix_at_snr: zero speech power is an error") {
    MultichannelSignal speech = make_signal(2, 100, kRate);
    auto noise = generate_noise({NoiseColor::white(), 9, 2}, 100, kRate);
    const SampleRanges all{{0, 100}};
    std::vector<MultichannelSignal> comps{speech, speech};
    CHECK_THROWS(mix_at_snr(comps, noise, 0.0, {all, all}));
}

TEST_CASE("envelope tables: parse, clamp and reject malformed input") {
    const auto env = parse_envelope("# comment\n100 -3.0\n1000 -9.0\n");
    CHECK(env.db_at(100.0) == Catch::Approx(-3.0));
    CHECK(env.db_at(50.0) == Catch::Approx(-3.0));     // clamped below
    CHECK(env.db_at(4000.0) == Catch::Approx(-9.0));   // clamped above
    CHECK(env.db_at(316.23) == Catch::Approx(-6.0).margin(0.05));  // log-f midpoint

    CHECK_THROWS(parse_envelope("100 -3.0\n"));            // too short
    CHECK_THROWS(parse_envelope("100 -3\n90 -4\n"));       // not increasing
    CHECK_THROWS(parse_envelope("0 -3\n100 -4\n"));        // non-positive frequency

    // file loading matches the embedded table
    const auto dir = std::filesystem::temp_directory_path() / "carmwf_tests";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "hoth_copy.dat").string();
    {
        std::ofstream f(path);
        f << detail::kHothTableText;
    }
    const auto loaded = load_envelope(path);
    const auto builtin = NoiseColor::hoth().envelope;
    REQUIRE(loaded.freq_hz.size() == builtin.freq_hz.size());
    CHECK(loaded.db_at(1000.0) == builtin.db_at(1000.0));
}
