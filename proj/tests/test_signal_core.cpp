#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "carmwf/convolve.hpp"
#include "carmwf/fft.hpp"
#include "carmwf/signal.hpp"
#include "carmwf/stft.hpp"
#include "carmwf/wav.hpp"

using namespace carmwf;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "carmwf_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

MultichannelSignal random_signal(std::size_t channels, std::size_t len, std::uint64_t seed,
                                 double amplitude = 0.5) {
    MultichannelSignal s = make_signal(channels, len, 16000.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-amplitude, amplitude);
    for (auto& ch : s.channels) {
        for (double& v : ch) v = dist(rng);
    }
    return s;
}

// brute-force reference for fft_convolve
std::vector<double> naive_convolve(const std::vector<double>& x, const std::vector<double>& h) {
    std::vector<double> y(x.size() + h.size() - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < h.size(); ++j) {
            y[i + j] += x[i] * h[j];
        }
    }
    return y;
}

double relative_rms_error(std::span<const double> a, std::span<const double> b) {
    REQUIRE(a.size() == b.size());
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        err += (a[i] - b[i]) * (a[i] - b[i]);
        ref += b[i] * b[i];
    }
    return ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err);
}

}  // namespace

TEST_CASE("wav: PCM16 mono round trip preserves shape and rate") {
    MultichannelSignal s = make_signal(1, 160, 16000.0);
    for (std::size_t i = 0; i < s.length(); ++i) {
        s.channels[0][i] = 0.25 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 16000.0);
    }
    const auto path = temp_file("mono16.wav");
    save_wav(s, path.string());
    const MultichannelSignal back = load_wav(path.string());
    CHECK(back.num_channels() == 1);
    CHECK(back.length() == 160);
    CHECK(back.sample_rate == 16000.0);
}

TEST_CASE("wav: PCM16 round trip within 1 LSB") {
    const MultichannelSignal s = random_signal(2, 500, 11, 0.9);
    const auto path = temp_file("stereo16.wav");
    const auto result = save_wav(s, path.string());
    CHECK(result.clipped_samples == 0);
    const MultichannelSignal back = load_wav(path.string());
    REQUIRE(back.num_channels() == 2);
    for (std::size_t ch = 0; ch < 2; ++ch) {
        for (std::size_t i = 0; i < s.length(); ++i) {
            CHECK(std::abs(back.channels[ch][i] - s.channels[ch][i]) <= 1.0 / 32768.0);
        }
    }
}

TEST_CASE("wav: float32 round trip is exact to float precision") {
    const MultichannelSignal s = random_signal(1, 300, 12, 0.8);
    const auto path = temp_file("float32.wav");
    save_wav(s, path.string(), WavEncoding::Float32);
    const MultichannelSignal back = load_wav(path.string());
    for (std::size_t i = 0; i < s.length(); ++i) {
        CHECK(back.channels[0][i] == Catch::Approx(s.channels[0][i]).margin(1e-7));
    }
}

TEST_CASE("wav: 44100 Hz rate passes through untouched") {
    MultichannelSignal s = make_signal(1, 100, 44100.0);
    const auto path = temp_file("rate44k.wav");
    save_wav(s, path.string());
    CHECK(load_wav(path.string()).sample_rate == 44100.0);
}

TEST_CASE("wav: out-of-range samples clamp and are counted") {
    MultichannelSignal s = make_signal(1, 3, 16000.0);
    s.channels[0] = {0.0, 1.5, -2.0};
    const auto path = temp_file("clipped.wav");
    const auto result = save_wav(s, path.string());
    CHECK(result.clipped_samples == 2);
    const MultichannelSignal back = load_wav(path.string());
    CHECK(back.channels[0][1] == Catch::Approx(32767.0 / 32768.0));
    CHECK(back.channels[0][2] == Catch::Approx(-1.0));
}

TEST_CASE("wav: all-zero stereo signal writes zero-valued samples") {
    const MultichannelSignal s = make_signal(2, 64, 16000.0);
    const auto path = temp_file("zeros.wav");
    save_wav(s, path.string());
    const MultichannelSignal back = load_wav(path.string());
    CHECK(back.num_channels() == 2);
    for (double v : back.channels[0]) CHECK(v == 0.0);
    for (double v : back.channels[1]) CHECK(v == 0.0);
}

TEST_CASE("wav: unreadable path and malformed content fail loudly") {
    CHECK_THROWS(load_wav("/nonexistent/file.wav"));
    const auto path = temp_file("garbage.wav");
    {
        std::ofstream f(path);
        f << "definitely not a wav";
    }
    CHECK_THROWS(load_wav(path.string()));
}

TEST_CASE("stft: delta with rectangular window has all-ones magnitude") {
    const auto cfg = StftConfig::rectangular(128);
    MultichannelSignal s = make_signal(1, 256, 16000.0);
    s.channels[0][0] = 1.0;
    const auto frames = stft_analyze(s, cfg);
    for (std::size_t k = 0; k < cfg.num_bins(); ++k) {
        CHECK(std::abs(frames[0].bins[0][k]) == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("stft: bin-centered sinusoid concentrates energy in its bin") {
    const std::size_t n = 256;
    auto cfg = StftConfig::rectangular(n);  // frame_len == fft_len, no leakage
    MultichannelSignal s = make_signal(1, n, 16000.0);
    const std::size_t bin = 16;
    for (std::size_t i = 0; i < n; ++i) {
        s.channels[0][i] = std::sin(2.0 * std::numbers::pi * bin * i / double(n));
    }
    const auto frames = stft_analyze(s, cfg);
    const auto& spec = frames[0].bins[0];
    const double target = std::abs(spec[bin]);
    double rest = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (k != bin) rest = std::max(rest, std::abs(spec[k]));
    }
    CHECK(target == Catch::Approx(n / 2.0).epsilon(1e-9));
    CHECK(rest < 1e-9 * target);
}

TEST_CASE("stft: frame count arithmetic") {
    const auto cfg = StftConfig::hann(128);
    CHECK(cfg.hop == 64);
    CHECK(cfg.frame_count(16000) == 249);  // floor((16000-128)/64)+1
    CHECK(cfg.frame_count(127) == 0);
    CHECK_THROWS(stft_analyze(make_signal(1, 100, 16000.0), cfg));
}

TEST_CASE("stft: Hann window satisfies COLA at 50% overlap") {
    for (std::size_t len : {128UL, 320UL, 1600UL}) {
        const auto cfg = StftConfig::hann(len);
        CHECK_NOTHROW(cfg.validate());
        const double ref = cfg.cola_gain();
        for (std::size_t offset = 0; offset < cfg.hop; ++offset) {
            double s = 0.0;
            for (std::size_t n = offset; n < len; n += cfg.hop) s += cfg.window[n];
            CHECK(s == Catch::Approx(ref).epsilon(1e-9));
        }
    }
}

TEST_CASE("stft: Parseval holds per frame") {
    const auto cfg = StftConfig::hann(320);  // fft_len 512 > frame_len: zero-padded
    const MultichannelSignal s = random_signal(1, 1000, 21);
    const auto frames = stft_analyze(s, cfg);

    // time-domain energy of the windowed, padded frame
    double time_energy = 0.0;
    for (std::size_t n = 0; n < cfg.frame_len; ++n) {
        const double v = s.channels[0][n] * cfg.window[n];
        time_energy += v * v;
    }
    const auto& spec = frames[0].bins[0];
    double spectral = std::norm(spec[0]) + std::norm(spec[cfg.fft_len / 2]);
    for (std::size_t k = 1; k < cfg.fft_len / 2; ++k) spectral += 2.0 * std::norm(spec[k]);
    spectral /= static_cast<double>(cfg.fft_len);
    CHECK(time_energy == Catch::Approx(spectral).epsilon(1e-9));
}

TEST_CASE("stft/istft: interior round trip within 1e-6 relative RMS") {
    const auto cfg = StftConfig::hann(128);
    const MultichannelSignal s = random_signal(2, 4096, 33);
    const auto frames = stft_analyze(s, cfg);
    const MultichannelSignal back = istft_synthesize(frames, cfg, s.sample_rate, s.length());

    // interior: skip the first and last frame_len samples
    const std::size_t lo = cfg.frame_len;
    const std::size_t hi = s.length() - cfg.frame_len;
    for (std::size_t ch = 0; ch < 2; ++ch) {
        double err = 0.0, ref = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double d = back.channels[ch][i] - s.channels[ch][i];
            err += d * d;
            ref += s.channels[ch][i] * s.channels[ch][i];
        }
        CHECK(std::sqrt(err / ref) < 1e-6);
    }
}

TEST_CASE("stft/istft: zero frames give zero signal, scaling is linear") {
    const auto cfg = StftConfig::hann(128);
    const MultichannelSignal s = random_signal(1, 2048, 5);
    auto frames = stft_analyze(s, cfg);

    auto zeros = frames;
    for (auto& f : zeros) {
        for (auto& ch : f.bins) {
            std::fill(ch.begin(), ch.end(), std::complex<double>(0.0, 0.0));
        }
    }
    const auto silent = istft_synthesize(zeros, cfg, s.sample_rate, s.length());
    for (double v : silent.channels[0]) CHECK(v == 0.0);

    auto halved = frames;
    for (auto& f : halved) {
        for (auto& ch : f.bins) {
            for (auto& b : ch) b *= 0.5;
        }
    }
    const auto full = istft_synthesize(frames, cfg, s.sample_rate, s.length());
    const auto half = istft_synthesize(halved, cfg, s.sample_rate, s.length());
    for (std::size_t i = 0; i < s.length(); ++i) {
        CHECK(half.channels[0][i] == Catch::Approx(0.5 * full.channels[0][i]).margin(1e-12));
    }
}

TEST_CASE("fft_convolve: identity and shift") {
    const MultichannelSignal x = random_signal(1, 200, 77);
    std::vector<double> delta{1.0};
    auto y = fft_convolve(x.channels[0], delta);
    y.resize(x.length());
    CHECK(relative_rms_error(y, x.channels[0]) < 1e-12);

    std::vector<double> shifted(8, 0.0);
    shifted[7] = 1.0;  // delta(n-7)
    const auto yd = fft_convolve(x.channels[0], shifted);
    for (std::size_t i = 0; i < x.length(); ++i) {
        CHECK(yd[i + 7] == Catch::Approx(x.channels[0][i]).margin(1e-12));
    }
}

TEST_CASE("fft_convolve: matches the naive oracle") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> len_x(1, 256), len_h(1, 64);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(len_x(rng)), h(len_h(rng));
        for (double& v : x) v = dist(rng);
        for (double& v : h) v = dist(rng);
        const auto fast = fft_convolve(x, h);
        const auto slow = naive_convolve(x, h);
        REQUIRE(fast.size() == slow.size());
        CHECK(relative_rms_error(fast, slow) < 1e-9);
    }
}

TEST_CASE("fft_convolve: rejects empty inputs") {
    std::vector<double> x{1.0, 2.0};
    std::vector<double> empty;
    CHECK_THROWS(fft_convolve(x, empty));
    CHECK_THROWS(fft_convolve(empty, x));
}

TEST_CASE("rfft/irfft: round trip") {
    const MultichannelSignal s = random_signal(1, 512, 3);
    const auto spec = rfft(s.channels[0], 512);
    const auto back = irfft(spec, 512);
    CHECK(relative_rms_error(back, s.channels[0]) < 1e-12);
}
