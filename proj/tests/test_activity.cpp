#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "carmwf/activity.hpp"
#include "carmwf/noise.hpp"
#include "carmwf/room.hpp"
#include "carmwf/speechgen.hpp"

using namespace carmwf;

namespace {

constexpr double kRate = 16000.0;

SpeechProgram short_program(double total_s = 20.0) {
    SpeechProgramSpec spec;
    spec.total_s = total_s;
    return build_speech_program(spec, kRate);
}

}  // namespace

TEST_CASE("oracle: all-zero sources give all Silence") {
    const auto cfg = StftConfig::hann(128);
    const auto tl = oracle_timeline(make_signal(2, 4000, kRate), cfg);
    for (auto l : tl.labels) CHECK(l == ActivityLabel::Silence);
}

TEST_CASE("oracle: driver-only activity labels its frames and nothing else") {
    const auto cfg = StftConfig::hann(128);
    MultichannelSignal dry = make_signal(2, 8000, kRate);
    for (std::size_t i = 2000; i < 4000; ++i) {
        dry.channels[0][i] = std::sin(0.21 * static_cast<double>(i));
    }
    const auto tl = oracle_timeline(dry, cfg);
    bool saw_driver = false;
    for (std::size_t m = 0; m < tl.frames(); ++m) {
        const std::size_t begin = m * cfg.hop, end = begin + cfg.frame_len;
        if (end <= 2000 || begin >= 4000) {
            CHECK(tl.labels[m] == ActivityLabel::Silence);
        }
        if (tl.labels[m] == ActivityLabel::DriverOnly) saw_driver = true;
        CHECK(tl.labels[m] != ActivityLabel::PassengerOnly);
        CHECK(tl.labels[m] != ActivityLabel::Both);
    }
    CHECK(saw_driver);
}

TEST_CASE("oracle: the alternating program never contains Both") {
    const auto program = short_program();
    const auto tl = oracle_timeline(program.dry, StftConfig::hann(128));
    std::size_t driver = 0, passenger = 0;
    for (auto l : tl.labels) {
        CHECK(l != ActivityLabel::Both);
        driver += l == ActivityLabel::DriverOnly;
        passenger += l == ActivityLabel::PassengerOnly;
    }
    CHECK(driver > 0);
    CHECK(passenger > 0);
}

TEST_CASE("oracle: determinism and noise independence") {
    const auto program = short_program();
    const auto cfg = StftConfig::hann(128);
    const auto a = oracle_timeline(program.dry, cfg);
    const auto b = oracle_timeline(program.dry, cfg);
    CHECK(a.labels == b.labels);  // pure function of the dry sources
}

TEST_CASE("oracle: energy floor controls sensitivity") {
    const auto cfg = StftConfig::hann(128);
    MultichannelSignal dry = make_signal(2, 8000, kRate);
    for (std::size_t i = 0; i < 2000; ++i) dry.channels[0][i] = 0.5;
    for (std::size_t i = 4000; i < 6000; ++i) dry.channels[0][i] = 0.001;  // -54 dB rel peak
    const auto strict = oracle_timeline(dry, cfg, -45.0);
    const auto loose = oracle_timeline(dry, cfg, -80.0);
    const auto count = [](const ActivityTimeline& tl) {
        std::size_t n = 0;
        for (auto l : tl.labels) n += l == ActivityLabel::DriverOnly;
        return n;
    };
    CHECK(count(loose) > count(strict));
}

TEST_CASE("power detector: signal only on mic1 is DriverOnly, sub-floor is Silence") {
    const auto cfg = StftConfig::hann(128);
    MultichannelSignal mics = make_signal(2, 16000, kRate);
    // weak stationary floor on both mics, strong burst on mic 1
    for (std::size_t i = 0; i < mics.length(); ++i) {
        mics.channels[0][i] = 1e-4 * std::sin(0.37 * static_cast<double>(i));
        mics.channels[1][i] = 1e-4 * std::cos(0.41 * static_cast<double>(i));
    }
    for (std::size_t i = 6000; i < 12000; ++i) {
        mics.channels[0][i] += 0.5 * std::sin(0.3 * static_cast<double>(i));
    }
    const auto tl = power_detector(mics, cfg);
    std::size_t driver_mid = 0, total_mid = 0;
    for (std::size_t m = 0; m < tl.frames(); ++m) {
        const std::size_t begin = m * cfg.hop;
        if (begin >= 7000 && begin + cfg.frame_len <= 11500) {
            ++total_mid;
            driver_mid += tl.labels[m] == ActivityLabel::DriverOnly;
        }
        if (begin + cfg.frame_len <= 4000) CHECK(tl.labels[m] == ActivityLabel::Silence);
        CHECK(tl.labels[m] != ActivityLabel::PassengerOnly);
    }
    CHECK(driver_mid == total_mid);  // fully detected once smoothed power settles
}

TEST_CASE("power detector: labels are invariant to common scaling") {
    const auto program = short_program(12.0);
    const auto rendered =
        render_scene(program.dry, PositionSchedule::single(Scene::default_cabin()));
    auto noise = generate_noise({NoiseColor::white(), 5, 2}, program.dry.length(), kRate);
    mix_at_snr(rendered.source_components, noise, 5.0,
               {program.driver_ranges, program.passenger_ranges});
    MultichannelSignal mics = rendered.mic_sum;
    for (std::size_t ch = 0; ch < 2; ++ch) add_into(mics.channels[ch], noise.channels[ch]);

    const auto cfg = StftConfig::hann(128);
    const auto base = power_detector(mics, cfg);
    MultichannelSignal scaled = mics;
    for (auto& ch : scaled.channels) {
        for (double& v : ch) v *= 3.7;
    }
    const auto after = power_detector(scaled, cfg);
    CHECK(base.labels == after.labels);
}

TEST_CASE("power detector: >= 90% agreement with the oracle on speech frames at 5 dB SNR") {
    const auto program = short_program(30.0);
    const auto rendered =
        render_scene(program.dry, PositionSchedule::single(Scene::default_cabin()));
    auto noise = generate_noise({NoiseColor::white(), 17, 2}, program.dry.length(), kRate);
    mix_at_snr(rendered.source_components, noise, 5.0,
               {program.driver_ranges, program.passenger_ranges});
    MultichannelSignal mics = rendered.mic_sum;
    for (std::size_t ch = 0; ch < 2; ++ch) add_into(mics.channels[ch], noise.channels[ch]);

    const auto cfg = StftConfig::hann(128);
    const auto oracle = oracle_timeline(program.dry, cfg);
    const auto detected = power_detector(mics, cfg);
    REQUIRE(oracle.frames() == detected.frames());

    std::size_t speech_frames = 0, agreed = 0;
    for (std::size_t m = 0; m < oracle.frames(); ++m) {
        if (oracle.labels[m] == ActivityLabel::DriverOnly ||
            oracle.labels[m] == ActivityLabel::PassengerOnly) {
            ++speech_frames;
            agreed += detected.labels[m] == oracle.labels[m];
        }
    }
    REQUIRE(speech_frames > 0);
    const double agreement = static_cast<double>(agreed) / static_cast<double>(speech_frames);
    INFO("agreement " << agreement);
    CHECK(agreement >= 0.90);
}

TEST_CASE("timeline: sample range helpers merge adjacent frames") {
    ActivityTimeline tl;
    tl.frame_len = 128;
    tl.hop = 64;
    tl.labels = {ActivityLabel::Silence, ActivityLabel::DriverOnly, ActivityLabel::DriverOnly,
                 ActivityLabel::Silence, ActivityLabel::PassengerOnly};
    const auto driver = tl.driver_ranges();
    REQUIRE(driver.size() == 1);
    CHECK(driver[0].first == 64);
    CHECK(driver[0].second == 2 * 64 + 128);
    const auto pass = tl.passenger_ranges();
    REQUIRE(pass.size() == 1);
    CHECK(pass[0].first == 4 * 64);
}

TEST_CASE("timeline: CSV export") {
    ActivityTimeline tl;
    tl.frame_len = 128;
    tl.hop = 64;
    tl.labels = {ActivityLabel::Silence, ActivityLabel::Both};
    const auto dir = std::filesystem::temp_directory_path() / "carmwf_tests";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "timeline.csv").string();
    export_timeline_csv(tl, path);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "frame_index,label");
    std::getline(f, line);
    CHECK(line == "0,silence");
    std::getline(f, line);
    CHECK(line == "1,both");
}
