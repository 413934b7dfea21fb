#include <benchmark/benchmark.h>

#include <random>

#include "carmwf/convolve.hpp"
#include "carmwf/mwf.hpp"
#include "carmwf/room.hpp"
#include "carmwf/speechgen.hpp"
#include "carmwf/stft.hpp"

namespace {

carmwf::MultichannelSignal random_signal(std::size_t channels, std::size_t len) {
    carmwf::MultichannelSignal s = carmwf::make_signal(channels, len, 16000.0);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    for (auto& ch : s.channels) {
        for (double& v : ch) v = dist(rng);
    }
    return s;
}

void BM_StftRoundTrip(benchmark::State& state) {
    const auto cfg = carmwf::StftConfig::hann(static_cast<std::size_t>(state.range(0)));
    const auto sig = random_signal(1, 16000);
    for (auto _ : state) {
        auto frames = carmwf::stft_analyze(sig, cfg);
        auto back = carmwf::istft_synthesize(frames, cfg, sig.sample_rate, sig.length());
        benchmark::DoNotOptimize(back);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sig.length()));
}
BENCHMARK(BM_StftRoundTrip)->Arg(128)->Arg(320)->Arg(1600);

void BM_FftConvolve(benchmark::State& state) {
    const auto sig = random_signal(1, static_cast<std::size_t>(state.range(0)));
    const auto ir = random_signal(1, 1024).channels[0];
    for (auto _ : state) {
        auto out = carmwf::fft_convolve(sig.channels[0], ir);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_FftConvolve)->Arg(16000)->Arg(160000);

void BM_GenerateRir(benchmark::State& state) {
    const auto scene = carmwf::Scene::default_cabin();
    for (auto _ : state) {
        auto ir = carmwf::generate_rir(scene, 0, 0);
        benchmark::DoNotOptimize(ir);
    }
}
BENCHMARK(BM_GenerateRir);

void BM_SolveFilter(benchmark::State& state) {
    carmwf::Mat2c r{{2.0, 0.0}, {0.3, 0.1}, {0.3, -0.1}, {1.5, 0.0}};
    carmwf::Vec2c p{carmwf::Complex(1.0, 0.2), carmwf::Complex(0.4, -0.1)};
    for (auto _ : state) {
        auto w = carmwf::solve_filter(r, p, 1.0);
        benchmark::DoNotOptimize(w);
    }
}
BENCHMARK(BM_SolveFilter);

void BM_ProcessStream(benchmark::State& state) {
    carmwf::SpeechProgramSpec spec;
    spec.total_s = 6.0;
    spec.utterance_s = 1.0;
    spec.gap_s = 0.4;
    const auto program = carmwf::build_speech_program(spec, 16000.0);
    const auto rendered = carmwf::render_scene(
        program.dry, carmwf::PositionSchedule::single(carmwf::Scene::default_cabin()), {});
    carmwf::MwfConfig cfg;
    const auto timeline = carmwf::oracle_timeline(program.dry, cfg.stft(16000.0));
    auto mics = rendered.mic_sum;
    for (auto _ : state) {
        auto out = carmwf::process_stream(mics, timeline, cfg);
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mics.length()));
}
BENCHMARK(BM_ProcessStream);

}  // namespace

BENCHMARK_MAIN();
