#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "carmwf/noise.hpp"
#include "carmwf/signal.hpp"

namespace carmwf {

/// Deterministic speech-shaped test utterance: syllable bursts of a pulse
/// train through time-varying formant resonators, with occasional fricative
/// onsets and a syllabic envelope. Statistically speech-like (long-term
/// spectrum, modulation, pauses); not intelligible speech.
std::vector<double> generate_utterance(double duration_s, double sample_rate, std::uint64_t seed);

/// Alternating two-speaker program: lead-in silence, then
/// driver utterance, gap, passenger utterance, gap, ... repeated to total_s.
/// The same utterance material is used for both speakers.
struct SpeechProgramSpec {
    double lead_silence_s = 1.0;
    double utterance_s = 2.2;
    double gap_s = 0.7;
    double total_s = 70.6;
    std::uint64_t seed = 7;
    std::string driver_wav;     // optional: use this file's audio instead
    std::string passenger_wav;  // of the built-in generator
};

struct SpeechProgram {
    MultichannelSignal dry;  // channel 0: driver, channel 1: passenger
    SampleRanges driver_ranges;
    SampleRanges passenger_ranges;
};

SpeechProgram build_speech_program(const SpeechProgramSpec& spec, double sample_rate);

/// Same alternating program but with intermittent white-noise bursts as the
/// directional sources (for spectral studies on flat-spectrum material).
SpeechProgram build_white_burst_program(const SpeechProgramSpec& spec, double sample_rate);

}  // namespace carmwf
