#pragma once

#include <cstddef>
#include <string>

#include "carmwf/signal.hpp"

namespace carmwf {

enum class WavEncoding { Pcm16, Float32 };

struct WavWriteResult {
    std::size_t clipped_samples = 0;
};

/// Reads a RIFF/WAVE file (PCM16 or IEEE float32, any channel count).
/// PCM16 samples are scaled by 1/32768 so the result lies in [-1, 1).
MultichannelSignal load_wav(const std::string& path);

/// Writes `signal` to `path`. PCM16 values outside the code range are clamped
/// and counted in the result.
WavWriteResult save_wav(const MultichannelSignal& signal, const std::string& path,
                        WavEncoding encoding = WavEncoding::Pcm16);

}  // namespace carmwf
