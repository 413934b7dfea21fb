#include "carmwf/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace carmwf {
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatIeeeFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xFF));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

}  // namespace

MultichannelSignal load_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_wav: cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw std::runtime_error("load_wav: " + path + " is not a RIFF/WAVE file");
    }

    std::uint16_t format = 0, num_channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;
    bool have_fmt = false;

    // Chunk scan: fmt and data may appear in any order, with other chunks interleaved.
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
        std::uint32_t chunk_size = read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_size > bytes.size()) chunk_size = static_cast<std::uint32_t>(bytes.size() - body);
        if (std::memcmp(tag, "fmt ", 4) == 0 && chunk_size >= 16) {
            format = read_u16(bytes.data() + body);
            num_channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            if (format == kFormatExtensible && chunk_size >= 40) {
                // sub-format GUID starts with the effective format code
                format = read_u16(bytes.data() + body + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = chunk_size;
        }
        pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr) {
        throw std::runtime_error("load_wav: " + path + " is missing fmt or data chunk");
    }
    if (num_channels == 0 || rate == 0) {
        throw std::runtime_error("load_wav: " + path + " has an invalid fmt chunk");
    }

    MultichannelSignal out;
    out.sample_rate = static_cast<double>(rate);
    if (format == kFormatPcm && bits == 16) {
        const std::size_t frames = data_size / (2 * num_channels);
        out.channels.assign(num_channels, std::vector<double>(frames));
        for (std::size_t i = 0; i < frames; ++i) {
            for (std::size_t ch = 0; ch < num_channels; ++ch) {
                const unsigned char* p = data + 2 * (i * num_channels + ch);
                const std::int16_t v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
                out.channels[ch][i] = static_cast<double>(v) / 32768.0;
            }
        }
    } else if (format == kFormatIeeeFloat && bits == 32) {
        const std::size_t frames = data_size / (4 * num_channels);
        out.channels.assign(num_channels, std::vector<double>(frames));
        for (std::size_t i = 0; i < frames; ++i) {
            for (std::size_t ch = 0; ch < num_channels; ++ch) {
                float v;
                std::memcpy(&v, data + 4 * (i * num_channels + ch), 4);
                out.channels[ch][i] = static_cast<double>(v);
            }
        }
    } else {
        throw std::runtime_error("load_wav: " + path + ": unsupported encoding (format " +
                                 std::to_string(format) + ", " + std::to_string(bits) +
                                 " bits); expected PCM16 or float32");
    }
    return out;
}

WavWriteResult save_wav(const MultichannelSignal& signal, const std::string& path,
                        WavEncoding encoding) {
    signal.validate();
    if (signal.num_channels() == 0) {
        throw std::invalid_argument("save_wav: signal has no channels");
    }

    const std::size_t channels = signal.num_channels();
    const std::size_t frames = signal.length();
    const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
    const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bits / 8);
    const std::uint32_t data_size = static_cast<std::uint32_t>(frames * block_align);

    std::vector<unsigned char> out;
    out.reserve(44 + data_size);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_size);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatIeeeFloat);
    put_u16(out, static_cast<std::uint16_t>(channels));
    put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * block_align);
    put_u16(out, block_align);
    put_u16(out, bits);
    put_tag(out, "data");
    put_u32(out, data_size);

    WavWriteResult result;
    for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t ch = 0; ch < channels; ++ch) {
            const double v = signal.channels[ch][i];
            if (encoding == WavEncoding::Pcm16) {
                double scaled = std::round(v * 32768.0);
                if (scaled > 32767.0) {
                    scaled = 32767.0;
                    ++result.clipped_samples;
                } else if (scaled < -32768.0) {
                    scaled = -32768.0;
                    ++result.clipped_samples;
                }
                const std::int16_t code = static_cast<std::int16_t>(scaled);
                put_u16(out, static_cast<std::uint16_t>(code));
            } else {
                const float fv = static_cast<float>(v);
                unsigned char buf[4];
                std::memcpy(buf, &fv, 4);
                out.insert(out.end(), buf, buf + 4);
            }
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_wav: cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("save_wav: write failed for " + path);
    return result;
}

}  // namespace carmwf
