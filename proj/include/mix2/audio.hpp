#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "mix2/binio.hpp"
#include "mix2/errors.hpp"

namespace mix2 {

// Front-end constants: 16 kHz, 3 s windows, 1 s hop.
inline constexpr std::size_t kSampleRate = 16000;
inline constexpr std::size_t kSegmentSamples = 3 * kSampleRate;
inline constexpr std::size_t kHopSamples = kSampleRate;

/// One fixed-length 3 s window at 16 kHz, tagged with its source recording.
struct AudioSegment {
    std::vector<double> samples;  // in [-1, 1], kSegmentSamples long
    std::string recording_id;
    double offset_s = 0.0;
};

/// Windows start at 0 s, 1 s, 2 s, ...; a trailing remainder shorter than 3 s
/// is dropped. Recordings shorter than 3 s yield no segments.
inline std::vector<AudioSegment> segment_recording(const std::vector<double>& samples,
                                                   std::size_t sample_rate,
                                                   const std::string& recording_id = "") {
    if (sample_rate != kSampleRate)
        throw ShapeError("segment_recording: expected 16 kHz input, got " +
                         std::to_string(sample_rate));
    std::vector<AudioSegment> out;
    if (samples.size() < kSegmentSamples) return out;
    const std::size_t count = (samples.size() - kSegmentSamples) / kHopSamples + 1;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        AudioSegment seg;
        const std::size_t start = s * kHopSamples;
        seg.samples.assign(samples.begin() + start, samples.begin() + start + kSegmentSamples);
        seg.recording_id = recording_id;
        seg.offset_s = static_cast<double>(s);
        out.push_back(std::move(seg));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

/// Windowed-sinc resampler (Hann window, 32-tap half-width scaled by the
/// decimation factor, kernel renormalized to preserve DC).
inline std::vector<double> resample(const std::vector<double>& in, std::size_t in_rate,
                                    std::size_t out_rate) {
    if (in_rate == 0 || out_rate == 0) throw ParameterError("resample: zero sample rate");
    if (in_rate == out_rate) return in;
    const double ratio = static_cast<double>(in_rate) / static_cast<double>(out_rate);
    const double cutoff = std::min(1.0, 1.0 / ratio);  // anti-alias when decimating
    const double half_width = 32.0 / cutoff;
    const std::size_t out_len =
        static_cast<std::size_t>(static_cast<double>(in.size()) / ratio);
    std::vector<double> out(out_len, 0.0);
    for (std::size_t t = 0; t < out_len; ++t) {
        const double center = static_cast<double>(t) * ratio;
        const auto first = static_cast<long>(std::ceil(center - half_width));
        const auto last = static_cast<long>(std::floor(center + half_width));
        double acc = 0.0, wsum = 0.0;
        for (long m = first; m <= last; ++m) {
            const double u = static_cast<double>(m) - center;
            const double x = cutoff * u;
            const double sinc =
                x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
            const double r = u / half_width;
            const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * r);
            const double w = cutoff * sinc * win;
            wsum += w;
            if (m >= 0 && m < static_cast<long>(in.size())) acc += w * in[m];
        }
        out[t] = wsum != 0.0 ? acc / wsum : 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// WAV
// ---------------------------------------------------------------------------

struct WavData {
    std::vector<double> samples;  // first channel only
    std::size_t sample_rate = 0;
};

/// Reads PCM WAV: 16-bit integer or 32-bit float, mono or first channel.
inline WavData read_wav(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("read_wav: cannot open " + path);
    binio::expect_magic(is, "RIFF", path);
    binio::read_u32(is, "riff size");
    binio::expect_magic(is, "WAVE", path);

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    WavData out;
    for (;;) {
        char id[4];
        is.read(id, 4);
        if (is.gcount() != 4) break;  // end of chunks
        const std::uint32_t size = binio::read_u32(is, "chunk size");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            format = binio::read_u16(is, "wav format");
            channels = binio::read_u16(is, "wav channels");
            rate = binio::read_u32(is, "wav rate");
            binio::read_u32(is, "wav byte rate");
            binio::read_u16(is, "wav block align");
            bits = binio::read_u16(is, "wav bits");
            if (size > 16) is.seekg(size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            if (!have_fmt) throw DataError("read_wav: data chunk before fmt in " + path);
            if (channels == 0) throw DataError("read_wav: zero channels in " + path);
            const std::size_t bytes_per_sample = bits / 8;
            const std::size_t frames = size / (bytes_per_sample * channels);
            out.samples.reserve(frames);
            if (format == 1 && bits == 16) {
                for (std::size_t f = 0; f < frames; ++f) {
                    for (std::uint16_t c = 0; c < channels; ++c) {
                        const auto raw = static_cast<std::int16_t>(binio::read_u16(is, "pcm"));
                        if (c == 0) out.samples.push_back(raw / 32768.0);
                    }
                }
            } else if (format == 3 && bits == 32) {
                for (std::size_t f = 0; f < frames; ++f) {
                    for (std::uint16_t c = 0; c < channels; ++c) {
                        const float v = binio::read_f32(is, "pcm float");
                        if (c == 0) out.samples.push_back(static_cast<double>(v));
                    }
                }
            } else {
                throw DataError("read_wav: unsupported format " + std::to_string(format) + "/" +
                                std::to_string(bits) + " bits in " + path);
            }
            out.sample_rate = rate;
            return out;
        } else {
            is.seekg(size + (size & 1), std::ios::cur);  // chunks are word-aligned
        }
        if (!is) break;
    }
    throw DataError("read_wav: no data chunk in " + path);
}

/// Writes 16-bit PCM mono. Test and tooling helper.
inline void write_wav(const std::string& path, const std::vector<double>& samples,
                      std::size_t sample_rate) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("write_wav: cannot open " + path);
    const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
    binio::write_bytes(os, "RIFF", 4);
    binio::write_u32(os, 36 + data_size);
    binio::write_bytes(os, "WAVE", 4);
    binio::write_bytes(os, "fmt ", 4);
    binio::write_u32(os, 16);
    binio::write_u16(os, 1);  // PCM
    binio::write_u16(os, 1);  // mono
    binio::write_u32(os, static_cast<std::uint32_t>(sample_rate));
    binio::write_u32(os, static_cast<std::uint32_t>(sample_rate * 2));
    binio::write_u16(os, 2);
    binio::write_u16(os, 16);
    binio::write_bytes(os, "data", 4);
    binio::write_u32(os, data_size);
    for (double v : samples) {
        const double clamped = std::clamp(v, -1.0, 1.0);
        const auto q = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        binio::write_u16(os, static_cast<std::uint16_t>(q));
    }
    if (!os) throw DataError("write_wav: write failed for " + path);
}

}  // namespace mix2
