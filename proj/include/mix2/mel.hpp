#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "mix2/audio.hpp"
#include "mix2/errors.hpp"
#include "mix2/matrix.hpp"
#include "mix2/rng.hpp"

namespace mix2 {

// Mel front-end: 128 filters, window 512, hop 128, center-reflect padding.
inline constexpr std::size_t kMelBands = 128;
inline constexpr std::size_t kFftSize = 512;
inline constexpr std::size_t kHopSize = 128;
inline constexpr std::size_t kMelFrames = 1 + kSegmentSamples / kHopSize;  // 376
inline constexpr double kMelFloor = 1e-10;

/// Log mel spectrogram, values indexed (band, frame).
struct MelSpectrogram {
    Matrix values;  // kMelBands x frames

    std::size_t bands() const { return values.rows(); }
    std::size_t frames() const { return values.cols(); }
};

// ---------------------------------------------------------------------------
// FFT
// ---------------------------------------------------------------------------

/// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw ParameterError("fft_radix2: size not a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Mel filter bank (HTK scale, 0..8000 Hz, triangular, no area normalization)
// ---------------------------------------------------------------------------

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline Matrix make_mel_filterbank(std::size_t n_mels = kMelBands,
                                  std::size_t n_fft = kFftSize,
                                  double sample_rate = static_cast<double>(kSampleRate),
                                  double f_min = 0.0, double f_max = 8000.0) {
    const std::size_t n_bins = n_fft / 2 + 1;
    const double mel_min = hz_to_mel(f_min);
    const double mel_max = hz_to_mel(f_max);
    std::vector<double> edges(n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(mel_min + (mel_max - mel_min) * static_cast<double>(i) /
                                           static_cast<double>(n_mels + 1));
    Matrix fb(n_mels, n_bins);
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = sample_rate * static_cast<double>(k) / static_cast<double>(n_fft);
            double w = 0.0;
            if (f > lo && f < hi)
                w = f <= mid ? (f - lo) / std::max(mid - lo, 1e-12)
                             : (hi - f) / std::max(hi - mid, 1e-12);
            fb(m, k) = std::max(w, 0.0);
        }
    }
    return fb;
}

// ---------------------------------------------------------------------------
// Spectrogram
// ---------------------------------------------------------------------------

/// Log mel spectrogram of one 3 s / 16 kHz segment: Hann window 512, hop 128,
/// center-reflect padding (376 frames), power spectrum through the mel bank,
/// then log(1 + p) with the power floored at kMelFloor.
inline MelSpectrogram mel_spectrogram(const std::vector<double>& samples) {
    if (samples.size() != kSegmentSamples)
        throw ShapeError("mel_spectrogram: expected " + std::to_string(kSegmentSamples) +
                         " samples, got " + std::to_string(samples.size()));
    static const Matrix fb = make_mel_filterbank();
    static const std::vector<double> window = [] {
        std::vector<double> w(kFftSize);
        for (std::size_t i = 0; i < kFftSize; ++i)
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                        static_cast<double>(kFftSize));
        return w;
    }();

    // Reflect padding around the segment, half a window on each side.
    const std::size_t pad = kFftSize / 2;
    auto sample_at = [&](long idx) -> double {
        const long n = static_cast<long>(samples.size());
        if (idx < 0) idx = -idx;
        if (idx >= n) idx = 2 * (n - 1) - idx;
        return samples[static_cast<std::size_t>(idx)];
    };

    MelSpectrogram out;
    out.values = Matrix(kMelBands, kMelFrames);
    std::vector<std::complex<double>> buf(kFftSize);
    std::vector<double> power(kFftSize / 2 + 1);
    for (std::size_t t = 0; t < kMelFrames; ++t) {
        const long start = static_cast<long>(t * kHopSize) - static_cast<long>(pad);
        for (std::size_t i = 0; i < kFftSize; ++i)
            buf[i] = {sample_at(start + static_cast<long>(i)) * window[i], 0.0};
        fft_radix2(buf);
        for (std::size_t k = 0; k <= kFftSize / 2; ++k) power[k] = std::norm(buf[k]);
        for (std::size_t m = 0; m < kMelBands; ++m) {
            double p = 0.0;
            for (std::size_t k = 0; k <= kFftSize / 2; ++k) p += fb(m, k) * power[k];
            out.values(m, t) = std::log1p(std::max(p, kMelFloor));
        }
    }
    return out;
}

inline MelSpectrogram mel_spectrogram(const AudioSegment& segment) {
    return mel_spectrogram(segment.samples);
}

// ---------------------------------------------------------------------------
// Augmentations
// ---------------------------------------------------------------------------

/// SpecAugment: zero out random rectangles. Applies exactly `time_masks` time
/// masks and `freq_masks` frequency masks; each mask's width is drawn
/// uniformly in [0, max width]. Shape is never changed.
inline MelSpectrogram spec_augment(const MelSpectrogram& spec, std::size_t time_masks,
                                   std::size_t freq_masks, std::size_t max_time_width,
                                   std::size_t max_freq_width, Rng& rng) {
    if (max_time_width > spec.frames() || max_freq_width > spec.bands())
        throw ParameterError("spec_augment: mask width exceeds spectrogram size");
    MelSpectrogram out = spec;
    for (std::size_t i = 0; i < time_masks; ++i) {
        const std::size_t w = rng.uniform_index(max_time_width + 1);
        if (w == 0) continue;
        const std::size_t start = rng.uniform_index(spec.frames() - w + 1);
        for (std::size_t m = 0; m < spec.bands(); ++m)
            for (std::size_t t = start; t < start + w; ++t) out.values(m, t) = 0.0;
    }
    for (std::size_t i = 0; i < freq_masks; ++i) {
        const std::size_t w = rng.uniform_index(max_freq_width + 1);
        if (w == 0) continue;
        const std::size_t start = rng.uniform_index(spec.bands() - w + 1);
        for (std::size_t m = start; m < start + w; ++m)
            for (std::size_t t = 0; t < spec.frames(); ++t) out.values(m, t) = 0.0;
    }
    return out;
}

/// Rotates columns right by k; the multiset of columns is preserved.
inline MelSpectrogram circular_time_shift_by(const MelSpectrogram& spec, std::size_t k) {
    const std::size_t f = spec.frames();
    if (f == 0) return spec;
    k %= f;
    if (k == 0) return spec;
    MelSpectrogram out;
    out.values = Matrix(spec.bands(), f);
    for (std::size_t m = 0; m < spec.bands(); ++m)
        for (std::size_t t = 0; t < f; ++t) out.values(m, (t + k) % f) = spec.values(m, t);
    return out;
}

inline MelSpectrogram circular_time_shift(const MelSpectrogram& spec, Rng& rng) {
    if (spec.frames() == 0) return spec;
    return circular_time_shift_by(spec, rng.uniform_index(spec.frames()));
}

}  // namespace mix2
