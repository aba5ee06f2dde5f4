#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "folkdsp/audio_io.hpp"
#include "folkdsp/error.hpp"
#include "folkdsp/fft.hpp"
#include "folkdsp/matrix.hpp"

namespace folkdsp {

inline constexpr std::size_t kDefaultNfft = 2048;
inline constexpr std::size_t kDefaultHop = 512;
inline constexpr std::size_t kDefaultMels = 128;
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kChromaMinHz = 32.7;  // C1

/// Magnitude short-time spectrum, one frame per row, n_fft/2 + 1 bins.
struct Spectrogram {
    Matrix magnitudes;
    std::size_t n_fft = kDefaultNfft;
    std::size_t hop_length = kDefaultHop;
    int sample_rate = kAnalysisRate;

    std::size_t n_frames() const noexcept { return static_cast<std::size_t>(magnitudes.rows()); }
    std::size_t n_bins() const noexcept { return static_cast<std::size_t>(magnitudes.cols()); }
    double bin_frequency(std::size_t k) const noexcept {
        return static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
    }
};

struct MelFilterbank {
    Matrix weights;  // n_mels x n_bins
    double f_min = 0.0;
    double f_max = 0.0;
    std::vector<double> edges_hz;  // n_mels + 2 band edges; filter m spans [edges[m], edges[m+2]]

    std::size_t n_mels() const noexcept { return static_cast<std::size_t>(weights.rows()); }
};

/// n_frames x 12, columns C, C#, ..., B.
struct ChromaMatrix {
    Matrix values;
};

/// Periodic Hann window, w[n] = 0.5 - 0.5 cos(2 pi n / N).
inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

/// Frames of the signal after reflect-padding n_fft/2 samples at both ends
/// (edge sample not repeated). Frame t is centered on sample t * hop.
inline FrameSeries centered_frames(std::span<const double> samples, std::size_t n_fft, std::size_t hop_length) {
    const std::size_t pad = n_fft / 2;
    if (samples.size() <= pad)
        throw InputTooShort(std::to_string(samples.size()) + " samples cannot be reflect-padded by " +
                            std::to_string(pad));
    const auto n = static_cast<std::ptrdiff_t>(samples.size());
    std::vector<double> padded(samples.size() + 2 * pad);
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(padded.size()); ++i) {
        std::ptrdiff_t src = i - static_cast<std::ptrdiff_t>(pad);
        if (src < 0) src = -src;
        if (src >= n) src = 2 * (n - 1) - src;
        padded[static_cast<std::size_t>(i)] = samples[static_cast<std::size_t>(src)];
    }
    return frame(std::span<const double>(padded), n_fft, hop_length);
}

/// Magnitude STFT with a periodic Hann window and centered, reflect-padded frames.
inline Spectrogram stft(std::span<const double> samples, int sample_rate, std::size_t n_fft = kDefaultNfft,
                        std::size_t hop_length = kDefaultHop) {
    if (!is_power_of_two(n_fft) || n_fft < 32) throw std::invalid_argument("stft: n_fft must be a power of two >= 32");
    if (hop_length == 0 || hop_length > n_fft) throw std::invalid_argument("stft: hop_length must be in [1, n_fft]");
    if (sample_rate <= 0) throw std::invalid_argument("stft: sample_rate must be positive");
    if (samples.size() < n_fft)
        throw InputTooShort(std::to_string(samples.size()) + " samples, STFT window needs " + std::to_string(n_fft));

    const FrameSeries frames = centered_frames(samples, n_fft, hop_length);

    const auto window = hann_window(n_fft);
    const FftPlan plan(n_fft);
    const std::size_t n_bins = n_fft / 2 + 1;

    Spectrogram spec;
    spec.n_fft = n_fft;
    spec.hop_length = hop_length;
    spec.sample_rate = sample_rate;
    spec.magnitudes.resize(frames.frames.rows(), static_cast<Eigen::Index>(n_bins));

    std::vector<std::complex<double>> buf(n_fft);
    for (Eigen::Index t = 0; t < frames.frames.rows(); ++t) {
        for (std::size_t i = 0; i < n_fft; ++i) buf[i] = {window[i] * frames.frames(t, static_cast<Eigen::Index>(i)), 0.0};
        plan.forward(buf);
        for (std::size_t k = 0; k < n_bins; ++k) spec.magnitudes(t, static_cast<Eigen::Index>(k)) = std::abs(buf[k]);
    }
    return spec;
}

inline Spectrogram stft(const AudioClip& clip, std::size_t n_fft = kDefaultNfft, std::size_t hop_length = kDefaultHop) {
    return stft(std::span<const double>(clip.samples), clip.sample_rate, n_fft, hop_length);
}

/// Magnitude-weighted mean frequency per frame; silent frames give 0.
inline std::vector<double> spectral_centroid(const Spectrogram& spec) {
    std::vector<double> out(spec.n_frames(), 0.0);
    for (std::size_t t = 0; t < spec.n_frames(); ++t) {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < spec.n_bins(); ++k) {
            const double m = spec.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
            num += spec.bin_frequency(k) * m;
            den += m;
        }
        out[t] = den > 0.0 ? num / den : 0.0;
    }
    return out;
}

/// Frequency of the smallest bin whose cumulative magnitude reaches `pct` of
/// the frame total; silent frames give 0.
inline std::vector<double> spectral_rolloff(const Spectrogram& spec, double pct = 0.85) {
    if (!(pct > 0.0 && pct <= 1.0)) throw std::invalid_argument("spectral_rolloff: pct must be in (0, 1]");
    std::vector<double> out(spec.n_frames(), 0.0);
    for (std::size_t t = 0; t < spec.n_frames(); ++t) {
        const auto row = spec.magnitudes.row(static_cast<Eigen::Index>(t));
        double total = 0.0;
        for (Eigen::Index k = 0; k < row.size(); ++k) total += row(k);
        if (total <= 0.0) continue;
        const double threshold = pct * total;
        double cum = 0.0;
        for (std::size_t k = 0; k < spec.n_bins(); ++k) {
            cum += row(static_cast<Eigen::Index>(k));
            if (cum >= threshold) {
                out[t] = spec.bin_frequency(k);
                break;
            }
        }
    }
    return out;
}

/// Magnitude-weighted standard deviation of frequency about the centroid.
inline std::vector<double> spectral_bandwidth(const Spectrogram& spec) {
    const auto centroid = spectral_centroid(spec);
    std::vector<double> out(spec.n_frames(), 0.0);
    for (std::size_t t = 0; t < spec.n_frames(); ++t) {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < spec.n_bins(); ++k) {
            const double m = spec.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
            const double d = spec.bin_frequency(k) - centroid[t];
            num += m * d * d;
            den += m;
        }
        out[t] = den > 0.0 ? std::sqrt(num / den) : 0.0;
    }
    return out;
}

/// Fraction of adjacent sample pairs whose signs differ. Zero counts as
/// non-negative.
inline std::vector<double> zero_crossing_rate(const FrameSeries& frames) {
    std::vector<double> out(frames.n_frames(), 0.0);
    if (frames.frame_length < 2) return out;
    for (std::size_t t = 0; t < frames.n_frames(); ++t) {
        const auto row = frames.frames.row(static_cast<Eigen::Index>(t));
        std::size_t changes = 0;
        for (Eigen::Index i = 1; i < row.size(); ++i)
            if ((row(i) < 0.0) != (row(i - 1) < 0.0)) ++changes;
        out[t] = static_cast<double>(changes) / static_cast<double>(frames.frame_length - 1);
    }
    return out;
}

inline std::vector<double> rms_energy(const FrameSeries& frames) {
    std::vector<double> out(frames.n_frames(), 0.0);
    for (std::size_t t = 0; t < frames.n_frames(); ++t)
        out[t] = std::sqrt(frames.frames.row(static_cast<Eigen::Index>(t)).squaredNorm() /
                           static_cast<double>(frames.frame_length));
    return out;
}

inline double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters with peak weight 1, centers equally spaced on the mel
/// scale between f_min and f_max. Neighbouring filters meet at each other's
/// peaks. Throws std::invalid_argument when a band is too narrow to contain
/// any FFT bin.
inline MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate, double f_min = 0.0,
                                    double f_max = -1.0) {
    if (f_max < 0.0) f_max = sample_rate / 2.0;
    if (n_mels < 1) throw std::invalid_argument("mel_filterbank: n_mels must be >= 1");
    if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0))
        throw std::invalid_argument("mel_filterbank: need 0 <= f_min < f_max <= sample_rate/2");

    const std::size_t n_bins = n_fft / 2 + 1;
    const double mel_lo = hz_to_mel(f_min);
    const double mel_hi = hz_to_mel(f_max);

    MelFilterbank fb;
    fb.f_min = f_min;
    fb.f_max = f_max;
    fb.edges_hz.resize(n_mels + 2);
    for (std::size_t i = 0; i < n_mels + 2; ++i)
        fb.edges_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));

    fb.weights = Matrix::Zero(static_cast<Eigen::Index>(n_mels), static_cast<Eigen::Index>(n_bins));
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double left = fb.edges_hz[m], center = fb.edges_hz[m + 1], right = fb.edges_hz[m + 2];
        bool any = false;
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
            const double rising = (f - left) / (center - left);
            const double falling = (right - f) / (right - center);
            const double w = std::max(0.0, std::min(rising, falling));
            fb.weights(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = w;
            any = any || w > 0.0;
        }
        if (!any)
            throw std::invalid_argument("mel_filterbank: filter " + std::to_string(m) +
                                        " covers no FFT bin; reduce n_mels or increase n_fft");
    }
    return fb;
}

/// Orthonormal DCT-II basis, n_out x n_in.
inline Matrix dct2_orthonormal(std::size_t n_out, std::size_t n_in) {
    Matrix d(static_cast<Eigen::Index>(n_out), static_cast<Eigen::Index>(n_in));
    const double n = static_cast<double>(n_in);
    for (std::size_t k = 0; k < n_out; ++k) {
        const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (std::size_t i = 0; i < n_in; ++i)
            d(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
                scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                                 (2.0 * n));
    }
    return d;
}

/// log(fb . m[t] + eps) per frame; n_frames x n_mels.
inline Matrix log_mel(const Spectrogram& spec, const MelFilterbank& fb) {
    if (static_cast<std::size_t>(fb.weights.cols()) != spec.n_bins())
        throw ShapeError("mel filterbank has " + std::to_string(fb.weights.cols()) + " bins, spectrogram has " +
                         std::to_string(spec.n_bins()));
    Matrix energies = spec.magnitudes * fb.weights.transpose();
    return (energies.array() + kLogFloor).log().matrix();
}

/// Mel-frequency cepstral coefficients: orthonormal DCT-II of the log-mel
/// energies, first n_mfcc kept. n_frames x n_mfcc.
inline Matrix mfcc(const Spectrogram& spec, const MelFilterbank& fb, std::size_t n_mfcc = 20) {
    if (n_mfcc > fb.n_mels()) throw std::invalid_argument("mfcc: n_mfcc must not exceed n_mels");
    const Matrix logm = log_mel(spec, fb);
    const Matrix basis = dct2_orthonormal(n_mfcc, fb.n_mels());
    return logm * basis.transpose();
}

/// Pitch class (0 = C) of a frequency relative to the A4 reference.
inline int pitch_class(double hz, double tuning_ref = 440.0) {
    const auto semis = static_cast<long>(std::lround(12.0 * std::log2(hz / tuning_ref))) + 9;
    return static_cast<int>(((semis % 12) + 12) % 12);
}

/// Folds each bin's magnitude onto its nearest equal-tempered pitch class.
/// Bins below f_min_hz (and DC) are ignored. No per-frame normalization.
inline ChromaMatrix chroma_stft(const Spectrogram& spec, double tuning_ref = 440.0, double f_min_hz = kChromaMinHz) {
    if (!(tuning_ref > 0.0)) throw std::invalid_argument("chroma_stft: tuning_ref must be positive");
    std::vector<int> bin_class(spec.n_bins(), -1);
    for (std::size_t k = 1; k < spec.n_bins(); ++k) {
        const double f = spec.bin_frequency(k);
        if (f >= f_min_hz) bin_class[k] = pitch_class(f, tuning_ref);
    }
    ChromaMatrix chroma;
    chroma.values = Matrix::Zero(static_cast<Eigen::Index>(spec.n_frames()), 12);
    for (std::size_t t = 0; t < spec.n_frames(); ++t)
        for (std::size_t k = 0; k < spec.n_bins(); ++k)
            if (bin_class[k] >= 0)
                chroma.values(static_cast<Eigen::Index>(t), bin_class[k]) +=
                    spec.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
    return chroma;
}

}  // namespace folkdsp
