#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "folkdsp/error.hpp"
#include "folkdsp/matrix.hpp"

namespace folkdsp {

/// Canonical analysis rate; every extractor sees clips at this rate.
inline constexpr int kAnalysisRate = 22050;

/// Decoded mono PCM with samples in [-1, +1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = kAnalysisRate;
    std::string source_id;

    std::size_t size() const noexcept { return samples.size(); }
    double duration_seconds() const noexcept {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
    }
};

/// Overlapping analysis frames cut from a clip, one frame per row.
struct FrameSeries {
    Matrix frames;
    std::size_t frame_length = 0;
    std::size_t hop_length = 0;

    std::size_t n_frames() const noexcept { return static_cast<std::size_t>(frames.rows()); }
};

namespace detail {

inline std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

inline std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
    return std::memcmp(b.data() + at, tag, 4) == 0;
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace detail

/// Decode a RIFF/WAVE byte buffer into a mono clip.
///
/// Reads PCM integer (8/16/24/32-bit) and IEEE float32, one or two channels,
/// including WAVE_FORMAT_EXTENSIBLE wrappers of those. Channels are averaged.
/// Integer samples are divided by the type's full-scale value (128, 32768,
/// 2^23, 2^31); float samples are clamped to [-1, +1].
inline AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_id = {}) {
    using detail::read_u16;
    using detail::read_u32;
    using detail::tag_is;

    if (bytes.size() < 12) throw DecodeError("file shorter than a RIFF header");
    if (!tag_is(bytes, 0, "RIFF")) throw DecodeError("missing RIFF tag");
    if (!tag_is(bytes, 8, "WAVE")) throw DecodeError("missing WAVE form type");

    bool have_fmt = false;
    std::uint16_t format_tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t block_align = 0;
    std::uint16_t bits = 0;
    std::span<const std::uint8_t> data;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t chunk_size = read_u32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = bytes.size() - body;
        if (tag_is(bytes, pos, "fmt ")) {
            if (chunk_size < 16 || available < 16) throw DecodeError("fmt chunk too small");
            format_tag = read_u16(bytes, body);
            channels = read_u16(bytes, body + 2);
            sample_rate = read_u32(bytes, body + 4);
            block_align = read_u16(bytes, body + 12);
            bits = read_u16(bytes, body + 14);
            if (format_tag == 0xFFFE) {
                if (chunk_size < 40 || available < 40) throw DecodeError("extensible fmt chunk too small");
                format_tag = read_u16(bytes, body + 24);  // first two bytes of the sub-format GUID
            }
            have_fmt = true;
        } else if (tag_is(bytes, pos, "data")) {
            // Streaming writers sometimes leave the size unset; take what is there.
            const std::size_t n = std::min<std::size_t>(chunk_size, available);
            data = bytes.subspan(body, n);
            have_data = true;
            break;
        }
        if (chunk_size > available) throw DecodeError("chunk extends past end of file");
        pos = body + chunk_size + (chunk_size & 1u);
    }

    if (!have_fmt) throw DecodeError("missing fmt chunk");
    if (!have_data) throw DecodeError("missing data chunk");
    if (format_tag != 1 && format_tag != 3)
        throw UnsupportedFormat("format tag " + std::to_string(format_tag) + " (only PCM and IEEE float)");
    if (channels < 1 || channels > 2) throw UnsupportedFormat(std::to_string(channels) + " channels");
    if (sample_rate == 0) throw DecodeError("sample rate is zero");
    if (format_tag == 3 && bits != 32) throw UnsupportedFormat(std::to_string(bits) + "-bit float");
    if (format_tag == 1 && bits != 8 && bits != 16 && bits != 24 && bits != 32)
        throw UnsupportedFormat(std::to_string(bits) + "-bit PCM");

    const std::size_t bytes_per_sample = bits / 8;
    if (block_align != bytes_per_sample * channels) throw DecodeError("block alignment disagrees with format");
    const std::size_t n_frames = data.size() / block_align;
    if (n_frames == 0) throw DecodeError("no audio samples");

    auto sample_at = [&](std::size_t offset) -> double {
        const std::uint8_t* p = data.data() + offset;
        switch (format_tag == 3 ? 0 : bits) {
            case 0: {
                float f;
                std::uint32_t u = read_u32(data, offset);
                std::memcpy(&f, &u, sizeof f);
                if (!std::isfinite(f)) return 0.0;
                return std::clamp(static_cast<double>(f), -1.0, 1.0);
            }
            case 8:
                return (static_cast<double>(p[0]) - 128.0) / 128.0;
            case 16:
                return static_cast<double>(static_cast<std::int16_t>(read_u16(data, offset))) / 32768.0;
            case 24: {
                std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
                if (v & 0x800000) v -= 0x1000000;
                return static_cast<double>(v) / 8388608.0;
            }
            default:
                return static_cast<double>(static_cast<std::int32_t>(read_u32(data, offset))) / 2147483648.0;
        }
    };

    AudioClip clip;
    clip.sample_rate = static_cast<int>(sample_rate);
    clip.source_id = std::move(source_id);
    clip.samples.resize(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        const std::size_t base = i * block_align;
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) acc += sample_at(base + c * bytes_per_sample);
        clip.samples[i] = acc / channels;
    }
    return clip;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline AudioClip read_wav(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_wav(bytes, path.string());
}

/// Encode as 16-bit PCM mono little-endian WAV. Samples are clamped to
/// [-1, +1] and quantized as round(x * 32768), saturating at 32767.
inline std::vector<std::uint8_t> encode_wav16(const AudioClip& clip) {
    if (clip.sample_rate <= 0) throw std::invalid_argument("encode_wav16: sample_rate must be positive");
    const auto n = static_cast<std::uint32_t>(clip.samples.size());
    const std::uint32_t data_bytes = n * 2;
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    detail::put_tag(out, "RIFF");
    detail::put_u32(out, 36 + data_bytes);
    detail::put_tag(out, "WAVE");
    detail::put_tag(out, "fmt ");
    detail::put_u32(out, 16);
    detail::put_u16(out, 1);
    detail::put_u16(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
    detail::put_u16(out, 2);
    detail::put_u16(out, 16);
    detail::put_tag(out, "data");
    detail::put_u32(out, data_bytes);
    for (double x : clip.samples) {
        const double q = std::round(std::clamp(x, -1.0, 1.0) * 32768.0);
        const auto v = static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
        detail::put_u16(out, static_cast<std::uint16_t>(v));
    }
    return out;
}

inline void write_wav16(const std::filesystem::path& path, const AudioClip& clip) {
    const auto bytes = encode_wav16(clip);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace detail {

/// Kaiser-windowed sinc lowpass, tabulated on [0, half_width] input samples.
class SincKernel {
public:
    SincKernel(double cutoff, int zero_crossings, double beta, int oversample = 512)
        : cutoff_(cutoff), half_width_(zero_crossings / cutoff), oversample_(oversample) {
        const auto n = static_cast<std::size_t>(std::ceil(half_width_ * oversample_)) + 2;
        table_.resize(n);
        const double i0_beta = std::cyl_bessel_i(0.0, beta);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = static_cast<double>(i) / oversample_;
            const double x = u / half_width_;
            if (x >= 1.0) {
                table_[i] = 0.0;
                continue;
            }
            const double arg = std::numbers::pi * cutoff_ * u;
            const double sinc = u == 0.0 ? 1.0 : std::sin(arg) / arg;
            const double window = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / i0_beta;
            table_[i] = cutoff_ * sinc * window;
        }
    }

    double half_width() const noexcept { return half_width_; }

    double operator()(double u) const noexcept {
        const double pos = std::abs(u) * oversample_;
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= table_.size()) return 0.0;
        const double frac = pos - static_cast<double>(i);
        return table_[i] + frac * (table_[i + 1] - table_[i]);
    }

private:
    double cutoff_;
    double half_width_;
    int oversample_;
    std::vector<double> table_;
};

}  // namespace detail

/// Band-limited resampling with a Kaiser-windowed sinc (beta 8.6, 64 zero
/// crossings per side). Output length is round(n * target / source), edges
/// are extended by holding the end samples, and each output tap set is
/// normalized to unit DC gain.
inline AudioClip resample(const AudioClip& clip, int target_rate) {
    if (target_rate <= 0) throw std::invalid_argument("resample: target_rate must be positive");
    if (clip.sample_rate <= 0) throw std::invalid_argument("resample: clip sample_rate must be positive");
    if (clip.sample_rate == target_rate || clip.samples.empty()) {
        AudioClip out = clip;
        out.sample_rate = target_rate;
        return out;
    }

    const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
    const double cutoff = std::min(1.0, ratio);
    const detail::SincKernel kernel(cutoff, 64, 8.6);
    const double hw = kernel.half_width();

    const auto n_in = static_cast<std::ptrdiff_t>(clip.samples.size());
    const auto n_out = std::max<std::ptrdiff_t>(1, std::llround(static_cast<double>(n_in) * ratio));

    AudioClip out;
    out.sample_rate = target_rate;
    out.source_id = clip.source_id;
    out.samples.resize(static_cast<std::size_t>(n_out));
    for (std::ptrdiff_t i = 0; i < n_out; ++i) {
        const double t = static_cast<double>(i) / ratio;
        const auto lo = static_cast<std::ptrdiff_t>(std::ceil(t - hw));
        const auto hi = static_cast<std::ptrdiff_t>(std::floor(t + hw));
        double acc = 0.0;
        double norm = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            const double h = kernel(t - static_cast<double>(j));
            const auto src = std::clamp<std::ptrdiff_t>(j, 0, n_in - 1);
            acc += h * clip.samples[static_cast<std::size_t>(src)];
            norm += h;
        }
        out.samples[static_cast<std::size_t>(i)] = std::clamp(norm != 0.0 ? acc / norm : 0.0, -1.0, 1.0);
    }
    return out;
}

/// Full (non-padded) framing: frame i holds samples[i*hop, i*hop + frame_length).
inline FrameSeries frame(std::span<const double> samples, std::size_t frame_length, std::size_t hop_length) {
    if (frame_length == 0) throw std::invalid_argument("frame: frame_length must be positive");
    if (hop_length == 0 || hop_length > frame_length)
        throw std::invalid_argument("frame: hop_length must be in [1, frame_length]");
    if (samples.size() < frame_length)
        throw InputTooShort(std::to_string(samples.size()) + " samples, frame needs " + std::to_string(frame_length));

    const std::size_t n_frames = 1 + (samples.size() - frame_length) / hop_length;
    FrameSeries fs;
    fs.frame_length = frame_length;
    fs.hop_length = hop_length;
    fs.frames.resize(static_cast<Eigen::Index>(n_frames), static_cast<Eigen::Index>(frame_length));
    for (std::size_t t = 0; t < n_frames; ++t) {
        std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(t * hop_length), frame_length,
                    fs.frames.row(static_cast<Eigen::Index>(t)).data());
    }
    return fs;
}

inline FrameSeries frame(const AudioClip& clip, std::size_t frame_length, std::size_t hop_length) {
    return frame(std::span<const double>(clip.samples), frame_length, hop_length);
}

}  // namespace folkdsp
