#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "folkdsp/audio_io.hpp"
#include "test_support.hpp"

using namespace folkdsp;
using Catch::Approx;

namespace {

std::vector<std::uint8_t> make_wav(std::uint16_t format_tag, std::uint16_t channels, std::uint16_t bits,
                                   std::uint32_t rate, const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> out;
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    auto u16 = [&](std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    };
    auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
    const std::uint16_t align = static_cast<std::uint16_t>(channels * bits / 8);
    tag("RIFF");
    u32(static_cast<std::uint32_t>(36 + data.size()));
    tag("WAVE");
    tag("fmt ");
    u32(16);
    u16(format_tag);
    u16(channels);
    u32(rate);
    u32(rate * align);
    u16(align);
    u16(bits);
    tag("data");
    u32(static_cast<std::uint32_t>(data.size()));
    out.insert(out.end(), data.begin(), data.end());
    return out;
}

std::vector<std::uint8_t> i16_bytes(std::initializer_list<std::int16_t> v) {
    std::vector<std::uint8_t> b;
    for (auto s : v) {
        const auto u = static_cast<std::uint16_t>(s);
        b.push_back(static_cast<std::uint8_t>(u));
        b.push_back(static_cast<std::uint8_t>(u >> 8));
    }
    return b;
}

}  // namespace

TEST_CASE("decode_wav normalizes 16-bit full scale", "[audio_io]") {
    const auto clip = decode_wav(make_wav(1, 1, 16, 22050, i16_bytes({32767})));
    REQUIRE(clip.samples.size() == 1);
    CHECK(clip.samples[0] == Approx(32767.0 / 32768.0).margin(1e-12));
    CHECK(clip.sample_rate == 22050);
}

TEST_CASE("decode_wav averages stereo channels", "[audio_io]") {
    const auto clip = decode_wav(make_wav(1, 2, 16, 44100, i16_bytes({16384, -16384, 16384, -16384, 16384, -16384})));
    REQUIRE(clip.samples.size() == 3);
    for (double s : clip.samples) CHECK(s == 0.0);
}

TEST_CASE("decode_wav of one second of silence", "[audio_io]") {
    std::vector<std::uint8_t> data(44100 * 2, 0);
    const auto clip = decode_wav(make_wav(1, 1, 16, 44100, data));
    REQUIRE(clip.samples.size() == 44100);
    for (double s : clip.samples) REQUIRE(s == 0.0);
}

TEST_CASE("decode_wav reads 8, 24, 32-bit PCM and float32", "[audio_io]") {
    SECTION("8-bit unsigned") {
        const auto clip = decode_wav(make_wav(1, 1, 8, 8000, {0, 128, 255}));
        CHECK(clip.samples[0] == -1.0);
        CHECK(clip.samples[1] == 0.0);
        CHECK(clip.samples[2] == Approx(127.0 / 128.0));
    }
    SECTION("24-bit") {
        // -4194304 (0xC00000) = -0.5 full scale, 4194304 = +0.5
        const auto clip = decode_wav(make_wav(1, 1, 24, 8000, {0x00, 0x00, 0xC0, 0x00, 0x00, 0x40}));
        CHECK(clip.samples[0] == Approx(-0.5));
        CHECK(clip.samples[1] == Approx(0.5));
    }
    SECTION("32-bit integer") {
        std::vector<std::uint8_t> d{0x00, 0x00, 0x00, 0x80, 0x00, 0x00, 0x00, 0x40};
        const auto clip = decode_wav(make_wav(1, 1, 32, 8000, d));
        CHECK(clip.samples[0] == -1.0);
        CHECK(clip.samples[1] == 0.5);
    }
    SECTION("float32, clamped") {
        std::vector<std::uint8_t> d(12);
        const float vals[3] = {0.25f, -2.0f, 1.5f};
        std::memcpy(d.data(), vals, 12);
        const auto clip = decode_wav(make_wav(3, 1, 32, 8000, d));
        CHECK(clip.samples[0] == 0.25);
        CHECK(clip.samples[1] == -1.0);
        CHECK(clip.samples[2] == 1.0);
    }
}

TEST_CASE("decode_wav error paths", "[audio_io]") {
    CHECK_THROWS_AS(decode_wav(std::vector<std::uint8_t>{1, 2, 3}), DecodeError);
    std::vector<std::uint8_t> junk(100, 0x41);
    CHECK_THROWS_AS(decode_wav(junk), DecodeError);
    CHECK_THROWS_AS(decode_wav(make_wav(2, 1, 16, 8000, i16_bytes({1, 2}))), UnsupportedFormat);  // ADPCM
    CHECK_THROWS_AS(decode_wav(make_wav(1, 3, 16, 8000, i16_bytes({1, 2, 3}))), UnsupportedFormat);
    CHECK_THROWS_AS(decode_wav(make_wav(1, 1, 12, 8000, i16_bytes({1}))), UnsupportedFormat);
    CHECK_THROWS_AS(decode_wav(make_wav(1, 1, 16, 8000, {})), DecodeError);

    auto truncated = make_wav(1, 1, 16, 8000, i16_bytes({1, 2, 3}));
    truncated.resize(20);  // cut inside the fmt chunk
    CHECK_THROWS_AS(decode_wav(truncated), DecodeError);
}

TEST_CASE("16-bit encode/decode round trip stays within one LSB", "[audio_io][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        AudioClip clip;
        clip.sample_rate = 22050;
        clip.samples.resize(1 + rng.below(4000));
        for (auto& s : clip.samples) s = rng.uniform(-1.0, 1.0);
        clip.samples[0] = (seed % 2) ? 1.0 : -1.0;
        const auto back = decode_wav(encode_wav16(clip));
        REQUIRE(back.samples.size() == clip.samples.size());
        REQUIRE(back.sample_rate == clip.sample_rate);
        for (std::size_t i = 0; i < clip.samples.size(); ++i)
            REQUIRE(std::abs(back.samples[i] - clip.samples[i]) <= 1.0 / 32768.0);
    }
}

TEST_CASE("resample identity, length and DC", "[audio_io]") {
    const auto noise = testing::noise_clip(5000, 3);
    const auto same = resample(noise, 22050);
    CHECK(same.samples == noise.samples);

    const auto one_second = testing::sine_clip(440.0, 1.0, 44100, 0.5);
    const auto down = resample(one_second, 22050);
    CHECK(down.sample_rate == 22050);
    CHECK(std::abs(static_cast<long>(down.samples.size()) - 22050) <= 1);

    AudioClip dc;
    dc.sample_rate = 44100;
    dc.samples.assign(10000, 0.3);
    for (int target : {22050, 16000, 48000, 8000}) {
        const auto r = resample(dc, target);
        for (double s : r.samples) REQUIRE(s == Approx(0.3).margin(1e-6));
    }
}

TEST_CASE("resampled 440 Hz sine keeps its dominant bin", "[audio_io]") {
    const auto clip = testing::sine_clip(440.0, 0.5, 44100);
    const auto r = resample(clip, 22050);
    std::vector<double> chunk(r.samples.begin() + 4000, r.samples.begin() + 4000 + 2048);
    const auto mags = testing::naive_dft_magnitude(chunk);
    const std::size_t expected = static_cast<std::size_t>(std::lround(440.0 * 2048 / 22050.0));
    CHECK(testing::argmax(mags) == expected);
}

TEST_CASE("frame counts and indexing", "[audio_io]") {
    AudioClip ramp;
    ramp.samples.resize(4096);
    for (std::size_t i = 0; i < ramp.samples.size(); ++i) ramp.samples[i] = static_cast<double>(i);

    CHECK(frame(std::span<const double>(ramp.samples.data(), 2048), 2048, 512).n_frames() == 1);
    const auto fs = frame(ramp, 2048, 512);
    CHECK(fs.n_frames() == 5);
    CHECK(fs.frames(1, 0) == 512.0);
    CHECK_THROWS_AS(frame(std::span<const double>(ramp.samples.data(), 100), 2048, 512), InputTooShort);
    CHECK_THROWS_AS(frame(ramp, 2048, 0), std::invalid_argument);
}

TEST_CASE("frame starts tile the prefix exactly", "[audio_io][property]") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const std::size_t frame_len = 16 + rng.below(200);
        const std::size_t hop = 1 + rng.below(frame_len);
        const auto clip = testing::noise_clip(frame_len + rng.below(2000), seed);
        const auto fs = frame(clip, frame_len, hop);
        REQUIRE(fs.n_frames() == 1 + (clip.samples.size() - frame_len) / hop);
        // First `hop` samples of each frame, then the tail of the last frame.
        std::vector<double> rebuilt;
        for (std::size_t t = 0; t + 1 < fs.n_frames(); ++t)
            for (std::size_t i = 0; i < hop; ++i) rebuilt.push_back(fs.frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)));
        for (std::size_t i = 0; i < frame_len; ++i)
            rebuilt.push_back(fs.frames(static_cast<Eigen::Index>(fs.n_frames() - 1), static_cast<Eigen::Index>(i)));
        for (std::size_t i = 0; i < rebuilt.size(); ++i) REQUIRE(rebuilt[i] == clip.samples[i]);
    }
}
