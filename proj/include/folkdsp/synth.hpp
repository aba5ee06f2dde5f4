#pragma once

// Synthetic six-class corpus. Classes differ by fundamental-frequency band,
// harmonic count, amplitude-modulation rate and noise level; they carry the
// genre names only as labels and sound nothing like the real genres.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "folkdsp/audio_io.hpp"
#include "folkdsp/genre.hpp"
#include "folkdsp/rng.hpp"

namespace folkdsp::synth {

struct ClassRecipe {
    double f0_lo, f0_hi;    // Hz
    int harmonics;          // partials, +-1 per file
    double am_lo, am_hi;    // modulation rate, Hz
    double noise;           // white-noise amplitude relative to the tone
};

/// Indexed like kGenres; f0 bands ascend with the index.
inline constexpr std::array<ClassRecipe, kNumGenres> kRecipes = {{
    {110.0, 160.0, 9, 0.8, 1.6, 0.01},
    {190.0, 270.0, 8, 2.0, 3.0, 0.03},
    {320.0, 440.0, 7, 3.5, 5.0, 0.06},
    {520.0, 700.0, 6, 5.5, 7.5, 0.10},
    {850.0, 1150.0, 5, 8.0, 10.5, 0.15},
    {1400.0, 1900.0, 4, 11.0, 14.0, 0.22},
}};

struct SynthConfig {
    double seconds = 3.0;
    int sample_rate = kAnalysisRate;
};

/// "<genre lowercase>_NN.wav", numbered from 01.
inline std::string file_name(std::size_t c, std::size_t index) {
    std::string g(kGenreNames.at(c));
    std::transform(g.begin(), g.end(), g.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    std::string num = std::to_string(index + 1);
    if (num.size() < 2) num.insert(0, 2 - num.size(), '0');
    return g + "_" + num + ".wav";
}

/// One clip of class `c`; file parameters come from substream (seed, c * 1e6 + index).
inline AudioClip make_clip(std::size_t c, std::size_t index, std::uint64_t seed, const SynthConfig& cfg = {}) {
    const ClassRecipe& r = kRecipes.at(c);
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(c) * 1000000u + index);

    const double f0 = rng.uniform(r.f0_lo, r.f0_hi);
    const int partials = r.harmonics - 1 + static_cast<int>(rng.below(3));
    const double tilt = rng.uniform(0.8, 1.4);  // partial k has amplitude k^-tilt
    const double am_rate = rng.uniform(r.am_lo, r.am_hi);
    const double am_depth = rng.uniform(0.3, 0.6);
    const double vibrato = rng.uniform(0.002, 0.006);
    const double noise = r.noise * rng.uniform(0.8, 1.2);
    const double gain = rng.uniform(0.5, 0.8);
    std::vector<double> phase(static_cast<std::size_t>(partials));
    for (auto& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

    const auto n = static_cast<std::size_t>(std::llround(cfg.seconds * cfg.sample_rate));
    const double sr = cfg.sample_rate;
    const double nyquist = 0.5 * sr;
    std::vector<double> x(n);
    double norm = 0.0;
    for (int k = 1; k <= partials; ++k)
        if (k * f0 < nyquist) norm += std::pow(k, -tilt);

    double peak = 0.0;
    double theta = 0.0;  // running phase of the fundamental
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        const double f = f0 * (1.0 + vibrato * std::sin(2.0 * std::numbers::pi * 5.0 * t));
        theta += 2.0 * std::numbers::pi * f / sr;
        double tone = 0.0;
        for (int k = 1; k <= partials; ++k)
            if (k * f0 < nyquist) tone += std::pow(k, -tilt) * std::sin(k * theta + phase[static_cast<std::size_t>(k - 1)]);
        tone /= norm;
        const double env = 1.0 - am_depth * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * am_rate * t));
        x[i] = env * tone + noise * rng.uniform(-1.0, 1.0);
        peak = std::max(peak, std::abs(x[i]));
    }
    for (auto& v : x) v *= gain / peak;

    AudioClip clip;
    clip.samples = std::move(x);
    clip.sample_rate = cfg.sample_rate;
    clip.source_id = std::string(kGenreNames[c]) + "/" + file_name(c, index);
    return clip;
}

/// Writes root/<Genre>/<genre>_NN.wav for every class; returns the paths written.
inline std::vector<std::filesystem::path> write_corpus(const std::filesystem::path& root, std::size_t per_class,
                                                       std::uint64_t seed, const SynthConfig& cfg = {}) {
    if (per_class < 1) throw std::invalid_argument("per_class must be >= 1");
    std::vector<std::filesystem::path> written;
    for (std::size_t c = 0; c < kNumGenres; ++c) {
        const auto dir = root / std::string(kGenreNames[c]);
        std::filesystem::create_directories(dir);
        for (std::size_t i = 0; i < per_class; ++i) {
            const auto path = dir / file_name(c, i);
            write_wav16(path, make_clip(c, i, seed, cfg));
            written.push_back(path);
        }
    }
    return written;
}

}  // namespace folkdsp::synth
