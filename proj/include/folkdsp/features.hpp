#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "folkdsp/audio_io.hpp"
#include "folkdsp/csv.hpp"
#include "folkdsp/error.hpp"
#include "folkdsp/genre.hpp"
#include "folkdsp/matrix.hpp"
#include "folkdsp/spectral.hpp"

namespace folkdsp {

inline constexpr std::size_t kNumFeatures = 26;
inline constexpr std::size_t kNumMfcc = 20;

/// Column order of every feature vector and of the persisted table.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "chroma_mean", "rms_mean", "centroid_mean", "bandwidth_mean", "rolloff_mean", "zcr_mean",
    "mfcc_1",      "mfcc_2",   "mfcc_3",        "mfcc_4",         "mfcc_5",       "mfcc_6",
    "mfcc_7",      "mfcc_8",   "mfcc_9",        "mfcc_10",        "mfcc_11",      "mfcc_12",
    "mfcc_13",     "mfcc_14",  "mfcc_15",       "mfcc_16",        "mfcc_17",      "mfcc_18",
    "mfcc_19",     "mfcc_20"};

namespace feature {
inline constexpr std::size_t kChroma = 0;
inline constexpr std::size_t kRms = 1;
inline constexpr std::size_t kCentroid = 2;
inline constexpr std::size_t kBandwidth = 3;
inline constexpr std::size_t kRolloff = 4;
inline constexpr std::size_t kZcr = 5;
inline constexpr std::size_t kMfccFirst = 6;
}  // namespace feature

struct FeatureVector {
    std::array<double, kNumFeatures> values{};
    std::string song_id;
    std::optional<Genre> label;
};

struct ExtractionConfig {
    int analysis_rate = kAnalysisRate;
    std::size_t n_fft = kDefaultNfft;
    std::size_t hop_length = kDefaultHop;
    std::size_t n_mels = kDefaultMels;
    double rolloff_pct = 0.85;
    double tuning_ref = 440.0;
};

namespace detail {
inline double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}
}  // namespace detail

/// Per-song summary: frame means of chroma (frame max-normalized, then
/// averaged over the 12 classes), RMS, centroid, bandwidth, rolloff, ZCR and
/// the first 20 MFCCs. Clips not at the analysis rate are resampled first.
inline FeatureVector extract_features(const AudioClip& input, const ExtractionConfig& cfg = {}) {
    const AudioClip resampled = input.sample_rate == cfg.analysis_rate ? AudioClip{} : resample(input, cfg.analysis_rate);
    const AudioClip& clip = input.sample_rate == cfg.analysis_rate ? input : resampled;
    if (clip.samples.size() < cfg.n_fft)
        throw InputTooShort(clip.source_id + ": " + std::to_string(clip.samples.size()) +
                            " samples, analysis frame is " + std::to_string(cfg.n_fft));

    const Spectrogram spec = stft(clip, cfg.n_fft, cfg.hop_length);
    const FrameSeries frames = frame(clip, cfg.n_fft, cfg.hop_length);
    const MelFilterbank fb = mel_filterbank(cfg.n_mels, cfg.n_fft, clip.sample_rate);

    FeatureVector fv;
    fv.song_id = clip.source_id;

    const ChromaMatrix chroma = chroma_stft(spec, cfg.tuning_ref);
    double chroma_sum = 0.0;
    for (Eigen::Index t = 0; t < chroma.values.rows(); ++t) {
        const double peak = chroma.values.row(t).maxCoeff();
        if (peak > 0.0) chroma_sum += chroma.values.row(t).sum() / peak;
    }
    fv.values[feature::kChroma] = chroma_sum / (12.0 * static_cast<double>(chroma.values.rows()));
    fv.values[feature::kRms] = detail::mean_of(rms_energy(frames));
    fv.values[feature::kCentroid] = detail::mean_of(spectral_centroid(spec));
    fv.values[feature::kBandwidth] = detail::mean_of(spectral_bandwidth(spec));
    fv.values[feature::kRolloff] = detail::mean_of(spectral_rolloff(spec, cfg.rolloff_pct));
    fv.values[feature::kZcr] = detail::mean_of(zero_crossing_rate(frames));

    const Matrix coeffs = mfcc(spec, fb, kNumMfcc);
    const RowVector means = coeffs.colwise().mean();
    for (std::size_t i = 0; i < kNumMfcc; ++i) fv.values[feature::kMfccFirst + i] = means(static_cast<Eigen::Index>(i));

    for (std::size_t i = 0; i < kNumFeatures; ++i)
        if (!std::isfinite(fv.values[i]))
            throw DataError(clip.source_id + ": non-finite " + std::string(kFeatureNames[i]));
    return fv;
}

/// Feature matrix (n_songs x 26) with ids and optional labels.
struct Dataset {
    Matrix X;
    std::vector<std::string> song_ids;
    std::vector<std::optional<Genre>> labels;

    std::size_t size() const noexcept { return static_cast<std::size_t>(X.rows()); }

    void check_shape() const {
        if (static_cast<std::size_t>(X.rows()) != labels.size() || labels.size() != song_ids.size())
            throw ShapeError("dataset has " + std::to_string(X.rows()) + " rows, " + std::to_string(labels.size()) +
                             " labels and " + std::to_string(song_ids.size()) + " ids");
    }

    bool fully_labeled() const {
        for (const auto& l : labels)
            if (!l) return false;
        return true;
    }

    /// Labels as a dense vector; throws DataError when any row is unlabeled.
    std::vector<Genre> require_labels() const {
        std::vector<Genre> out;
        out.reserve(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!labels[i]) throw DataError("row " + std::to_string(i) + " (" + song_ids[i] + ") has no label");
            out.push_back(*labels[i]);
        }
        return out;
    }

    Dataset subset(const std::vector<std::size_t>& rows) const {
        Dataset out;
        out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.X.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
            out.song_ids.push_back(song_ids[rows[i]]);
            out.labels.push_back(labels[rows[i]]);
        }
        return out;
    }

    static Dataset from_vectors(const std::vector<FeatureVector>& rows) {
        Dataset ds;
        ds.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kNumFeatures));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < kNumFeatures; ++j)
                ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
            ds.song_ids.push_back(rows[i].song_id);
            ds.labels.push_back(rows[i].label);
        }
        return ds;
    }
};

/// Column-wise z-score parameters. Population standard deviation; columns
/// whose spread is negligible relative to their magnitude are flagged
/// constant and map to zero.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<bool> constant;

    static Standardization fit(const Matrix& X) {
        if (X.rows() < 2) throw ShapeError("standardize needs at least 2 rows");
        Standardization s;
        const auto n = static_cast<double>(X.rows());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const double mu = X.col(j).sum() / n;
            const double var = (X.col(j).array() - mu).square().sum() / n;
            const double sd = std::sqrt(var);
            s.mean.push_back(mu);
            s.stddev.push_back(sd);
            s.constant.push_back(!(sd > 1e-12 * std::max(1.0, std::abs(mu))));
        }
        return s;
    }

    std::size_t dims() const noexcept { return mean.size(); }

    Matrix apply(const Matrix& X) const {
        check(X);
        Matrix Z(X.rows(), X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const auto c = static_cast<std::size_t>(j);
            if (constant[c])
                Z.col(j).setZero();
            else
                Z.col(j) = (X.col(j).array() - mean[c]) / stddev[c];
        }
        return Z;
    }

    /// Inverse map; constant columns come back as their mean.
    Matrix invert(const Matrix& Z) const {
        check(Z);
        Matrix X(Z.rows(), Z.cols());
        for (Eigen::Index j = 0; j < Z.cols(); ++j) {
            const auto c = static_cast<std::size_t>(j);
            if (constant[c])
                X.col(j).setConstant(mean[c]);
            else
                X.col(j) = Z.col(j).array() * stddev[c] + mean[c];
        }
        return X;
    }

private:
    void check(const Matrix& X) const {
        if (static_cast<std::size_t>(X.cols()) != mean.size())
            throw ShapeError("standardization fitted on " + std::to_string(mean.size()) + " columns, got " +
                             std::to_string(X.cols()));
    }
};

struct StandardizedDataset {
    Dataset data;
    Standardization params;
};

/// Fits z-score parameters on `ds` (the training split) and applies them.
inline StandardizedDataset standardize(const Dataset& ds) {
    ds.check_shape();
    StandardizedDataset out{ds, Standardization::fit(ds.X)};
    out.data.X = out.params.apply(ds.X);
    return out;
}

inline std::vector<std::string> feature_csv_header() {
    std::vector<std::string> h{"song_id", "label"};
    for (auto name : kFeatureNames) h.emplace_back(name);
    return h;
}

inline void write_features_csv(std::ostream& out, const Dataset& ds) {
    ds.check_shape();
    if (static_cast<std::size_t>(ds.X.cols()) != kNumFeatures)
        throw SchemaError("dataset has " + std::to_string(ds.X.cols()) + " feature columns, expected 26");
    csv::write_row(out, feature_csv_header());
    std::vector<std::string> row;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        row.clear();
        row.push_back(ds.song_ids[i]);
        row.emplace_back(ds.labels[i] ? name_of(*ds.labels[i]) : std::string_view{});
        for (std::size_t j = 0; j < kNumFeatures; ++j) {
            const double v = ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (!std::isfinite(v))
                throw DataError("non-finite " + std::string(kFeatureNames[j]) + " for " + ds.song_ids[i]);
            row.push_back(csv::format_double(v));
        }
        csv::write_row(out, row);
    }
}

inline Dataset read_features_csv(std::istream& in) {
    const auto expected = feature_csv_header();
    std::vector<std::string> fields;
    if (!csv::read_row(in, fields)) throw SchemaError("empty feature file");
    if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
    if (fields != expected) {
        std::string got;
        for (std::size_t i = 0; i < fields.size(); ++i) got += (i ? "," : "") + fields[i];
        throw SchemaError("header has " + std::to_string(fields.size()) + " columns, expected " +
                          std::to_string(expected.size()) + " (song_id,label,chroma_mean,...,mfcc_20); got: " + got);
    }

    std::vector<FeatureVector> rows;
    std::size_t line = 1;
    while (csv::read_row(in, fields)) {
        ++line;
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != expected.size())
            throw SchemaError("line " + std::to_string(line) + " has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(expected.size()));
        FeatureVector fv;
        fv.song_id = fields[0];
        if (!fields[1].empty()) {
            auto g = try_parse_genre(fields[1]);
            if (!g)
                throw DataError("line " + std::to_string(line) + ": unknown genre label \"" + fields[1] +
                                "\"; valid labels are: " + genre_list());
            fv.label = g;
        }
        for (std::size_t j = 0; j < kNumFeatures; ++j) {
            const auto v = csv::parse_double(fields[j + 2]);
            if (!v) throw DataError("line " + std::to_string(line) + ": " + std::string(kFeatureNames[j]) +
                                    " is not a number: \"" + fields[j + 2] + "\"");
            if (!std::isfinite(*v))
                throw DataError("line " + std::to_string(line) + ": non-finite " + std::string(kFeatureNames[j]));
            fv.values[j] = *v;
        }
        rows.push_back(std::move(fv));
    }
    return Dataset::from_vectors(rows);
}

inline void save_features(const Dataset& ds, const std::filesystem::path& path) {
    std::ostringstream buf;
    write_features_csv(buf, ds);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << buf.str();
}

inline Dataset load_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return read_features_csv(in);
}

}  // namespace folkdsp
