#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "folkdsp/csv.hpp"
#include "folkdsp/error.hpp"
#include "folkdsp/features.hpp"
#include "folkdsp/genre.hpp"
#include "folkdsp/rng.hpp"

namespace folkdsp::eval {

struct SplitFractions {
    double train = 0.6;
    double validation = 0.2;
    double test = 0.2;
};

struct Split {
    Dataset train, validation, test;
    std::vector<std::size_t> train_rows, validation_rows, test_rows;  // indices into the source
};

/// Per-class allocation of shuffled row indices into three partitions.
///
/// Each class of size n gets floor(n * f) rows per partition. Leftover rows
/// first go to any partition still empty for that class, then to partitions
/// drawn with probability proportional to their fractional remainders. If a
/// partition is still empty it takes one row from the largest partition.
inline std::array<std::vector<std::size_t>, 3> stratified_indices(std::span<const Genre> labels,
                                                                 const SplitFractions& f, std::uint64_t seed) {
    const std::array<double, 3> frac{f.train, f.validation, f.test};
    for (double v : frac)
        if (!(v > 0.0)) throw SplitError("split fractions must be positive");
    if (std::abs(frac[0] + frac[1] + frac[2] - 1.0) > 1e-9) throw SplitError("split fractions must sum to 1");

    std::array<std::vector<std::size_t>, kNumGenres> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[index_of(labels[i])].push_back(i);

    std::array<std::vector<std::size_t>, 3> parts;
    for (std::size_t c = 0; c < kNumGenres; ++c) {
        auto& rows = by_class[c];
        if (rows.empty()) continue;
        if (rows.size() < 3)
            throw SplitError("class " + std::string(kGenreNames[c]) + " has " + std::to_string(rows.size()) +
                             " samples; at least 3 are needed");
        Rng rng = Rng::derive(seed, c);
        rng.shuffle(std::span<std::size_t>(rows));

        const double n = static_cast<double>(rows.size());
        std::array<std::size_t, 3> count{};
        std::array<double, 3> rem{};
        std::size_t assigned = 0;
        for (std::size_t p = 0; p < 3; ++p) {
            count[p] = static_cast<std::size_t>(std::floor(n * frac[p] + 1e-9));
            rem[p] = std::max(0.0, n * frac[p] - static_cast<double>(count[p]));
            assigned += count[p];
        }
        std::size_t left = rows.size() - assigned;
        for (std::size_t p = 0; p < 3 && left > 0; ++p)
            if (count[p] == 0) {
                ++count[p];
                rem[p] = 0.0;
                --left;
            }
        while (left > 0) {
            const double total = rem[0] + rem[1] + rem[2];
            std::size_t pick = 0;
            if (total > 0.0) {
                double target = rng.uniform() * total;
                pick = 2;
                for (std::size_t p = 0; p < 3; ++p) {
                    if (target < rem[p]) {
                        pick = p;
                        break;
                    }
                    target -= rem[p];
                }
            } else {
                pick = static_cast<std::size_t>(rng.below(3));
            }
            ++count[pick];
            rem[pick] = 0.0;
            --left;
        }
        for (std::size_t p = 0; p < 3; ++p)
            if (count[p] == 0) {
                auto big = static_cast<std::size_t>(std::max_element(count.begin(), count.end()) - count.begin());
                --count[big];
                ++count[p];
            }

        std::size_t at = 0;
        for (std::size_t p = 0; p < 3; ++p)
            for (std::size_t i = 0; i < count[p]; ++i) parts[p].push_back(rows[at++]);
    }
    for (auto& p : parts) std::sort(p.begin(), p.end());
    return parts;
}

/// Stratified train/validation/test partition; rows keep their source order.
inline Split stratified_split(const Dataset& ds, const SplitFractions& fractions = {}, std::uint64_t seed = 0) {
    ds.check_shape();
    const auto labels = ds.require_labels();
    auto parts = stratified_indices(labels, fractions, seed);
    Split s;
    s.train = ds.subset(parts[0]);
    s.validation = ds.subset(parts[1]);
    s.test = ds.subset(parts[2]);
    s.train_rows = std::move(parts[0]);
    s.validation_rows = std::move(parts[1]);
    s.test_rows = std::move(parts[2]);
    return s;
}

/// counts[true][predicted] in the fixed genre order.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kNumGenres>, kNumGenres> counts{};

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (const auto& r : counts) t = std::accumulate(r.begin(), r.end(), t);
        return t;
    }
    std::uint64_t row_sum(std::size_t c) const { return std::accumulate(counts[c].begin(), counts[c].end(), std::uint64_t{0}); }
    std::uint64_t col_sum(std::size_t c) const {
        std::uint64_t t = 0;
        for (const auto& r : counts) t += r[c];
        return t;
    }
};

inline ConfusionMatrix confusion(std::span<const Genre> y_true, std::span<const Genre> y_pred) {
    if (y_true.size() != y_pred.size())
        throw ShapeError("confusion: " + std::to_string(y_true.size()) + " true labels vs " +
                         std::to_string(y_pred.size()) + " predictions");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.counts[index_of(y_true[i])][index_of(y_pred[i])];
    return cm;
}

/// String-label overload; labels outside the closed set raise DataError.
inline ConfusionMatrix confusion(const std::vector<std::string>& y_true, const std::vector<std::string>& y_pred) {
    std::vector<Genre> t, p;
    for (const auto& s : y_true) t.push_back(parse_genre(s));
    for (const auto& s : y_pred) p.push_back(parse_genre(s));
    return confusion(t, p);
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;  // true count
    bool present = false;       // appears among true or predicted labels
};

struct MetricsReport {
    double accuracy = 0.0;
    double error = 0.0;
    std::array<ClassMetrics, kNumGenres> per_class{};
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::uint64_t total = 0;
};

/// Accuracy, error, per-class precision/recall/F1 (0 on an empty denominator)
/// and macro averages over the classes present in either marginal.
inline MetricsReport metrics(const ConfusionMatrix& cm) {
    MetricsReport r;
    r.total = cm.total();
    if (r.total == 0) throw DataError("metrics: confusion matrix is empty");
    std::uint64_t diag = 0;
    for (std::size_t c = 0; c < kNumGenres; ++c) diag += cm.counts[c][c];
    r.accuracy = static_cast<double>(diag) / static_cast<double>(r.total);
    r.error = 1.0 - r.accuracy;

    std::size_t present = 0;
    for (std::size_t c = 0; c < kNumGenres; ++c) {
        auto& m = r.per_class[c];
        const auto tp = static_cast<double>(cm.counts[c][c]);
        const auto row = cm.row_sum(c), col = cm.col_sum(c);
        m.support = row;
        m.present = row > 0 || col > 0;
        m.precision = col > 0 ? tp / static_cast<double>(col) : 0.0;
        m.recall = row > 0 ? tp / static_cast<double>(row) : 0.0;
        m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        if (m.present) {
            ++present;
            r.macro_precision += m.precision;
            r.macro_recall += m.recall;
            r.macro_f1 += m.f1;
        }
    }
    r.macro_precision /= static_cast<double>(present);
    r.macro_recall /= static_cast<double>(present);
    r.macro_f1 /= static_cast<double>(present);
    return r;
}

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
    nlohmann::json j;
    j["class_order"] = nlohmann::json::array();
    for (auto n : kGenreNames) j["class_order"].push_back(std::string(n));
    j["rows"] = "true";
    j["columns"] = "predicted";
    j["counts"] = cm.counts;
    return j;
}

inline nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["accuracy"] = r.accuracy;
    j["error"] = r.error;
    j["n_samples"] = r.total;
    j["per_class"] = nlohmann::json::array();
    for (std::size_t c = 0; c < kNumGenres; ++c) {
        const auto& m = r.per_class[c];
        j["per_class"].push_back({{"genre", std::string(kGenreNames[c])},
                                  {"precision", m.precision},
                                  {"recall", m.recall},
                                  {"f1", m.f1}});
    }
    j["macro_avg"] = {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}};
    return j;
}

/// Aligned plain-text report: accuracy and error, then a precision / recall /
/// f1-score table per genre with the macro average, then the confusion matrix.
inline std::string format_report(const MetricsReport& r, const ConfusionMatrix& cm, const std::string& title = {}) {
    std::ostringstream out;
    if (!title.empty()) out << title << '\n';
    out << "accuracy  " << csv::format_fixed(r.accuracy, 4) << '\n';
    out << "error     " << csv::format_fixed(r.error, 4) << "\n\n";
    out << std::left << std::setw(12) << "genre" << std::right << std::setw(11) << "precision" << std::setw(9)
        << "recall" << std::setw(10) << "f1-score" << '\n';
    for (std::size_t c = 0; c < kNumGenres; ++c) {
        const auto& m = r.per_class[c];
        out << std::left << std::setw(12) << kGenreNames[c] << std::right << std::setw(11)
            << csv::format_fixed(m.precision, 4) << std::setw(9) << csv::format_fixed(m.recall, 4) << std::setw(10)
            << csv::format_fixed(m.f1, 4) << '\n';
    }
    out << std::left << std::setw(12) << "macro avg" << std::right << std::setw(11)
        << csv::format_fixed(r.macro_precision, 4) << std::setw(9) << csv::format_fixed(r.macro_recall, 4)
        << std::setw(10) << csv::format_fixed(r.macro_f1, 4) << "\n\n";

    out << "confusion matrix (rows = true, columns = predicted)\n";
    out << std::left << std::setw(12) << "";
    for (auto n : kGenreNames) out << std::right << std::setw(10) << n;
    out << '\n';
    for (std::size_t c = 0; c < kNumGenres; ++c) {
        out << std::left << std::setw(12) << kGenreNames[c];
        for (std::size_t p = 0; p < kNumGenres; ++p) out << std::right << std::setw(10) << cm.counts[c][p];
        out << '\n';
    }
    return out.str();
}

}  // namespace folkdsp::eval
