#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "folkdsp/error.hpp"
#include "folkdsp/genre.hpp"
#include "folkdsp/matrix.hpp"
#include "folkdsp/rng.hpp"

namespace folkdsp::forest {

using ClassCounts = std::array<std::uint32_t, kNumGenres>;
using Probabilities = std::array<double, kNumGenres>;

/// Gini impurity 1 - sum p_c^2 of a class histogram; 0 for an empty one.
inline double gini(std::span<const std::uint32_t> counts) {
    double total = 0.0;
    for (auto c : counts) total += c;
    if (total == 0.0) return 0.0;
    double sq = 0.0;
    for (auto c : counts) sq += (c / total) * (c / total);
    return 1.0 - sq;
}

struct TreeParams {
    /// Features examined per split; 0 means all features.
    std::size_t features_per_split = 0;
    std::optional<std::size_t> max_depth;  // unlimited when empty
    std::size_t min_leaf_size = 1;
};

/// Flattened binary tree. Node 0 is the root; leaves have feature == -1.
/// Rows with x[feature] <= threshold go left.
struct DecisionTree {
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        ClassCounts counts{};  // training histogram reaching this node

        bool is_leaf() const noexcept { return feature < 0; }
    };

    std::vector<Node> nodes;
    std::size_t n_features = 0;

    std::size_t leaf_index(std::span<const double> x) const {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) {
            const auto& n = nodes[i];
            i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return i;
    }

    const ClassCounts& leaf_counts(std::span<const double> x) const { return nodes[leaf_index(x)].counts; }

    std::size_t depth() const {
        std::size_t best = 0;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
        while (!stack.empty()) {
            auto [i, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            if (!nodes[i].is_leaf()) {
                stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
                stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
            }
        }
        return best;
    }
};

namespace detail {

inline void check_xy(const Matrix& X, std::span<const Genre> y) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        throw ShapeError("X has " + std::to_string(X.rows()) + " rows but y has " + std::to_string(y.size()));
    if (X.rows() < 1 || X.cols() < 1) throw ShapeError("empty training matrix");
    if (!X.allFinite()) throw DataError("training matrix contains non-finite values");
}

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
};

/// Greedy recursive partitioning on the rows listed in `rows` (duplicates
/// allowed, as produced by bootstrap sampling).
class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const Genre> y, const TreeParams& params, Rng& rng)
        : X_(X), y_(y), params_(params), rng_(rng), n_features_(static_cast<std::size_t>(X.cols())) {
        per_split_ = params.features_per_split == 0 ? n_features_ : std::min(params.features_per_split, n_features_);
    }

    DecisionTree build(std::vector<std::size_t> rows) {
        tree_.n_features = n_features_;
        tree_.nodes.clear();
        grow(rows, 0);
        return std::move(tree_);
    }

private:
    ClassCounts histogram(std::span<const std::size_t> rows) const {
        ClassCounts c{};
        for (auto r : rows) ++c[index_of(y_[r])];
        return c;
    }

    int grow(std::vector<std::size_t>& rows, std::size_t depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        const ClassCounts counts = histogram(rows);
        tree_.nodes[static_cast<std::size_t>(id)].counts = counts;

        const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
        const bool depth_limited = params_.max_depth && depth >= *params_.max_depth;
        if (pure || depth_limited || rows.size() < 2 * params_.min_leaf_size) return id;

        const SplitCandidate split = best_split(rows, counts);
        if (split.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows)
            (X_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    /// Samples `per_split_` features without replacement; if none of them
    /// admits a valid split, keeps drawing from the remaining features.
    SplitCandidate best_split(const std::vector<std::size_t>& rows, const ClassCounts& parent) {
        std::vector<std::size_t> order(n_features_);
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitCandidate best;
        std::vector<std::pair<double, std::size_t>> sorted(rows.size());
        for (std::size_t drawn = 0; drawn < n_features_; ++drawn) {
            if (drawn >= per_split_ && best.feature >= 0) break;
            const std::size_t pick = drawn + static_cast<std::size_t>(rng_.below(n_features_ - drawn));
            std::swap(order[drawn], order[pick]);
            const std::size_t f = order[drawn];

            for (std::size_t i = 0; i < rows.size(); ++i)
                sorted[i] = {X_(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(f)), rows[i]};
            std::sort(sorted.begin(), sorted.end());
            if (sorted.front().first == sorted.back().first) continue;

            ClassCounts left{};
            ClassCounts right = parent;
            const double n = static_cast<double>(rows.size());
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                const auto c = index_of(y_[sorted[i].second]);
                ++left[c];
                --right[c];
                if (sorted[i].first == sorted[i + 1].first) continue;
                const std::size_t n_left = i + 1, n_right = rows.size() - n_left;
                if (n_left < params_.min_leaf_size || n_right < params_.min_leaf_size) continue;
                const double impurity = (static_cast<double>(n_left) * gini(left) +
                                         static_cast<double>(n_right) * gini(right)) / n;
                if (impurity < best.impurity) {
                    best.impurity = impurity;
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
                    // Midpoint can round onto the upper value for adjacent doubles.
                    if (!(best.threshold < sorted[i + 1].first)) best.threshold = sorted[i].first;
                }
            }
        }
        return best;
    }

    const Matrix& X_;
    std::span<const Genre> y_;
    TreeParams params_;
    Rng& rng_;
    std::size_t n_features_;
    std::size_t per_split_ = 0;
    DecisionTree tree_;
};

}  // namespace detail

/// Fits one tree on every row of X.
inline DecisionTree fit_tree(const Matrix& X, std::span<const Genre> y, const TreeParams& params, Rng& rng) {
    detail::check_xy(X, y);
    std::vector<std::size_t> rows(static_cast<std::size_t>(X.rows()));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return detail::TreeBuilder(X, y, params, rng).build(std::move(rows));
}

struct ForestParams {
    std::size_t n_estimators = 64;
    /// 0 selects floor(sqrt(n_features)).
    std::size_t features_per_split = 0;
    std::optional<std::size_t> max_depth;
    std::size_t min_leaf_size = 1;
    bool bootstrap = true;
    std::uint64_t seed = 0;
    /// Worker threads for tree fitting; results do not depend on it.
    unsigned jobs = 1;
};

struct Prediction {
    Genre genre = Genre::Bambuco;
    Probabilities probabilities{};
};

/// First maximum wins, so ties resolve to the earliest genre in class order.
inline Genre argmax_genre(const Probabilities& p) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumGenres; ++c)
        if (p[c] > p[best]) best = c;
    return kGenres[best];
}

struct ForestModel {
    std::vector<DecisionTree> trees;
    ForestParams params;
    std::size_t features_per_split = 0;
    std::size_t n_features = 0;

    std::size_t n_estimators() const noexcept { return trees.size(); }

    /// Mean over trees of the leaf class frequencies.
    Prediction predict(std::span<const double> x) const {
        if (x.size() != n_features)
            throw ShapeError("model expects " + std::to_string(n_features) + " features, got " + std::to_string(x.size()));
        for (double v : x)
            if (!std::isfinite(v)) throw DataError("non-finite feature value");
        Prediction out;
        for (const auto& tree : trees) {
            const auto& counts = tree.leaf_counts(x);
            double total = 0.0;
            for (auto c : counts) total += c;
            for (std::size_t c = 0; c < kNumGenres; ++c) out.probabilities[c] += counts[c] / total;
        }
        for (auto& p : out.probabilities) p /= static_cast<double>(trees.size());
        out.genre = argmax_genre(out.probabilities);
        return out;
    }

    std::vector<Genre> predict_all(const Matrix& X) const {
        std::vector<Genre> out;
        out.reserve(static_cast<std::size_t>(X.rows()));
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const RowVector row = X.row(i);
            out.push_back(predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))).genre);
        }
        return out;
    }
};

/// Bagged trees, each on its own bootstrap sample and its own RNG substream
/// derived from (seed, tree index).
inline ForestModel fit_forest(const Matrix& X, std::span<const Genre> y, const ForestParams& params) {
    detail::check_xy(X, y);
    if (params.n_estimators < 1) throw std::invalid_argument("fit_forest: n_estimators must be >= 1");

    ForestModel model;
    model.params = params;
    model.n_features = static_cast<std::size_t>(X.cols());
    model.features_per_split =
        params.features_per_split == 0
            ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(X.cols())))))
            : std::min(params.features_per_split, model.n_features);

    const TreeParams tp{model.features_per_split, params.max_depth, params.min_leaf_size};
    const auto n = static_cast<std::size_t>(X.rows());

    auto fit_one = [&](std::size_t t) {
        Rng rng = Rng::derive(params.seed, t);
        std::vector<std::size_t> rows(n);
        if (params.bootstrap)
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        else
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        return detail::TreeBuilder(X, y, tp, rng).build(std::move(rows));
    };

    model.trees.resize(params.n_estimators);
    const unsigned jobs = std::max(1u, params.jobs);
    if (jobs == 1) {
        for (std::size_t t = 0; t < params.n_estimators; ++t) model.trees[t] = fit_one(t);
    } else {
        std::vector<std::future<void>> workers;
        for (unsigned w = 0; w < jobs; ++w)
            workers.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t t = w; t < params.n_estimators; t += jobs) model.trees[t] = fit_one(t);
            }));
        for (auto& f : workers) f.get();
    }
    return model;
}

inline double error_rate(const ForestModel& model, const Matrix& X, std::span<const Genre> y) {
    const auto pred = model.predict_all(X);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != y[i];
    return pred.empty() ? 0.0 : static_cast<double>(wrong) / static_cast<double>(pred.size());
}

struct SweepRow {
    std::size_t n_estimators = 0;
    double train_error = 0.0;
    double validation_error = 0.0;
};

/// Train/validation error for each estimator count on one seeded stratified
/// holdout. Every forest shares `params.seed`, so tree t is identical across
/// counts and larger forests extend smaller ones.
inline std::vector<SweepRow> complexity_sweep(const Matrix& X, std::span<const Genre> y,
                                              std::span<const std::size_t> estimator_counts,
                                              double validation_fraction, ForestParams params = {}) {
    detail::check_xy(X, y);
    if (estimator_counts.empty()) throw std::invalid_argument("complexity_sweep: no estimator counts");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw std::invalid_argument("complexity_sweep: validation_fraction must be in (0, 1)");

    std::array<std::vector<std::size_t>, kNumGenres> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) by_class[index_of(y[i])].push_back(i);
    Rng rng = Rng::derive(params.seed, 0x5EEDu);
    std::vector<std::size_t> train_rows, val_rows;
    for (auto& rows : by_class) {
        rng.shuffle(std::span<std::size_t>(rows));
        const auto n_val = static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(rows.size())));
        for (std::size_t i = 0; i < rows.size(); ++i) (i < n_val ? val_rows : train_rows).push_back(rows[i]);
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    if (train_rows.empty() || val_rows.empty()) throw ShapeError("complexity_sweep: split left an empty partition");

    auto take = [&](const std::vector<std::size_t>& rows, Matrix& Xs, std::vector<Genre>& ys) {
        Xs.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
        ys.clear();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            Xs.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
            ys.push_back(y[rows[i]]);
        }
    };
    Matrix Xt, Xv;
    std::vector<Genre> yt, yv;
    take(train_rows, Xt, yt);
    take(val_rows, Xv, yv);

    std::vector<SweepRow> table;
    for (auto count : estimator_counts) {
        params.n_estimators = count;
        const auto model = fit_forest(Xt, yt, params);
        table.push_back({count, error_rate(model, Xt, yt), error_rate(model, Xv, yv)});
    }
    return table;
}

inline constexpr int kForestSchemaVersion = 1;

inline nlohmann::json to_json(const ForestModel& model) {
    using nlohmann::json;
    json j;
    j["schema"] = "folkdsp.forest";
    j["schema_version"] = kForestSchemaVersion;
    j["class_order"] = json::array();
    for (auto name : kGenreNames) j["class_order"].push_back(std::string(name));
    j["n_features"] = model.n_features;
    j["params"] = {{"n_estimators", model.trees.size()},
                   {"features_per_split", model.features_per_split},
                   {"max_depth", model.params.max_depth ? json(*model.params.max_depth) : json(nullptr)},
                   {"min_leaf_size", model.params.min_leaf_size},
                   {"bootstrap", model.params.bootstrap},
                   {"seed", model.params.seed}};
    j["trees"] = json::array();
    for (const auto& tree : model.trees) {
        json t;
        std::vector<int> feature, left, right;
        std::vector<double> threshold;
        std::vector<std::vector<std::uint32_t>> counts;
        for (const auto& n : tree.nodes) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            counts.emplace_back(n.counts.begin(), n.counts.end());
        }
        t["feature"] = feature;
        t["threshold"] = threshold;
        t["left"] = left;
        t["right"] = right;
        t["counts"] = counts;
        j["trees"].push_back(std::move(t));
    }
    return j;
}

inline ForestModel forest_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != "folkdsp.forest") throw SchemaError("not a forest model");
        const int version = j.at("schema_version").get<int>();
        if (version != kForestSchemaVersion)
            throw SchemaError("unsupported forest schema_version " + std::to_string(version));
        const auto order = j.at("class_order").get<std::vector<std::string>>();
        if (order.size() != kNumGenres || !std::equal(order.begin(), order.end(), kGenreNames.begin()))
            throw SchemaError("forest class_order does not match the genre set");

        ForestModel m;
        m.n_features = j.at("n_features").get<std::size_t>();
        const auto& p = j.at("params");
        m.features_per_split = p.at("features_per_split").get<std::size_t>();
        m.params.features_per_split = m.features_per_split;
        m.params.n_estimators = p.at("n_estimators").get<std::size_t>();
        if (!p.at("max_depth").is_null()) m.params.max_depth = p.at("max_depth").get<std::size_t>();
        m.params.min_leaf_size = p.at("min_leaf_size").get<std::size_t>();
        m.params.bootstrap = p.at("bootstrap").get<bool>();
        m.params.seed = p.at("seed").get<std::uint64_t>();

        for (const auto& t : j.at("trees")) {
            DecisionTree tree;
            tree.n_features = m.n_features;
            const auto feature = t.at("feature").get<std::vector<int>>();
            const auto threshold = t.at("threshold").get<std::vector<double>>();
            const auto left = t.at("left").get<std::vector<int>>();
            const auto right = t.at("right").get<std::vector<int>>();
            const auto counts = t.at("counts").get<std::vector<std::vector<std::uint32_t>>>();
            const std::size_t n = feature.size();
            if (threshold.size() != n || left.size() != n || right.size() != n || counts.size() != n || n == 0)
                throw DataError("inconsistent tree node arrays");
            for (std::size_t i = 0; i < n; ++i) {
                DecisionTree::Node node;
                node.feature = feature[i];
                node.threshold = threshold[i];
                node.left = left[i];
                node.right = right[i];
                if (counts[i].size() != kNumGenres) throw DataError("leaf histogram must have 6 entries");
                std::copy(counts[i].begin(), counts[i].end(), node.counts.begin());
                if (node.is_leaf() && std::accumulate(node.counts.begin(), node.counts.end(), 0u) == 0)
                    throw DataError("tree leaf " + std::to_string(i) + " has an empty histogram");
                if (!node.is_leaf()) {
                    const auto in_range = [n, i](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
                    if (node.feature >= static_cast<int>(m.n_features) || !in_range(node.left) || !in_range(node.right))
                        throw DataError("tree node " + std::to_string(i) + " is malformed");
                }
                tree.nodes.push_back(node);
            }
            m.trees.push_back(std::move(tree));
        }
        if (m.trees.empty() || m.trees.size() != m.params.n_estimators)
            throw DataError("forest tree count disagrees with n_estimators");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed forest model: ") + e.what());
    }
}

}  // namespace folkdsp::forest
