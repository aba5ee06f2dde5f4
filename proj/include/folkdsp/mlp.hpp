#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "folkdsp/csv.hpp"
#include "folkdsp/error.hpp"
#include "folkdsp/genre.hpp"
#include "folkdsp/matrix.hpp"
#include "folkdsp/rng.hpp"

namespace folkdsp::mlp {

using Probabilities = std::array<double, kNumGenres>;

/// 26 inputs, three rectifier hidden layers, six softmax outputs.
inline const std::vector<std::size_t> kDefaultLayerSizes = {26, 256, 128, 64, 6};

struct Layer {
    Eigen::MatrixXd weights;  // fan_in x fan_out
    Eigen::VectorXd biases;   // fan_out
};

struct MLPModel {
    std::vector<std::size_t> layer_sizes;
    std::vector<Layer> layers;

    std::size_t n_inputs() const { return layer_sizes.front(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
        return n;
    }

    bool all_finite() const {
        for (const auto& l : layers)
            if (!l.weights.allFinite() || !l.biases.allFinite()) return false;
        return true;
    }
};

/// Glorot-uniform weights, limit sqrt(6 / (fan_in + fan_out)); zero biases.
inline MLPModel init(std::uint64_t seed, const std::vector<std::size_t>& layer_sizes = kDefaultLayerSizes) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("mlp::init: need at least input and output sizes");
    if (layer_sizes.back() != kNumGenres) throw std::invalid_argument("mlp::init: output layer must have 6 units");
    Rng rng(seed);
    MLPModel m;
    m.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(layer_sizes[l]);
        const auto fan_out = static_cast<Eigen::Index>(layer_sizes[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Layer layer{Eigen::MatrixXd(fan_in, fan_out), Eigen::VectorXd::Zero(fan_out)};
        for (Eigen::Index i = 0; i < fan_in; ++i)
            for (Eigen::Index j = 0; j < fan_out; ++j) layer.weights(i, j) = rng.uniform(-limit, limit);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

/// Max-subtracted softmax.
inline std::vector<double> softmax(std::span<const double> logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) total += (p[i] = std::exp(logits[i] - peak));
    for (auto& v : p) v /= total;
    return p;
}

namespace detail {

inline void check_input(const MLPModel& model, const Matrix& X) {
    if (static_cast<std::size_t>(X.cols()) != model.n_inputs())
        throw ShapeError("network expects " + std::to_string(model.n_inputs()) + " inputs, got " +
                         std::to_string(X.cols()));
    if (!X.allFinite()) throw DataError("non-finite network input");
}

/// Row-wise log-softmax via log-sum-exp.
inline Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& Z) {
    Eigen::MatrixXd out(Z.rows(), Z.cols());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        const double peak = Z.row(i).maxCoeff();
        const double lse = peak + std::log((Z.row(i).array() - peak).exp().sum());
        out.row(i) = Z.row(i).array() - lse;
    }
    return out;
}

}  // namespace detail

/// Output-layer logits for a batch (rows are samples).
inline Eigen::MatrixXd logits(const MLPModel& model, const Matrix& X) {
    detail::check_input(model, X);
    Eigen::MatrixXd a = X;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        Eigen::MatrixXd z = a * layer.weights;
        z.rowwise() += layer.biases.transpose();
        a = l + 1 < model.layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
}

inline Probabilities forward(const MLPModel& model, std::span<const double> x) {
    Matrix row(1, static_cast<Eigen::Index>(x.size()));
    std::copy(x.begin(), x.end(), row.data());
    const Eigen::MatrixXd z = logits(model, row);
    const Eigen::RowVectorXd zr = z.row(0);
    const auto p = softmax(std::span<const double>(zr.data(), static_cast<std::size_t>(zr.size())));
    Probabilities out{};
    std::copy(p.begin(), p.end(), out.begin());
    return out;
}

struct Prediction {
    Genre genre = Genre::Bambuco;
    Probabilities probabilities{};
};

inline Prediction predict(const MLPModel& model, std::span<const double> x) {
    Prediction out{Genre::Bambuco, forward(model, x)};
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumGenres; ++c)
        if (out.probabilities[c] > out.probabilities[best]) best = c;
    out.genre = kGenres[best];
    return out;
}

inline std::vector<Genre> predict_all(const MLPModel& model, const Matrix& X) {
    const Eigen::MatrixXd z = logits(model, X);
    std::vector<Genre> out;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < z.cols(); ++c)
            if (z(i, c) > z(i, best)) best = c;
        out.push_back(kGenres[static_cast<std::size_t>(best)]);
    }
    return out;
}

/// Mean cross-entropy -log p(true class).
inline double loss(const MLPModel& model, const Matrix& X, std::span<const Genre> y) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw ShapeError("X rows and y length differ");
    if (y.empty()) return 0.0;
    const Eigen::MatrixXd logp = detail::log_softmax(logits(model, X));
    double total = 0.0;
    for (Eigen::Index i = 0; i < logp.rows(); ++i) total -= logp(i, static_cast<Eigen::Index>(index_of(y[static_cast<std::size_t>(i)])));
    return total / static_cast<double>(y.size());
}

struct Gradient {
    double loss = 0.0;
    std::vector<Layer> layers;  // same shapes as the model
};

/// Mean cross-entropy over the batch and its gradient by backpropagation.
inline Gradient loss_and_gradient(const MLPModel& model, const Matrix& X, std::span<const Genre> y) {
    detail::check_input(model, X);
    if (static_cast<std::size_t>(X.rows()) != y.size() || y.empty()) throw ShapeError("X rows and y length differ");
    const std::size_t L = model.layers.size();
    const double batch = static_cast<double>(y.size());

    std::vector<Eigen::MatrixXd> acts{Eigen::MatrixXd(X)};  // inputs to each layer
    std::vector<Eigen::MatrixXd> pre;                        // pre-activations
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd z = acts.back() * model.layers[l].weights;
        z.rowwise() += model.layers[l].biases.transpose();
        pre.push_back(z);
        if (l + 1 < L) acts.push_back(z.cwiseMax(0.0));
    }

    const Eigen::MatrixXd logp = detail::log_softmax(pre.back());
    Gradient g;
    Eigen::MatrixXd delta = logp.array().exp();
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(index_of(y[i]));
        g.loss -= logp(static_cast<Eigen::Index>(i), c);
        delta(static_cast<Eigen::Index>(i), c) -= 1.0;
    }
    g.loss /= batch;
    delta /= batch;

    g.layers.resize(L);
    for (std::size_t l = L; l-- > 0;) {
        g.layers[l].weights = acts[l].transpose() * delta;
        g.layers[l].biases = delta.colwise().sum().transpose();
        if (l > 0) {
            Eigen::MatrixXd back = delta * model.layers[l].weights.transpose();
            delta = back.array() * (pre[l - 1].array() > 0.0).cast<double>();
        }
    }
    return g;
}

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> val_accuracy;
    std::size_t best_epoch = 0;  // 1-based epoch whose parameters were kept
    std::uint64_t seed = 0;

    std::size_t epochs() const noexcept { return train_loss.size(); }
};

struct TrainResult {
    MLPModel model;
    TrainReport report;
};

inline double accuracy(const MLPModel& model, const Matrix& X, std::span<const Genre> y) {
    if (y.empty()) return 0.0;
    const auto pred = predict_all(model, X);
    std::size_t right = 0;
    for (std::size_t i = 0; i < y.size(); ++i) right += pred[i] == y[i];
    return static_cast<double>(right) / static_cast<double>(y.size());
}

/// Mini-batch gradient descent on mean cross-entropy with a per-epoch seeded
/// shuffle. Returns the parameters from the epoch with the lowest validation
/// loss (lowest training loss when the validation set is empty; earliest
/// epoch on ties). Single-threaded and bit-reproducible.
inline TrainResult train(MLPModel model, const Matrix& X_train, std::span<const Genre> y_train, const Matrix& X_val,
                         std::span<const Genre> y_val, const TrainConfig& cfg) {
    if (static_cast<std::size_t>(X_train.rows()) != y_train.size() || y_train.empty())
        throw ShapeError("training set is empty or X/y lengths differ");
    if (static_cast<std::size_t>(X_val.rows()) != y_val.size()) throw ShapeError("validation X/y lengths differ");
    if (cfg.batch_size == 0) throw std::invalid_argument("mlp::train: batch_size must be positive");
    if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("mlp::train: learning_rate must be >= 0");

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(y_train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult out{model, {}};
    out.report.seed = cfg.seed;
    double best = std::numeric_limits<double>::infinity();

    Matrix Xb;
    std::vector<Genre> yb;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            Xb.resize(static_cast<Eigen::Index>(end - start), X_train.cols());
            yb.clear();
            for (std::size_t i = start; i < end; ++i) {
                Xb.row(static_cast<Eigen::Index>(i - start)) = X_train.row(static_cast<Eigen::Index>(order[i]));
                yb.push_back(y_train[order[i]]);
            }
            const Gradient g = loss_and_gradient(model, Xb, yb);
            if (!std::isfinite(g.loss)) throw TrainingDiverged(static_cast<int>(epoch));
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                model.layers[l].weights -= cfg.learning_rate * g.layers[l].weights;
                model.layers[l].biases -= cfg.learning_rate * g.layers[l].biases;
            }
        }
        if (!model.all_finite()) throw TrainingDiverged(static_cast<int>(epoch));

        const double tl = loss(model, X_train, y_train);
        const double vl = y_val.empty() ? tl : loss(model, X_val, y_val);
        if (!std::isfinite(tl) || !std::isfinite(vl)) throw TrainingDiverged(static_cast<int>(epoch));
        out.report.train_loss.push_back(tl);
        out.report.val_loss.push_back(vl);
        out.report.val_accuracy.push_back(accuracy(model, X_val, y_val));
        if (vl < best) {
            best = vl;
            out.model = model;
            out.report.best_epoch = epoch;
        }
    }
    if (cfg.epochs == 0) out.model = model;
    return out;
}

inline void write_report_csv(std::ostream& out, const TrainReport& r) {
    out << "epoch,train_loss,val_loss,val_acc\n";
    for (std::size_t e = 0; e < r.epochs(); ++e)
        out << (e + 1) << ',' << csv::format_double(r.train_loss[e]) << ',' << csv::format_double(r.val_loss[e]) << ','
            << csv::format_double(r.val_accuracy[e]) << '\n';
}

inline constexpr int kMlpSchemaVersion = 1;

inline nlohmann::json to_json(const MLPModel& model) {
    using nlohmann::json;
    json j;
    j["schema"] = "folkdsp.mlp";
    j["schema_version"] = kMlpSchemaVersion;
    j["layer_sizes"] = model.layer_sizes;
    j["class_order"] = json::array();
    for (auto name : kGenreNames) j["class_order"].push_back(std::string(name));
    j["hidden_activation"] = "relu";
    j["output"] = "softmax";
    j["layers"] = json::array();
    for (const auto& l : model.layers) {
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.weights.size()));
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i)
            for (Eigen::Index k = 0; k < l.weights.cols(); ++k) w.push_back(l.weights(i, k));
        j["layers"].push_back({{"weights", w}, {"biases", std::vector<double>(l.biases.data(), l.biases.data() + l.biases.size())}});
    }
    return j;
}

inline MLPModel mlp_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != "folkdsp.mlp") throw SchemaError("not an mlp model");
        const int version = j.at("schema_version").get<int>();
        if (version != kMlpSchemaVersion) throw SchemaError("unsupported mlp schema_version " + std::to_string(version));
        const auto order = j.at("class_order").get<std::vector<std::string>>();
        if (order.size() != kNumGenres || !std::equal(order.begin(), order.end(), kGenreNames.begin()))
            throw SchemaError("mlp class_order does not match the genre set");
        MLPModel m;
        m.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        if (m.layer_sizes.size() < 2 || m.layer_sizes.back() != kNumGenres) throw DataError("bad layer_sizes");
        const auto& layers = j.at("layers");
        if (layers.size() + 1 != m.layer_sizes.size()) throw DataError("layer count disagrees with layer_sizes");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto in = static_cast<Eigen::Index>(m.layer_sizes[l]);
            const auto out = static_cast<Eigen::Index>(m.layer_sizes[l + 1]);
            const auto w = layers[l].at("weights").get<std::vector<double>>();
            const auto b = layers[l].at("biases").get<std::vector<double>>();
            if (w.size() != static_cast<std::size_t>(in * out) || b.size() != static_cast<std::size_t>(out))
                throw DataError("layer " + std::to_string(l) + " parameter arrays have the wrong size");
            Layer layer{Eigen::MatrixXd(in, out), Eigen::VectorXd(out)};
            for (Eigen::Index i = 0; i < in; ++i)
                for (Eigen::Index k = 0; k < out; ++k) layer.weights(i, k) = w[static_cast<std::size_t>(i * out + k)];
            for (Eigen::Index k = 0; k < out; ++k) layer.biases(k) = b[static_cast<std::size_t>(k)];
            m.layers.push_back(std::move(layer));
        }
        if (!m.all_finite()) throw DataError("mlp parameters are not finite");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed mlp model: ") + e.what());
    }
}

}  // namespace folkdsp::mlp
