#pragma once

// Trained classifier bundle: the model plus the standardization it was fitted
// under, so evaluation applies exactly the training-time transform.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "folkdsp/features.hpp"
#include "folkdsp/forest.hpp"
#include "folkdsp/mlp.hpp"

namespace folkdsp {

inline constexpr int kModelSchemaVersion = 1;

inline nlohmann::json to_json(const Standardization& s) {
    return {{"mean", s.mean}, {"stddev", s.stddev}, {"constant", s.constant}};
}

inline Standardization standardization_from_json(const nlohmann::json& j) {
    Standardization s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    s.constant = j.at("constant").get<std::vector<bool>>();
    if (s.mean.size() != kNumFeatures || s.stddev.size() != kNumFeatures || s.constant.size() != kNumFeatures)
        throw DataError("standardization must have " + std::to_string(kNumFeatures) + " entries per array");
    return s;
}

struct Classifier {
    std::variant<forest::ForestModel, mlp::MLPModel> model;
    std::optional<Standardization> standardization;

    std::string kind() const { return model.index() == 0 ? "rf" : "mlp"; }

    std::vector<Genre> predict_all(const Matrix& X) const {
        if (static_cast<std::size_t>(X.cols()) != kNumFeatures)
            throw ShapeError("expected " + std::to_string(kNumFeatures) + " feature columns, got " +
                             std::to_string(X.cols()));
        const Matrix Z = standardization ? standardization->apply(X) : X;
        if (const auto* f = std::get_if<forest::ForestModel>(&model)) return f->predict_all(Z);
        return mlp::predict_all(std::get<mlp::MLPModel>(model), Z);
    }
};

inline nlohmann::json to_json(const Classifier& c) {
    nlohmann::json j;
    j["schema"] = "folkdsp.classifier";
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = c.kind();
    j["feature_names"] = std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end());
    j["standardization"] = c.standardization ? to_json(*c.standardization) : nlohmann::json(nullptr);
    j["model"] = std::visit([](const auto& m) { return to_json(m); }, c.model);
    return j;
}

inline Classifier classifier_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != "folkdsp.classifier") throw SchemaError("not a classifier file");
        const int version = j.at("schema_version").get<int>();
        if (version != kModelSchemaVersion) throw SchemaError("unsupported classifier schema_version " + std::to_string(version));
        const auto names = j.at("feature_names").get<std::vector<std::string>>();
        if (!std::equal(names.begin(), names.end(), kFeatureNames.begin(), kFeatureNames.end()))
            throw SchemaError("classifier feature_names do not match the 26-feature layout");
        Classifier c{forest::ForestModel{}, std::nullopt};
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "rf")
            c.model = forest::forest_from_json(j.at("model"));
        else if (kind == "mlp")
            c.model = mlp::mlp_from_json(j.at("model"));
        else
            throw SchemaError("unknown classifier kind '" + kind + "'");
        if (!j.at("standardization").is_null()) c.standardization = standardization_from_json(j.at("standardization"));
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed classifier file: ") + e.what());
    }
}

inline void save_classifier(const Classifier& c, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json(c).dump() << '\n';
}

inline Classifier load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + " is not valid JSON: " + e.what());
    }
    return classifier_from_json(j);
}

}  // namespace folkdsp
