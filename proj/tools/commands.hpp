#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "folkdsp/folkdsp.hpp"

namespace folkdsp::cli {

namespace fs = std::filesystem;

// Flag values as typed by the user; absent means "fall through to env, file, default".
using Flags = std::map<std::string, std::optional<std::string>>;

inline std::optional<std::string> flag(const Flags& f, const std::string& key) {
    const auto it = f.find(key);
    return it == f.end() ? std::nullopt : it->second;
}

struct Log {
    static inline int level = 1;  // 0 quiet, 1 normal, 2 verbose
    static inline std::mutex mu;

    static void info(const std::string& msg) {
        if (level < 1) return;
        std::lock_guard lock(mu);
        std::cerr << "folkdsp: " << msg << '\n';
    }
    static void debug(const std::string& msg) {
        if (level < 2) return;
        std::lock_guard lock(mu);
        std::cerr << "folkdsp: " << msg << '\n';
    }
    static void warn(const std::string& msg) {
        std::lock_guard lock(mu);
        std::cerr << "folkdsp: warning: " << msg << '\n';
    }
};

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

inline void require_file(const fs::path& path, const char* what) {
    if (!fs::is_regular_file(path)) throw DataError(std::string(what) + " not found: " + path.string());
}

inline Dataset load_dataset(const fs::path& path) {
    require_file(path, "feature table");
    return load_features(path);
}

inline fs::path parent_or_cwd(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// ---------------------------------------------------------------- synth

inline int cmd_synth(config::RunConfig& cfg, const Flags& f) {
    const fs::path out = cfg.get_string("out", flag(f, "out"), "corpus");
    const auto per_class = cfg.get_count("per-class", flag(f, "per-class"), 30, 1);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", flag(f, "seed"), 0));
    const double seconds = cfg.get_double("seconds", flag(f, "seconds"), 3.0);
    if (!(seconds > 0.1)) throw ConfigError("seconds must be > 0.1");

    synth::SynthConfig sc;
    sc.seconds = seconds;
    const auto files = synth::write_corpus(out, per_class, seed, sc);
    cfg.write(out / "synth_config.json");
    Log::info("wrote " + std::to_string(files.size()) + " clips under " + out.string());
    return 0;
}

// ---------------------------------------------------------------- ingest

struct IngestItem {
    fs::path path;
    std::string song_id;
    Genre genre;
};

/// Lists root/<Genre>/*.wav. Unknown directories are a hard error, empty ones a warning.
inline std::vector<IngestItem> scan_corpus(const fs::path& root) {
    if (!fs::is_directory(root)) throw DataError("corpus root is not a directory: " + root.string());
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) dirs.push_back(e.path());
        else Log::debug("ignoring " + e.path().string());
    }
    std::sort(dirs.begin(), dirs.end());

    std::vector<IngestItem> items;
    for (const auto& dir : dirs) {
        const auto name = dir.filename().string();
        if (name.starts_with(".")) continue;
        const auto genre = try_parse_genre(name, true);
        if (!genre)
            throw DataError("unknown genre directory '" + name + "'; expected one of: " + genre_list());
        std::vector<fs::path> wavs;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && lower(e.path().extension().string()) == ".wav") wavs.push_back(e.path());
        std::sort(wavs.begin(), wavs.end());
        if (wavs.empty()) Log::warn("genre directory " + dir.string() + " has no WAV files");
        for (const auto& w : wavs)
            items.push_back({w, std::string(name_of(*genre)) + "/" + w.filename().string(), *genre});
    }
    return items;
}

inline int cmd_ingest(config::RunConfig& cfg, const Flags& f) {
    const fs::path root = cfg.get_string("root", flag(f, "root"), "corpus");
    const fs::path out = cfg.get_string("out", flag(f, "out"), "features.csv");
    const auto jobs = cfg.get_count("jobs", flag(f, "jobs"), 1, 1);
    const auto max_seconds = cfg.get_optional_double("max-seconds", flag(f, "max-seconds"));
    if (max_seconds && !(*max_seconds > 0.0)) throw ConfigError("max-seconds must be positive");

    const auto items = scan_corpus(root);
    if (items.empty()) throw DataError("no WAV files under " + root.string());

    std::vector<std::optional<FeatureVector>> rows(items.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            const auto& it = items[i];
            try {
                AudioClip clip = read_wav(it.path);
                if (max_seconds) {
                    const auto keep = static_cast<std::size_t>(*max_seconds * clip.sample_rate);
                    if (clip.samples.size() > keep) clip.samples.resize(keep);
                }
                clip.source_id = it.song_id;
                auto fv = extract_features(clip);
                fv.label = it.genre;
                rows[i] = std::move(fv);
                Log::debug("extracted " + it.song_id);
            } catch (const Error& e) {
                Log::warn("skipping " + it.path.string() + ": " + e.what());
            }
        }
    };
    if (jobs == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(jobs, items.size()); ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::vector<FeatureVector> kept;
    for (auto& r : rows)
        if (r) kept.push_back(std::move(*r));
    if (kept.empty()) throw DataError("no file under " + root.string() + " could be read");

    save_features(Dataset::from_vectors(kept), out);
    cfg.write(parent_or_cwd(out) / "ingest_config.json");
    Log::info("wrote " + std::to_string(kept.size()) + " rows to " + out.string() +
              (kept.size() < items.size() ? " (" + std::to_string(items.size() - kept.size()) + " skipped)" : ""));
    return 0;
}

// ---------------------------------------------------------------- train / eval

struct EvalOutcome {
    eval::ConfusionMatrix cm;
    eval::MetricsReport metrics;
};

inline EvalOutcome evaluate(const Classifier& model, const Dataset& ds) {
    const auto truth = ds.require_labels();
    const auto pred = model.predict_all(ds.X);
    EvalOutcome out{eval::confusion(truth, pred), {}};
    out.metrics = eval::metrics(out.cm);
    return out;
}

inline nlohmann::json outcome_json(const EvalOutcome& o) {
    return {{"metrics", eval::to_json(o.metrics)}, {"confusion_matrix", eval::to_json(o.cm)}};
}

inline std::string predictions_csv(const Classifier& model, const Dataset& ds) {
    const auto pred = model.predict_all(ds.X);
    std::ostringstream out;
    csv::write_row(out, {"song_id", "label", "predicted"});
    for (std::size_t i = 0; i < ds.size(); ++i)
        csv::write_row(out, {ds.song_ids[i], ds.labels[i] ? std::string(name_of(*ds.labels[i])) : "",
                             std::string(name_of(pred[i]))});
    return out.str();
}

inline int cmd_train(config::RunConfig& cfg, const Flags& f) {
    const std::string kind = lower(cfg.get_string("model", flag(f, "model"), "rf"));
    if (kind != "rf" && kind != "mlp") throw ConfigError("model must be rf or mlp, got '" + kind + "'");
    const fs::path features = cfg.get_string("features", flag(f, "features"), "features.csv");
    const fs::path out_dir = cfg.get_string("out-dir", flag(f, "out-dir"), "train-" + kind);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", flag(f, "seed"), 0));
    const bool standardize_on = cfg.get_bool("standardize", flag(f, "standardize"), true);
    eval::SplitFractions fr;
    fr.train = cfg.get_double("train-fraction", flag(f, "train-fraction"), fr.train);
    fr.validation = cfg.get_double("validation-fraction", flag(f, "validation-fraction"), fr.validation);
    fr.test = cfg.get_double("test-fraction", flag(f, "test-fraction"), fr.test);

    const Dataset ds = load_dataset(features);
    const auto split = eval::stratified_split(ds, fr, seed);

    Classifier model{forest::ForestModel{}, std::nullopt};
    if (standardize_on) model.standardization = Standardization::fit(split.train.X);
    auto prep = [&](const Matrix& X) { return model.standardization ? model.standardization->apply(X) : X; };
    const Matrix Xtr = prep(split.train.X);
    const auto ytr = split.train.require_labels();

    std::optional<mlp::TrainReport> history;
    if (kind == "rf") {
        forest::ForestParams p;
        p.seed = seed;
        p.n_estimators = cfg.get_count("n-estimators", flag(f, "n-estimators"), p.n_estimators, 1);
        p.features_per_split = cfg.get_count("features-per-split", flag(f, "features-per-split"), 0);
        p.min_leaf_size = cfg.get_count("min-leaf-size", flag(f, "min-leaf-size"), 1, 1);
        if (auto d = cfg.get_optional("max-depth", flag(f, "max-depth"))) {
            const auto v = csv::parse_int(*d);
            if (!v || *v < 1) throw ConfigError("max-depth must be a positive integer");
            p.max_depth = static_cast<std::size_t>(*v);
        }
        p.jobs = static_cast<unsigned>(cfg.get_count("jobs", flag(f, "jobs"), 1, 1));
        Log::info("fitting " + std::to_string(p.n_estimators) + " trees on " + std::to_string(split.train.size()) + " rows");
        model.model = forest::fit_forest(Xtr, ytr, p);
    } else {
        mlp::TrainConfig tc;
        tc.seed = seed;
        tc.epochs = cfg.get_count("epochs", flag(f, "epochs"), tc.epochs, 1);
        tc.batch_size = cfg.get_count("batch-size", flag(f, "batch-size"), tc.batch_size, 1);
        tc.learning_rate = cfg.get_double("learning-rate", flag(f, "learning-rate"), tc.learning_rate);
        if (!(tc.learning_rate > 0.0)) throw ConfigError("learning-rate must be positive");
        Log::info("training mlp for " + std::to_string(tc.epochs) + " epochs on " + std::to_string(split.train.size()) +
                  " rows");
        auto result = mlp::train(mlp::init(seed), Xtr, ytr, prep(split.validation.X), split.validation.require_labels(), tc);
        Log::info("kept parameters from epoch " + std::to_string(result.report.best_epoch));
        model.model = std::move(result.model);
        history = std::move(result.report);
    }

    const auto val = evaluate(model, split.validation);
    const auto test = evaluate(model, split.test);

    fs::create_directories(out_dir);
    save_classifier(model, out_dir / "model.json");

    nlohmann::json report;
    report["model"] = kind;
    report["seed"] = seed;
    report["features"] = features.string();
    report["standardized"] = standardize_on;
    report["split"] = {{"fractions", {{"train", fr.train}, {"validation", fr.validation}, {"test", fr.test}}},
                       {"sizes", {{"train", split.train.size()}, {"validation", split.validation.size()},
                                  {"test", split.test.size()}}}};
    report["validation"] = outcome_json(val);
    report["test"] = outcome_json(test);
    if (history) report["best_epoch"] = history->best_epoch;
    write_text(out_dir / "report.json", report.dump(2) + "\n");

    const std::string title = std::string(kind == "rf" ? "random forest" : "neural network") + ", test split (" +
                              std::to_string(split.test.size()) + " songs, seed " + std::to_string(seed) + ")";
    const std::string text = eval::format_report(test.metrics, test.cm, title);
    write_text(out_dir / "report.txt", text);
    write_text(out_dir / "test_predictions.csv", predictions_csv(model, split.test));
    if (history) {
        std::ostringstream buf;
        mlp::write_report_csv(buf, *history);
        write_text(out_dir / "train_report.csv", buf.str());
    }
    cfg.write(out_dir / "train_config.json");

    std::cout << text;
    Log::info("test accuracy " + csv::format_fixed(test.metrics.accuracy, 4) + ", outputs in " + out_dir.string());
    return 0;
}

inline int cmd_eval(config::RunConfig& cfg, const Flags& f) {
    const fs::path model_path = cfg.get_string("model", flag(f, "model"), "model.json");
    const fs::path features = cfg.get_string("features", flag(f, "features"), "features.csv");
    const auto out_dir = cfg.get_optional("out-dir", flag(f, "out-dir"));

    require_file(model_path, "model file");
    const Classifier model = load_classifier(model_path);
    const Dataset ds = load_dataset(features);
    const auto o = evaluate(model, ds);

    const std::string title = model.kind() + " model " + model_path.filename().string() + " on " +
                              features.filename().string() + " (" + std::to_string(ds.size()) + " songs)";
    const std::string text = eval::format_report(o.metrics, o.cm, title);
    std::cout << text;
    if (out_dir) {
        nlohmann::json j = outcome_json(o);
        j["model"] = model_path.string();
        j["features"] = features.string();
        write_text(fs::path(*out_dir) / "eval_report.json", j.dump(2) + "\n");
        write_text(fs::path(*out_dir) / "eval_report.txt", text);
        write_text(fs::path(*out_dir) / "eval_predictions.csv", predictions_csv(model, ds));
        cfg.write(fs::path(*out_dir) / "eval_config.json");
    }
    return 0;
}

// ---------------------------------------------------------------- unsupervised

inline Matrix prepared_matrix(config::RunConfig& cfg, const Flags& f, const Dataset& ds) {
    const bool on = cfg.get_bool("standardize", flag(f, "standardize"), true);
    return on ? standardize(ds).data.X : ds.X;
}

inline unsup::TsneConfig tsne_config(config::RunConfig& cfg, const Flags& f, std::uint64_t seed) {
    unsup::TsneConfig t;
    t.seed = seed;
    t.perplexity = cfg.get_double("perplexity", flag(f, "perplexity"), t.perplexity);
    t.iterations = cfg.get_count("iterations", flag(f, "iterations"), t.iterations, 1);
    t.learning_rate = cfg.get_double("learning-rate", flag(f, "learning-rate"), t.learning_rate);
    t.minkowski_p = cfg.get_double("minkowski-p", flag(f, "minkowski-p"), t.minkowski_p);
    return t;
}

inline std::string label_text(const Dataset& ds, std::size_t i) {
    return ds.labels[i] ? std::string(name_of(*ds.labels[i])) : "";
}

inline Matrix first_two(const Matrix& Z) {
    Matrix out = Matrix::Zero(Z.rows(), 2);
    out.leftCols(std::min<Eigen::Index>(2, Z.cols())) = Z.leftCols(std::min<Eigen::Index>(2, Z.cols()));
    return out;
}

inline int cmd_cluster(config::RunConfig& cfg, const Flags& f) {
    const fs::path features = cfg.get_string("features", flag(f, "features"), "features.csv");
    const std::string mode = lower(cfg.get_string("mode", flag(f, "mode"), "raw"));
    if (mode != "raw" && mode != "pca" && mode != "tsne") throw ConfigError("mode must be raw, pca or tsne");
    const fs::path out_dir = cfg.get_string("out-dir", flag(f, "out-dir"), "clusters");
    const auto k = cfg.get_count("k", flag(f, "k"), 6, 2);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", flag(f, "seed"), 0));
    unsup::KMeansConfig kc;
    kc.seed = seed;
    kc.n_restarts = cfg.get_count("restarts", flag(f, "restarts"), kc.n_restarts, 1);
    kc.max_iter = cfg.get_count("max-iter", flag(f, "max-iter"), kc.max_iter, 1);

    const Dataset ds = load_dataset(features);
    const Matrix X = prepared_matrix(cfg, f, ds);
    if (static_cast<std::size_t>(X.rows()) < k + 1)
        throw DataError("need more than k = " + std::to_string(k) + " rows, have " + std::to_string(X.rows()));

    // space: where k-means runs; view: the 2-D coordinates drawn and exported.
    Matrix space, view;
    std::string xlabel = "PC 1", ylabel = "PC 2";
    std::function<Matrix(const Matrix&)> to_view;
    if (mode == "raw") {
        space = X;
        const auto pca = unsup::pca_fit(X, 2);
        view = unsup::pca_transform(pca, X);
        to_view = [pca](const Matrix& C) { return unsup::pca_transform(pca, C); };
    } else if (mode == "pca") {
        const auto n_comp = cfg.get_count("pca-components", flag(f, "pca-components"), 10, 2);
        const auto pca = unsup::pca_fit(X, std::min<std::size_t>(n_comp, static_cast<std::size_t>(X.cols())));
        space = unsup::pca_transform(pca, X);
        view = first_two(space);
        to_view = first_two;
    } else {
        const auto emb = unsup::tsne(X, tsne_config(cfg, f, seed));
        Log::info("t-SNE final KL " + csv::format_fixed(emb.kl_trace.empty() ? 0.0 : emb.kl_trace.back().kl, 4));
        space = emb.points;
        view = space;
        to_view = [](const Matrix& C) { return C; };
        xlabel = "t-SNE 1", ylabel = "t-SNE 2";
    }

    const auto result = unsup::kmeans(space, k, kc);
    const double sc = unsup::silhouette(space, result.assignments);
    const std::string caption = svg::cluster_caption(k, result.inertia, sc);

    const std::string stem = "clusters_" + mode;
    std::ostringstream table;
    csv::write_row(table, {"song_id", "label", "x", "y", "cluster"});
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        csv::write_row(table, {ds.song_ids[i], label_text(ds, i), csv::format_double(view(r, 0)),
                               csv::format_double(view(r, 1)), std::to_string(result.assignments[i])});
    }
    write_text(out_dir / (stem + ".csv"), table.str());

    svg::ScatterPlot plot;
    plot.points = view;
    plot.clusters = result.assignments;
    plot.centroids = to_view(result.centroids);
    plot.title = "k-means on " + (mode == "raw" ? std::string("standardized features (PCA view)")
                                  : mode == "pca" ? "PCA components" : "t-SNE embedding");
    plot.caption = caption;
    plot.xlabel = xlabel;
    plot.ylabel = ylabel;
    write_text(out_dir / (stem + ".svg"), svg::render(plot));

    nlohmann::json summary;
    summary["mode"] = mode;
    summary["k"] = k;
    summary["inertia"] = result.inertia;
    summary["silhouette"] = sc;
    summary["caption"] = caption;
    summary["n_iterations"] = result.n_iterations;
    summary["space_dims"] = space.cols();
    write_text(out_dir / (stem + ".json"), summary.dump(2) + "\n");
    cfg.write(out_dir / ("cluster_" + mode + "_config.json"));

    std::cout << caption << '\n';
    return 0;
}

inline int cmd_reduce(config::RunConfig& cfg, const Flags& f) {
    const fs::path features = cfg.get_string("features", flag(f, "features"), "features.csv");
    const std::string method = lower(cfg.get_string("method", flag(f, "method"), "pca"));
    if (method != "pca" && method != "tsne") throw ConfigError("method must be pca or tsne");
    const fs::path out = cfg.get_string("out", flag(f, "out"), "embedding_" + method + ".csv");
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", flag(f, "seed"), 0));

    const Dataset ds = load_dataset(features);
    const Matrix X = prepared_matrix(cfg, f, ds);
    Matrix Z;
    if (method == "pca") {
        const auto n = cfg.get_count("components", flag(f, "components"), 2, 1);
        if (n > static_cast<std::size_t>(X.cols())) throw ConfigError("components exceeds the feature count");
        Z = unsup::pca_transform(unsup::pca_fit(X, n), X);
    } else {
        Z = unsup::tsne(X, tsne_config(cfg, f, seed)).points;
    }

    std::vector<std::string> header{"song_id", "label"};
    if (Z.cols() == 2) {
        header.insert(header.end(), {"x", "y"});
    } else {
        for (Eigen::Index c = 0; c < Z.cols(); ++c) header.push_back("dim_" + std::to_string(c + 1));
    }
    std::ostringstream table;
    csv::write_row(table, header);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::vector<std::string> row{ds.song_ids[i], label_text(ds, i)};
        for (Eigen::Index c = 0; c < Z.cols(); ++c) row.push_back(csv::format_double(Z(static_cast<Eigen::Index>(i), c)));
        csv::write_row(table, row);
    }
    write_text(out, table.str());
    cfg.write(parent_or_cwd(out) / ("reduce_" + method + "_config.json"));
    Log::info("wrote " + std::to_string(Z.cols()) + "-D " + method + " embedding to " + out.string());
    return 0;
}

inline int cmd_sweep(config::RunConfig& cfg, const Flags& f) {
    const fs::path features = cfg.get_string("features", flag(f, "features"), "features.csv");
    const fs::path out_dir = cfg.get_string("out-dir", flag(f, "out-dir"), "sweep");
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", flag(f, "seed"), 0));
    const auto counts = cfg.get_counts("estimators", flag(f, "estimators"), {1, 2, 4, 8, 16, 32, 64, 128, 256});
    const double val_frac = cfg.get_double("validation-fraction", flag(f, "validation-fraction"), 0.2);
    const auto k_min = cfg.get_count("k-min", flag(f, "k-min"), 2, 2);
    const auto k_max = cfg.get_count("k-max", flag(f, "k-max"), 10, 2);
    unsup::KMeansConfig kc;
    kc.seed = seed;
    kc.n_restarts = cfg.get_count("restarts", flag(f, "restarts"), kc.n_restarts, 1);
    for (auto c : counts)
        if (c < 1) throw ConfigError("estimator counts must be >= 1");

    const Dataset ds = load_dataset(features);
    const Matrix X = prepared_matrix(cfg, f, ds);

    std::ostringstream est;
    est << "n_estimators,train_error,validation_error\n";
    if (ds.fully_labeled()) {
        forest::ForestParams p;
        p.seed = seed;
        for (const auto& r : forest::complexity_sweep(X, ds.require_labels(), counts, val_frac, p))
            est << r.n_estimators << ',' << csv::format_double(r.train_error) << ','
                << csv::format_double(r.validation_error) << '\n';
    } else {
        Log::warn("feature table has unlabeled rows; estimator sweep left empty");
    }
    write_text(out_dir / "estimator_sweep.csv", est.str());

    const auto table = unsup::choose_k(X, k_min, std::min(k_max, static_cast<std::size_t>(X.rows())), kc);
    std::ostringstream ck;
    ck << "k,inertia,silhouette\n";
    for (const auto& r : table)
        ck << r.k << ',' << csv::format_double(r.inertia) << ',' << csv::format_double(r.silhouette) << '\n';
    write_text(out_dir / "choose_k.csv", ck.str());

    const auto curve = unsup::cumulative_variance(X);
    std::ostringstream cv;
    cv << "component,cumulative_variance_ratio\n";
    for (std::size_t i = 0; i < curve.size(); ++i) cv << (i + 1) << ',' << csv::format_double(curve[i]) << '\n';
    write_text(out_dir / "cumulative_variance.csv", cv.str());

    cfg.write(out_dir / "sweep_config.json");
    Log::info("best k by silhouette: " + std::to_string(unsup::best_k(table)));
    return 0;
}

// ---------------------------------------------------------------- plot

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError("missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
    std::vector<double> numbers(const std::string& name) const {
        const auto c = column(name);
        std::vector<double> out;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto v = c < rows[r].size() ? csv::parse_double(rows[r][c]) : std::nullopt;
            if (!v) throw DataError("row " + std::to_string(r + 1) + ": column '" + name + "' is not a number");
            out.push_back(*v);
        }
        return out;
    }
};

inline CsvTable read_table(const fs::path& path) {
    require_file(path, "input table");
    std::ifstream in(path, std::ios::binary);
    CsvTable t;
    if (!csv::read_row(in, t.header)) throw SchemaError(path.string() + " is empty");
    std::vector<std::string> row;
    while (csv::read_row(in, row)) t.rows.push_back(row);
    return t;
}

inline int cmd_plot(config::RunConfig& cfg, const Flags& f) {
    const fs::path input = cfg.get_string("input", flag(f, "input"), "clusters_raw.csv");
    fs::path out = input;
    out.replace_extension(".svg");
    out = cfg.get_string("out", flag(f, "out"), out.string());
    std::string kind = lower(cfg.get_string("kind", flag(f, "kind"), "auto"));
    const auto title = cfg.get_optional("title", flag(f, "title"));

    const CsvTable t = read_table(input);
    auto has = [&](const char* c) { return std::find(t.header.begin(), t.header.end(), c) != t.header.end(); };
    if (kind == "auto") {
        if (has("cluster")) kind = "clusters";
        else if (has("cumulative_variance_ratio")) kind = "variance";
        else if (has("n_estimators")) kind = "sweep";
        else if (has("silhouette")) kind = "choose-k";
        else throw SchemaError("cannot tell what " + input.string() + " holds; pass --kind");
    }

    std::string doc;
    if (kind == "clusters") {
        const auto xs = t.numbers("x"), ys = t.numbers("y"), cs = t.numbers("cluster");
        svg::ScatterPlot p;
        p.points.resize(static_cast<Eigen::Index>(xs.size()), 2);
        int k = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            p.points(static_cast<Eigen::Index>(i), 0) = xs[i];
            p.points(static_cast<Eigen::Index>(i), 1) = ys[i];
            p.clusters.push_back(static_cast<int>(cs[i]));
            k = std::max(k, p.clusters.back() + 1);
        }
        p.centroids = Matrix::Zero(k, 2);
        std::vector<double> n(static_cast<std::size_t>(k), 0.0);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            p.centroids.row(p.clusters[i]) += p.points.row(static_cast<Eigen::Index>(i));
            n[static_cast<std::size_t>(p.clusters[i])] += 1.0;
        }
        for (int c = 0; c < k; ++c)
            if (n[static_cast<std::size_t>(c)] > 0) p.centroids.row(c) /= n[static_cast<std::size_t>(c)];

        // The cluster command leaves its caption beside the table; otherwise score the 2-D view.
        fs::path sidecar = input;
        sidecar.replace_extension(".json");
        if (fs::is_regular_file(sidecar)) {
            std::ifstream in(sidecar, std::ios::binary);
            p.caption = nlohmann::json::parse(in).value("caption", "");
        }
        if (p.caption.empty())
            p.caption = svg::cluster_caption(static_cast<std::size_t>(k), unsup::inertia(p.points, p.clusters, p.centroids),
                                             unsup::silhouette(p.points, p.clusters));
        p.title = title.value_or(input.stem().string());
        doc = svg::render(p);
    } else if (kind == "variance") {
        svg::LineChart c{{{"cumulative variance", t.numbers("component"), t.numbers("cumulative_variance_ratio")}},
                         title.value_or("Accumulated variance"), "components", "ratio"};
        doc = svg::render(c);
    } else if (kind == "sweep") {
        const auto n = t.numbers("n_estimators");
        svg::LineChart c{{{"train", n, t.numbers("train_error")}, {"validation", n, t.numbers("validation_error")}},
                         title.value_or("Error vs number of estimators"), "estimators", "error", true};
        doc = svg::render(c);
    } else if (kind == "choose-k") {
        svg::LineChart c{{{"silhouette", t.numbers("k"), t.numbers("silhouette")}},
                         title.value_or("Silhouette vs k"), "k", "silhouette"};
        doc = svg::render(c);
    } else {
        throw ConfigError("kind must be auto, clusters, variance, sweep or choose-k");
    }
    write_text(out, doc);
    cfg.write(parent_or_cwd(out) / (out.stem().string() + "_plot_config.json"));
    Log::info("wrote " + out.string());
    return 0;
}

// ---------------------------------------------------------------- frames (debug)

/// Per-frame descriptors. Row i uses the uncentered frame [i*hop, i*hop + n_fft)
/// for zcr and rms and the STFT frame centered on the same samples.
inline int cmd_frames(config::RunConfig& cfg, const Flags& f) {
    const fs::path input = cfg.get_string("input", flag(f, "input"), "");
    const fs::path out = cfg.get_string("out", flag(f, "out"), "frames.csv");
    require_file(input, "WAV file");

    AudioClip clip = read_wav(input);
    if (clip.sample_rate != kAnalysisRate) clip = resample(clip, kAnalysisRate);
    const std::size_t n_fft = kDefaultNfft, hop = kDefaultHop;
    const Spectrogram spec = stft(clip, n_fft, hop);
    const FrameSeries frames = frame(clip, n_fft, hop);
    const auto centroid = spectral_centroid(spec);
    const auto rolloff = spectral_rolloff(spec, 0.85);
    const auto bandwidth = spectral_bandwidth(spec);
    const auto zcr = zero_crossing_rate(frames);
    const auto rms = rms_energy(frames);
    const ChromaMatrix chroma = chroma_stft(spec);
    const Matrix mf = mfcc(spec, mel_filterbank(kDefaultMels, n_fft, clip.sample_rate), kNumMfcc);
    const std::size_t offset = n_fft / 2 / hop;

    std::vector<std::string> header{"frame_index", "centroid_hz", "rolloff_hz", "bandwidth_hz", "zcr", "rms"};
    for (int i = 0; i < 12; ++i) header.push_back("chroma_" + std::to_string(i));
    for (std::size_t i = 0; i < kNumMfcc; ++i) header.push_back("mfcc_" + std::to_string(i));
    std::ostringstream table;
    csv::write_row(table, header);
    for (std::size_t i = 0; i < frames.n_frames() && i + offset < spec.n_frames(); ++i) {
        const std::size_t t = i + offset;
        const auto ti = static_cast<Eigen::Index>(t);
        std::vector<std::string> row{std::to_string(i), csv::format_double(centroid[t]), csv::format_double(rolloff[t]),
                                     csv::format_double(bandwidth[t]), csv::format_double(zcr[i]),
                                     csv::format_double(rms[i])};
        for (Eigen::Index c = 0; c < 12; ++c) row.push_back(csv::format_double(chroma.values(ti, c)));
        for (Eigen::Index c = 0; c < mf.cols(); ++c) row.push_back(csv::format_double(mf(ti, c)));
        csv::write_row(table, row);
    }
    write_text(out, table.str());
    Log::info("wrote " + std::to_string(frames.n_frames()) + " frames to " + out.string());
    return 0;
}

}  // namespace folkdsp::cli
