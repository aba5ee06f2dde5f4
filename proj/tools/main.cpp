#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <memory>

#include "commands.hpp"

using namespace folkdsp;
using namespace folkdsp::cli;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

using Command = std::function<int(config::RunConfig&, const Flags&)>;

struct Sub {
    CLI::App* app;
    Flags flags;
    Command run;
};

CLI::Option* opt(Sub& s, const std::string& key, const std::string& help) {
    return s.app->add_option("--" + key, s.flags[key], help);
}

CLI::Option* positional(Sub& s, const std::string& key, const std::string& help) {
    return s.app->add_option(key, s.flags[key], help);
}

void standardize_flags(Sub& s) {
    s.flags["standardize"];
    s.app->add_flag_callback("--no-standardize", [&s] { s.flags["standardize"] = "false"; },
                             "use raw feature values instead of z-scores");
}

void tsne_options(Sub& s) {
    opt(s, "perplexity", "t-SNE perplexity (default 30)");
    opt(s, "iterations", "t-SNE gradient steps (default 1000)");
    opt(s, "learning-rate", "t-SNE learning rate (default 200)");
    opt(s, "minkowski-p", "Minkowski exponent for input distances (default 2)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"folkdsp: audio features, genre classifiers and clustering for a six-genre corpus"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    bool quiet = false, verbose = false;
    app.add_option("--config", config_path, "TOML file with defaults (flags and FOLKDSP_* variables win)");
    app.add_flag("-q,--quiet", quiet, "only print warnings and errors");
    app.add_flag("-v,--verbose", verbose, "log every file");

    std::vector<std::unique_ptr<Sub>> subs;
    auto add = [&](const std::string& name, const std::string& help, Command run) -> Sub& {
        subs.push_back(std::make_unique<Sub>(Sub{app.add_subcommand(name, help), {}, std::move(run)}));
        return *subs.back();
    };

    {
        auto& s = add("synth", "write a synthetic six-class WAV corpus", cmd_synth);
        opt(s, "out", "output root (default corpus)");
        opt(s, "per-class", "clips per class (default 30)");
        opt(s, "seed", "random seed (default 0)");
        opt(s, "seconds", "clip length in seconds (default 3)");
    }
    {
        auto& s = add("ingest", "extract the 26 features from root/<Genre>/*.wav", cmd_ingest);
        positional(s, "root", "corpus root directory");
        opt(s, "out", "feature CSV to write (default features.csv)");
        opt(s, "jobs", "files decoded in parallel (default 1)");
        opt(s, "max-seconds", "truncate each file to this many seconds (default: whole file)");
    }
    {
        auto& s = add("train", "train a random forest (rf) or neural network (mlp)", cmd_train);
        positional(s, "model", "rf or mlp");
        opt(s, "features", "feature CSV (default features.csv)");
        opt(s, "out-dir", "output directory (default train-<model>)");
        opt(s, "seed", "seed for split and training (default 0)");
        opt(s, "train-fraction", "default 0.6");
        opt(s, "validation-fraction", "default 0.2");
        opt(s, "test-fraction", "default 0.2");
        standardize_flags(s);
        opt(s, "n-estimators", "rf: number of trees (default 64)");
        opt(s, "features-per-split", "rf: candidate features per split (default floor(sqrt(26)))");
        opt(s, "max-depth", "rf: depth limit (default unlimited)");
        opt(s, "min-leaf-size", "rf: default 1");
        opt(s, "jobs", "rf: trees fitted in parallel (default 1)");
        opt(s, "epochs", "mlp: default 200");
        opt(s, "batch-size", "mlp: default 16");
        opt(s, "learning-rate", "mlp: default 0.001");
    }
    {
        auto& s = add("eval", "score a trained model on a labeled feature CSV", cmd_eval);
        opt(s, "model", "model.json written by train")->required();
        opt(s, "features", "feature CSV (default features.csv)");
        opt(s, "out-dir", "also write eval_report.{json,txt} here");
    }
    {
        auto& s = add("cluster", "k-means on raw features, PCA components or a t-SNE embedding", cmd_cluster);
        opt(s, "features", "feature CSV (default features.csv)");
        opt(s, "mode", "raw, pca or tsne (default raw)");
        opt(s, "k", "number of clusters (default 6)");
        opt(s, "out-dir", "output directory (default clusters)");
        opt(s, "seed", "default 0");
        opt(s, "restarts", "k-means restarts (default 10)");
        opt(s, "max-iter", "Lloyd iterations per restart (default 300)");
        opt(s, "pca-components", "pca mode: components kept (default 10)");
        tsne_options(s);
        standardize_flags(s);
    }
    {
        auto& s = add("reduce", "write a PCA or t-SNE embedding", cmd_reduce);
        opt(s, "features", "feature CSV (default features.csv)");
        opt(s, "method", "pca or tsne (default pca)");
        opt(s, "out", "embedding CSV (default embedding_<method>.csv)");
        opt(s, "components", "pca: components kept (default 2)");
        opt(s, "seed", "default 0");
        tsne_options(s);
        standardize_flags(s);
    }
    {
        auto& s = add("sweep", "estimator sweep, choose-k table and cumulative variance", cmd_sweep);
        opt(s, "features", "feature CSV (default features.csv)");
        opt(s, "out-dir", "output directory (default sweep)");
        opt(s, "seed", "default 0");
        opt(s, "estimators", "comma-separated tree counts (default 1,2,4,...,256)");
        opt(s, "validation-fraction", "holdout for the estimator sweep (default 0.2)");
        opt(s, "k-min", "default 2");
        opt(s, "k-max", "default 10");
        opt(s, "restarts", "k-means restarts (default 10)");
        standardize_flags(s);
    }
    {
        auto& s = add("plot", "render a cluster, variance, sweep or choose-k CSV as SVG", cmd_plot);
        positional(s, "input", "CSV written by cluster, reduce or sweep");
        opt(s, "out", "SVG path (default: input with .svg)");
        opt(s, "kind", "auto, clusters, variance, sweep or choose-k (default auto)");
        opt(s, "title", "figure title");
    }
    {
        auto& s = add("frames", "debug: per-frame descriptors of one WAV file", cmd_frames);
        positional(s, "input", "WAV file")->required();
        opt(s, "out", "CSV path (default frames.csv)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    Log::level = quiet ? 0 : verbose ? 2 : 1;

    for (auto& s : subs) {
        if (!s->app->parsed()) continue;
        try {
            config::Table file;
            if (!config_path.empty()) file = config::load_toml(config_path);
            config::RunConfig cfg(s->app->get_name(), std::move(file));
            if (!config_path.empty()) cfg.note("config-file", config_path);
            return s->run(cfg, s->flags);
        } catch (const ConfigError& e) {
            std::cerr << "folkdsp: " << e.what() << '\n';
            return kExitUsage;
        } catch (const DataError& e) {
            std::cerr << "folkdsp: " << e.what() << '\n';
            return kExitData;
        } catch (const SchemaError& e) {
            std::cerr << "folkdsp: " << e.what() << '\n';
            return kExitData;
        } catch (const ShapeError& e) {
            std::cerr << "folkdsp: " << e.what() << '\n';
            return kExitData;
        } catch (const SplitError& e) {
            std::cerr << "folkdsp: " << e.what() << '\n';
            return kExitData;
        } catch (const DecodeError& e) {
            std::cerr << "folkdsp: " << e.what() << '\n';
            return kExitData;
        } catch (const UnsupportedFormat& e) {
            std::cerr << "folkdsp: " << e.what() << '\n';
            return kExitData;
        } catch (const InputTooShort& e) {
            std::cerr << "folkdsp: " << e.what() << '\n';
            return kExitData;
        } catch (const InvalidClustering& e) {
            std::cerr << "folkdsp: " << e.what() << '\n';
            return kExitData;
        } catch (const std::exception& e) {
            std::cerr << "folkdsp: " << e.what() << '\n';
            return kExitRuntime;
        }
    }
    return kExitUsage;
}
