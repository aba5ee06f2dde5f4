// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Criteria 6-8 drive the folkdsp executable end to end in a scratch directory.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "folkdsp/folkdsp.hpp"
#include "test_support.hpp"

#ifndef FOLKDSP_CLI_PATH
#error "FOLKDSP_CLI_PATH must point at the folkdsp executable"
#endif

using namespace folkdsp;
namespace fs = std::filesystem;

namespace {

class Checker {
public:
    void expect(bool ok, const std::string& what) {
        ++checks_;
        if (!ok && failures_.size() < 8) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    bool ok() const { return failed_ == 0; }
    std::size_t checks() const { return checks_; }
    std::string summary() const {
        std::string s = std::to_string(failed_) + " of " + std::to_string(checks_) + " checks failed";
        for (const auto& f : failures_) s += "\n      - " + f;
        return s;
    }

private:
    std::size_t checks_ = 0, failed_ = 0;
    std::vector<std::string> failures_;
};

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
}

// ------------------------------------------------------------------ oracles

/// Reflect-padded, Hann-windowed frame t, spectrum by the direct DFT sum with a
/// precomputed twiddle table.
std::vector<double> oracle_stft_frame(const std::vector<double>& x, std::size_t n_fft, std::size_t hop, std::size_t t,
                                      const std::vector<double>& cos_t, const std::vector<double>& sin_t) {
    const auto pad = static_cast<std::ptrdiff_t>(n_fft / 2);
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    std::vector<double> w(n_fft);
    for (std::size_t i = 0; i < n_fft; ++i) {
        std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * hop + i) - pad;
        if (src < 0) src = -src;
        if (src >= n) src = 2 * n - 2 - src;
        const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_fft));
        w[i] = hann * x[static_cast<std::size_t>(src)];
    }
    std::vector<double> mag(n_fft / 2 + 1);
    for (std::size_t k = 0; k <= n_fft / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n_fft; ++i) {
            const std::size_t m = (k * i) % n_fft;
            re += w[i] * cos_t[m];
            im -= w[i] * sin_t[m];
        }
        mag[k] = std::hypot(re, im);
    }
    return mag;
}

/// Mean cross-entropy of a ReLU network written out with plain loops.
double oracle_loss(const mlp::MLPModel& m, const Matrix& X, const std::vector<Genre>& y) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        std::vector<double> h(X.row(r).data(), X.row(r).data() + X.cols());
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            const auto& L = m.layers[l];
            std::vector<double> z(static_cast<std::size_t>(L.weights.cols()));
            for (Eigen::Index k = 0; k < L.weights.cols(); ++k) {
                double s = L.biases(k);
                for (Eigen::Index i = 0; i < L.weights.rows(); ++i) s += h[static_cast<std::size_t>(i)] * L.weights(i, k);
                z[static_cast<std::size_t>(k)] = (l + 1 < m.layers.size()) ? std::max(0.0, s) : s;
            }
            h = std::move(z);
        }
        const double peak = *std::max_element(h.begin(), h.end());
        double sum = 0.0;
        for (double v : h) sum += std::exp(v - peak);
        total += -(h[index_of(y[static_cast<std::size_t>(r)])] - peak - std::log(sum));
    }
    return total / static_cast<double>(X.rows());
}

Dataset synthetic_features(std::size_t per_class, std::uint64_t seed) {
    std::vector<FeatureVector> rows;
    for (std::size_t c = 0; c < kNumGenres; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            const auto clip = synth::make_clip(c, i, seed);
            auto fv = extract_features(clip);
            fv.label = kGenres[c];
            rows.push_back(std::move(fv));
        }
    return Dataset::from_vectors(rows);
}

// ------------------------------------------------------------------ criteria 1-5

Checker dsp_oracles() {
    Checker ck;
    const std::size_t n_fft = kDefaultNfft, hop = kDefaultHop;
    const auto clip = testing::noise_clip(hop * 110, 2024, 0.5);
    const auto spec = stft(clip, n_fft, hop);
    ck.expect(spec.n_frames() >= 100, "at least 100 frames (got " + std::to_string(spec.n_frames()) + ")");

    std::vector<double> cos_t(n_fft), sin_t(n_fft);
    for (std::size_t m = 0; m < n_fft; ++m) {
        cos_t[m] = std::cos(2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n_fft));
        sin_t[m] = std::sin(2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n_fft));
    }
    double worst_stft = 0.0;
    for (std::size_t t = 0; t < spec.n_frames(); ++t) {
        const auto ref = oracle_stft_frame(clip.samples, n_fft, hop, t, cos_t, sin_t);
        const double peak = *std::max_element(ref.begin(), ref.end());
        for (std::size_t k = 0; k < ref.size(); ++k) {
            const double got = spec.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
            // Relative error, with a floor far below any bin that carries energy.
            worst_stft = std::max(worst_stft, std::abs(got - ref[k]) / std::max(std::abs(ref[k]), 1e-9 * peak));
        }
    }
    ck.expect(worst_stft <= 1e-6, "STFT vs naive DFT relative error " + fmt(worst_stft));

    const auto fb = mel_filterbank(kDefaultMels, n_fft, clip.sample_rate);
    const Matrix coeffs = mfcc(spec, fb, kNumMfcc);
    double worst_mfcc = 0.0;
    for (std::size_t t = 0; t < spec.n_frames(); ++t) {
        std::vector<double> logmel(kDefaultMels);
        for (std::size_t m = 0; m < kDefaultMels; ++m) {
            double e = 0.0;
            for (std::size_t k = 0; k < spec.n_bins(); ++k)
                e += fb.weights(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) *
                     spec.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
            logmel[m] = std::log(e + kLogFloor);
        }
        const auto ref = testing::naive_dct2(logmel, kNumMfcc);
        for (std::size_t k = 0; k < kNumMfcc; ++k)
            worst_mfcc = std::max(worst_mfcc, std::abs(coeffs(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) - ref[k]));
    }
    ck.expect(worst_mfcc <= 1e-8, "MFCC vs DCT-II definition abs error " + fmt(worst_mfcc));

    const auto centroid = spectral_centroid(spec);
    const auto rolloff = spectral_rolloff(spec, 0.85);
    const auto bandwidth = spectral_bandwidth(spec);
    double worst_desc = 0.0;
    for (std::size_t t = 0; t < spec.n_frames(); ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        double sum = 0.0, weighted = 0.0;
        for (std::size_t k = 0; k < spec.n_bins(); ++k) {
            const double f = static_cast<double>(k) * clip.sample_rate / static_cast<double>(n_fft);
            sum += spec.magnitudes(ti, static_cast<Eigen::Index>(k));
            weighted += f * spec.magnitudes(ti, static_cast<Eigen::Index>(k));
        }
        const double c = weighted / sum;
        double spread = 0.0, cum = 0.0, roll = -1.0;
        for (std::size_t k = 0; k < spec.n_bins(); ++k) {
            const double f = static_cast<double>(k) * clip.sample_rate / static_cast<double>(n_fft);
            const double m = spec.magnitudes(ti, static_cast<Eigen::Index>(k));
            spread += m * (f - c) * (f - c);
            cum += m;
            if (roll < 0.0 && cum >= 0.85 * sum) roll = f;
        }
        const double bw = std::sqrt(spread / sum);
        worst_desc = std::max({worst_desc, std::abs(centroid[t] - c) / c, std::abs(rolloff[t] - roll) / roll,
                               std::abs(bandwidth[t] - bw) / bw});
    }
    ck.expect(worst_desc <= 1e-6, "centroid/rolloff/bandwidth vs direct formulas relative error " + fmt(worst_desc));
    return ck;
}

Checker feature_contract() {
    Checker ck;
    std::vector<FeatureVector> rows;
    for (std::size_t c = 0; c < kNumGenres; ++c)
        for (std::size_t i = 0; i < 2; ++i) {
            const auto clip = synth::make_clip(c, i, 77);
            auto fv = extract_features(clip);
            ck.expect(fv.values.size() == 26, "26 values");
            for (double v : fv.values) ck.expect(std::isfinite(v), clip.source_id + " has a non-finite feature");
            fv.label = kGenres[c];
            rows.push_back(std::move(fv));
        }
    {
        auto noise = testing::noise_clip(3 * kAnalysisRate, 5);
        const auto fv = extract_features(noise);
        for (double v : fv.values) ck.expect(std::isfinite(v), "noise clip has a non-finite feature");
    }

    // Amplitude scaling: only rms (times c) and mfcc_1 (plus log(c) * sqrt(n_mels)) move.
    for (std::size_t c = 0; c < kNumGenres; c += 2) {
        const auto clip = synth::make_clip(c, 3, 78);
        const auto base = extract_features(clip);
        for (double scale : {0.25, 3.0}) {
            AudioClip scaled = clip;
            for (auto& s : scaled.samples) s *= scale;
            const auto fv = extract_features(scaled);
            for (std::size_t j = 0; j < kNumFeatures; ++j) {
                const double a = base.values[j], b = fv.values[j];
                const std::string name(kFeatureNames[j]);
                if (j == feature::kRms) {
                    ck.expect(std::abs(b - scale * a) <= 1e-6 * scale * a, name + " scales by c");
                } else if (j == feature::kMfccFirst) {
                    const double shift = std::log(scale) * std::sqrt(static_cast<double>(kDefaultMels));
                    ck.expect(std::abs((b - a) - shift) <= 1e-6 * std::max(1.0, std::abs(a)), name + " shifts by a constant");
                } else if (j > feature::kMfccFirst) {
                    ck.expect(std::abs(b - a) <= 1e-6 * std::max(1.0, std::abs(a)), name + " unchanged under scaling");
                } else {
                    ck.expect(std::abs(b - a) <= 1e-6 * std::abs(a), name + " unchanged under scaling");
                }
            }
        }
    }

    const Dataset ds = Dataset::from_vectors(rows);
    std::stringstream buf;
    write_features_csv(buf, ds);
    const Dataset back = read_features_csv(buf);
    ck.expect(back.size() == ds.size(), "CSV keeps the row count");
    ck.expect(back.song_ids == ds.song_ids && back.labels == ds.labels, "CSV keeps ids and labels");
    if (back.size() == ds.size())
        ck.expect((back.X - ds.X).cwiseAbs().maxCoeff() <= 1e-9, "CSV round trip within 1e-9");
    return ck;
}

Checker gradient_check() {
    Checker ck;
    auto m = mlp::init(31, {26, 8, 8, 6});
    Rng rng(32);
    for (auto& l : m.layers)
        for (Eigen::Index i = 0; i < l.biases.size(); ++i) l.biases(i) = rng.uniform(-0.1, 0.1);
    Matrix X(16, 26);
    std::vector<Genre> y;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.normal();
        y.push_back(genre_at(rng.below(kNumGenres)));
    }
    const auto g = mlp::loss_and_gradient(m, X, y);
    ck.expect(std::abs(g.loss - oracle_loss(m, X, y)) <= 1e-12 * std::max(1.0, g.loss), "loss matches the loop oracle");

    const double h = 1e-5;
    double worst = 0.0;
    std::size_t probed = 0;
    auto probe = [&](double& param, double analytic) {
        const double keep = param;
        param = keep + h;
        const double up = oracle_loss(m, X, y);
        param = keep - h;
        const double down = oracle_loss(m, X, y);
        param = keep;
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
        ++probed;
    };
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto& L = m.layers[l];
        for (Eigen::Index i = 0; i < L.weights.rows(); ++i)
            for (Eigen::Index k = 0; k < L.weights.cols(); ++k) probe(L.weights(i, k), g.layers[l].weights(i, k));
        for (Eigen::Index k = 0; k < L.biases.size(); ++k) probe(L.biases(k), g.layers[l].biases(k));
    }
    ck.expect(probed == m.parameter_count(), "every parameter probed (" + std::to_string(probed) + ")");
    ck.expect(worst < 1e-4, "worst relative gradient error " + fmt(worst));
    return ck;
}

struct Blobs {
    Matrix X;
    std::vector<Genre> y;
};

Blobs six_blobs(std::size_t per_class, double spacing, std::uint64_t seed) {
    std::vector<int> labels;
    Blobs b;
    b.X = testing::gaussian_blobs(testing::six_centers(26, spacing), per_class, 1.0, seed, &labels);
    for (int l : labels) b.y.push_back(genre_at(static_cast<std::size_t>(l)));
    return b;
}

double share_right(const std::vector<Genre>& pred, const std::vector<Genre>& y) {
    std::size_t right = 0;
    for (std::size_t i = 0; i < y.size(); ++i) right += pred[i] == y[i];
    return static_cast<double>(right) / static_cast<double>(y.size());
}

Checker forest_sanity() {
    Checker ck;
    {
        Rng data(3);
        Matrix X(150, 26);
        std::vector<Genre> y;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = data.normal();
            y.push_back(genre_at(data.below(kNumGenres)));
        }
        Rng rng(4);
        const auto tree = forest::fit_tree(X, y, {5, std::nullopt, 1}, rng);
        std::size_t right = 0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const RowVector r = X.row(i);
            const auto& counts = tree.leaf_counts({r.data(), static_cast<std::size_t>(r.size())});
            right += std::max_element(counts.begin(), counts.end()) - counts.begin() ==
                     static_cast<std::ptrdiff_t>(index_of(y[static_cast<std::size_t>(i)]));
        }
        const double acc = static_cast<double>(right) / static_cast<double>(X.rows());
        ck.expect(acc >= 0.99, "single tree training accuracy " + fmt(acc));
    }
    {
        const auto train = six_blobs(30, 5.0, 21), test = six_blobs(30, 5.0, 22);
        // Nearest class mean as the reference separability check.
        Matrix means = Matrix::Zero(kNumGenres, 26);
        for (std::size_t i = 0; i < train.y.size(); ++i)
            means.row(static_cast<Eigen::Index>(index_of(train.y[i]))) += train.X.row(static_cast<Eigen::Index>(i)) / 30.0;
        std::vector<Genre> nc;
        for (Eigen::Index i = 0; i < test.X.rows(); ++i) {
            Eigen::Index best = 0;
            (means.rowwise() - test.X.row(i)).rowwise().squaredNorm().minCoeff(&best);
            nc.push_back(genre_at(static_cast<std::size_t>(best)));
        }
        ck.expect(share_right(nc, test.y) >= 0.95, "nearest-centroid reference accuracy " + fmt(share_right(nc, test.y)));
        forest::ForestParams p;
        const auto model = forest::fit_forest(train.X, train.y, p);
        const double acc = share_right(model.predict_all(test.X), test.y);
        ck.expect(acc >= 0.95, "forest held-out accuracy " + fmt(acc));
    }
    {
        const auto b = six_blobs(100, 5.0, 0);
        const std::vector<std::size_t> counts{1, 2, 4, 8, 16, 32, 64, 128, 256};
        const auto table = forest::complexity_sweep(b.X, b.y, counts, 0.25, {});
        ck.expect(table.size() == counts.size(), "one sweep row per count");
        for (std::size_t i = 1; i < table.size(); ++i)
            ck.expect(table[i].train_error <= table[i - 1].train_error + 0.02,
                      "training error rises from " + std::to_string(counts[i - 1]) + " to " + std::to_string(counts[i]) +
                          " trees: " + fmt(table[i - 1].train_error) + " -> " + fmt(table[i].train_error));
    }
    return ck;
}

Checker unsupervised_suite() {
    Checker ck;
    std::vector<int> truth;
    const Matrix tight = testing::gaussian_blobs(testing::six_centers(26, 20.0 / std::sqrt(2.0)), 20, 0.2, 8, &truth);
    const Matrix Z = standardize(synthetic_features(30, 0)).data.X;

    for (const Matrix* X : {&tight, &Z}) {
        for (std::size_t k : {3, 6, 9}) {
            unsup::KMeansConfig cfg;
            cfg.seed = k;
            const auto r = unsup::kmeans(*X, k, cfg);
            for (std::size_t i = 1; i < r.inertia_trace.size(); ++i)
                ck.expect(r.inertia_trace[i] <= r.inertia_trace[i - 1] * (1.0 + 1e-12),
                          "Lloyd inertia rose at iteration " + std::to_string(i) + " (k = " + std::to_string(k) + ")");
            const double sc = unsup::silhouette(*X, r.assignments);
            ck.expect(sc >= -1.0 && sc <= 1.0, "silhouette outside [-1, 1]: " + fmt(sc));
        }
    }
    const auto six = unsup::kmeans(tight, 6, {});
    const double sc6 = unsup::silhouette(tight, six.assignments);
    ck.expect(sc6 > 0.9, "tight six-blob silhouette " + fmt(sc6));
    const auto table = unsup::choose_k(tight, 2, 10, {});
    ck.expect(unsup::best_k(table) == 6, "choose_k picked " + std::to_string(unsup::best_k(table)));

    const auto pca = unsup::pca_fit(Z, 26);
    const Matrix gram = pca.components * pca.components.transpose();
    const double ortho = (gram - Matrix::Identity(26, 26)).cwiseAbs().maxCoeff();
    ck.expect(ortho <= 1e-8, "PCA components orthonormal to " + fmt(ortho));
    const auto curve = unsup::cumulative_variance(Z);
    ck.expect(curve.size() == 26, "26-entry cumulative variance curve");
    for (std::size_t i = 1; i < curve.size(); ++i) ck.expect(curve[i] >= curve[i - 1], "cumulative variance decreases");
    ck.expect(std::abs(curve.back() - 1.0) <= 1e-12, "cumulative variance ends at " + fmt(curve.back()));

    unsup::TsneConfig tc;  // defaults: perplexity 30, learning rate 200, 1000 iterations
    const auto cond = unsup::conditional_affinities(Z, tc.perplexity);
    double worst_h = 0.0;
    for (Eigen::Index i = 0; i < cond.P.rows(); ++i) {
        double h = 0.0;
        for (Eigen::Index j = 0; j < cond.P.cols(); ++j)
            if (cond.P(i, j) > 0.0) h -= cond.P(i, j) * std::log(cond.P(i, j));
        worst_h = std::max(worst_h, std::abs(h - std::log(tc.perplexity)));
    }
    ck.expect(worst_h <= 1e-3, "perplexity calibration entropy error " + fmt(worst_h));
    const auto emb = unsup::tsne(Z, tc);
    for (std::size_t i = 1; i < emb.kl_trace.size(); ++i)
        if (emb.kl_trace[i - 1].iteration > tc.exaggeration_iters)
            ck.expect(emb.kl_trace[i].kl <= emb.kl_trace[i - 1].kl + 1e-3,
                      "KL rose after iteration " + std::to_string(emb.kl_trace[i - 1].iteration) + ": " +
                          fmt(emb.kl_trace[i - 1].kl) + " -> " + fmt(emb.kl_trace[i].kl));
    return ck;
}

// ------------------------------------------------------------------ CLI pipeline

struct Shell {
    fs::path dir;

    int run(const std::string& args, const std::string& stdout_file = "/dev/null") const {
        const std::string cmd = "cd '" + dir.string() + "' && '" FOLKDSP_CLI_PATH "' -q " + args + " > " + stdout_file +
                                " 2> stderr.log";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> words(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

const std::vector<std::string> kPipelineCsv = {
    "features.csv",          "rf/test_predictions.csv",   "mlp/test_predictions.csv", "mlp/train_report.csv",
    "sweep/estimator_sweep.csv", "sweep/choose_k.csv",    "sweep/cumulative_variance.csv",
    "clusters/clusters_tsne.csv"};

/// synth -> ingest -> train rf -> train mlp -> sweep -> cluster tsne in `dir`.
Checker run_pipeline(const Shell& sh) {
    Checker ck;
    fs::remove_all(sh.dir);
    fs::create_directories(sh.dir);

    ck.expect(sh.run("synth --out corpus --per-class 30 --seed 0") == 0, "synth exits 0");
    std::size_t wavs = 0;
    for (const auto& e : fs::recursive_directory_iterator(sh.dir / "corpus")) wavs += e.path().extension() == ".wav";
    ck.expect(wavs == 180, "synth wrote " + std::to_string(wavs) + " WAV files");

    ck.expect(sh.run("ingest corpus --out features.csv") == 0, "ingest exits 0");
    ck.expect(lines_of(slurp(sh.dir / "features.csv")).size() == 181, "features.csv has 180 rows");

    for (const std::string model : {"rf", "mlp"}) {
        ck.expect(sh.run("train " + model + " --features features.csv --out-dir " + model + " --seed 0") == 0,
                  "train " + model + " exits 0");
        try {
            const auto report = nlohmann::json::parse(slurp(sh.dir / model / "report.json"));
            const double acc = report.at("test").at("metrics").at("accuracy").get<double>();
            ck.expect(acc >= 0.90, model + " test accuracy " + fmt(acc));
        } catch (const std::exception& e) {
            ck.expect(false, model + " report.json unreadable: " + e.what());
        }
    }

    ck.expect(sh.run("sweep --features features.csv --out-dir sweep --seed 0") == 0, "sweep exits 0");
    const auto cv = lines_of(slurp(sh.dir / "sweep/cumulative_variance.csv"));
    ck.expect(cv.size() == 27, "cumulative_variance.csv has " + std::to_string(cv.size() ? cv.size() - 1 : 0) + " rows");
    if (cv.size() == 27) {
        const auto last = csv::parse_double(cv.back().substr(cv.back().find(',') + 1));
        ck.expect(last && std::abs(*last - 1.0) <= 1e-9, "cumulative variance ends at 1.0");
    }

    ck.expect(sh.run("cluster --features features.csv --mode tsne --k 6 --out-dir clusters --seed 0") == 0,
              "cluster --mode tsne exits 0");
    const std::string svg = slurp(sh.dir / "clusters/clusters_tsne.svg");
    const std::regex caption(R"(Clusters = 6, inertia = \d+, sc = -?\d\.\d{3})");
    ck.expect(std::regex_search(svg, caption), "SVG carries a 'Clusters = 6, inertia = N, sc = X.XXX' caption");
    return ck;
}

Checker determinism(const Shell& first, const Shell& second) {
    Checker ck = run_pipeline(second);
    ck.expect(ck.ok(), "second pipeline run completed");
    for (const auto& rel : kPipelineCsv) {
        const auto a = slurp(first.dir / rel), b = slurp(second.dir / rel);
        ck.expect(!a.empty() && a == b, rel + " is byte-identical across runs");
    }
    for (const std::string rel : {"rf/report.json", "rf/report.txt", "mlp/report.json", "mlp/report.txt",
                                  "rf/model.json", "mlp/model.json", "clusters/clusters_tsne.svg"})
        ck.expect(slurp(first.dir / rel) == slurp(second.dir / rel), rel + " is identical across runs");
    for (const auto& e : fs::recursive_directory_iterator(first.dir / "corpus"))
        if (e.path().extension() == ".wav")
            ck.expect(slurp(e.path()) == slurp(second.dir / fs::relative(e.path(), first.dir)),
                      fs::relative(e.path(), first.dir).string() + " is byte-identical");
    return ck;
}

Checker report_format(const Shell& sh) {
    Checker ck;
    for (const std::string model : {"rf", "mlp"}) {
        const std::string out = "eval_" + model + ".txt";
        ck.expect(sh.run("eval --model " + model + "/model.json --features features.csv --out-dir eval_" + model, out) == 0,
                  "eval of the " + model + " model on its own training CSV exits 0");
        const auto lines = lines_of(slurp(sh.dir / out));
        std::size_t at = 0;
        auto find = [&](const std::function<bool(const std::vector<std::string>&)>& pred) {
            for (; at < lines.size(); ++at)
                if (pred(words(lines[at]))) return true;
            return false;
        };
        auto number = [](const std::string& s) { return csv::parse_double(s).has_value(); };

        ck.expect(find([&](const auto& w) { return w.size() == 2 && w[0] == "accuracy" && number(w[1]); }), "accuracy line");
        ck.expect(find([&](const auto& w) { return w.size() == 2 && w[0] == "error" && number(w[1]); }), "error line");
        ck.expect(find([](const auto& w) {
                      return w == std::vector<std::string>{"genre", "precision", "recall", "f1-score"};
                  }),
                  "per-class header lists exactly precision, recall, f1-score");
        for (auto g : kGenreNames) {
            ++at;
            const auto w = at < lines.size() ? words(lines[at]) : std::vector<std::string>{};
            ck.expect(w.size() == 4 && w[0] == g && number(w[1]) && number(w[2]) && number(w[3]),
                      "metrics row for " + std::string(g));
        }
        ++at;
        const auto macro = at < lines.size() ? words(lines[at]) : std::vector<std::string>{};
        ck.expect(macro.size() == 5 && macro[0] == "macro" && macro[1] == "avg", "macro average row");

        ck.expect(find([](const auto& w) { return !w.empty() && w[0] == "confusion"; }), "confusion matrix title");
        ++at;
        ck.expect(at < lines.size() && words(lines[at]) == std::vector<std::string>(kGenreNames.begin(), kGenreNames.end()),
                  "confusion header in fixed genre order");
        std::uint64_t total = 0;
        for (auto g : kGenreNames) {
            ++at;
            const auto w = at < lines.size() ? words(lines[at]) : std::vector<std::string>{};
            bool ok = w.size() == 7 && w[0] == g;
            for (std::size_t c = 1; ok && c < 7; ++c) {
                const auto v = csv::parse_int(w[c]);
                ok = v && *v >= 0;
                if (ok) total += static_cast<std::uint64_t>(*v);
            }
            ck.expect(ok, "confusion row for " + std::string(g));
        }
        ck.expect(total == 180, "confusion counts sum to 180");
        for (const auto& l : lines)
            for (const char* extra : {"support", "auc", "roc", "kappa"})
                ck.expect(l.find(extra) == std::string::npos, std::string("report mentions '") + extra + "'");

        try {
            const auto j = nlohmann::json::parse(slurp(sh.dir / ("eval_" + model) / "eval_report.json"));
            const auto& m = j.at("metrics");
            std::set<std::string> keys;
            for (const auto& [k, v] : m.items())
                if (v.is_number_float()) keys.insert(k);
            ck.expect(keys == std::set<std::string>{"accuracy", "error"}, "JSON top-level metrics are accuracy and error");
            ck.expect(m.at("per_class").size() == 6, "JSON has six per-class entries");
            for (std::size_t c = 0; c < m.at("per_class").size(); ++c) {
                std::set<std::string> pk;
                for (const auto& [k, v] : m.at("per_class")[c].items()) pk.insert(k);
                ck.expect(pk == std::set<std::string>{"genre", "precision", "recall", "f1"}, "JSON per-class keys");
                ck.expect(m.at("per_class")[c].at("genre") == std::string(kGenreNames[c]), "JSON per-class order");
            }
            std::set<std::string> mk;
            for (const auto& [k, v] : m.at("macro_avg").items()) mk.insert(k);
            ck.expect(mk == std::set<std::string>{"precision", "recall", "f1"}, "JSON macro average keys");
            const auto& cm = j.at("confusion_matrix");
            ck.expect(cm.at("class_order") == nlohmann::json(std::vector<std::string>(kGenreNames.begin(), kGenreNames.end())),
                      "JSON confusion class order");
            ck.expect(cm.at("counts").size() == 6 && cm.at("counts")[0].size() == 6, "JSON confusion is 6x6");
        } catch (const std::exception& e) {
            ck.expect(false, std::string("eval_report.json unreadable: ") + e.what());
        }
    }
    return ck;
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    const fs::path scratch = fs::temp_directory_path() / ("folkdsp-acceptance-" + std::to_string(::getpid()));
    const Shell first{scratch / "run1"}, second{scratch / "run2"};

    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Checker()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "DSP oracle suite", 30, dsp_oracles},
        {2, "feature contract", 30, feature_contract},
        {3, "MLP gradient check", 60, gradient_check},
        {4, "forest sanity", 120, forest_sanity},
        {5, "unsupervised suite", 180, unsupervised_suite},
        {6, "end-to-end pipeline", 600, [&] { return run_pipeline(first); }},
        {7, "determinism", 600, [&] { return determinism(first, second); }},
        {8, "report format", 60, [&] { return report_format(first); }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = clock::now();
        Checker ck;
        try {
            ck = c.run();
        } catch (const std::exception& e) {
            ck.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        ck.expect(secs < c.budget_s, "runtime " + fmt(secs) + " s over the " + fmt(c.budget_s) + " s budget");
        std::printf("%s  criterion %d: %s (%zu checks, %.1f s, budget %.0f s)\n", ck.ok() ? "PASS" : "FAIL", c.id, c.name,
                    ck.checks(), secs, c.budget_s);
        if (!ck.ok()) {
            std::printf("      %s\n", ck.summary().c_str());
            ++failed;
        }
        std::fflush(stdout);
    }
    if (failed == 0) fs::remove_all(scratch);
    else std::printf("scratch directory kept at %s\n", scratch.string().c_str());
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
