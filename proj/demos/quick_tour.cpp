// Library-only walk through: synthesize clips, extract features, train a
// forest, score it, then cluster the standardized features.
//
//   quick_tour [clips-per-class] [seed]

#include <cstdlib>
#include <iostream>

#include "folkdsp/folkdsp.hpp"

using namespace folkdsp;

int main(int argc, char** argv) {
    const std::size_t per_class = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 0;

    std::vector<FeatureVector> rows;
    for (std::size_t c = 0; c < kNumGenres; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            auto fv = extract_features(synth::make_clip(c, i, seed));
            fv.label = kGenres[c];
            rows.push_back(std::move(fv));
        }
    const Dataset ds = Dataset::from_vectors(rows);
    std::cout << ds.size() << " clips, " << ds.X.cols() << " features each\n\n";

    const auto split = eval::stratified_split(ds, {}, seed);
    const auto z = standardize(split.train);
    forest::ForestParams params;
    params.seed = seed;
    const auto model = forest::fit_forest(z.data.X, split.train.require_labels(), params);
    const auto truth = split.test.require_labels();
    const auto predicted = model.predict_all(z.params.apply(split.test.X));
    const auto cm = eval::confusion(truth, predicted);
    std::cout << eval::format_report(eval::metrics(cm), cm, "random forest, held-out clips") << '\n';

    const Matrix all = standardize(ds).data.X;
    const auto table = unsup::choose_k(all, 2, 8, {});
    for (const auto& row : table)
        std::cout << "k = " << row.k << "  silhouette " << csv::format_fixed(row.silhouette, 3) << '\n';
    const std::size_t k = unsup::best_k(table);
    const auto km = unsup::kmeans(all, k, {});
    std::cout << '\n' << svg::cluster_caption(k, km.inertia, unsup::silhouette(all, km.assignments)) << '\n';
}
