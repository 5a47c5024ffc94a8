// Train on the toy two-community dataset and print a few recommendations.
//
//   ./quickstart [data-dir]

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "jmpgcf/jmpgcf.hpp"

#ifndef JMPGCF_TOY_DIR
#define JMPGCF_TOY_DIR "samples/toy"
#endif

int main(int argc, char** argv) {
    using namespace jmpgcf;
    const std::filesystem::path dir = argc > 1 ? argv[1] : JMPGCF_TOY_DIR;

    try {
        const auto ds = load_dataset(dir / "train.txt", dir / "test.txt");
        std::printf("%zu users, %zu items, %zu training interactions\n", ds.num_users, ds.num_items,
                    ds.num_train_interactions);

        LayerSelectionConfig sel;
        sel.alpha = 0.3;
        const auto selection = select_layers(ds, sel);
        std::cout << format_coverage(selection.coverage);
        const SelectedLayers layers = selection.layers;
        std::printf("layers: odd=%d even=%d\n", layers.odd, layers.even);

        const auto popularity = PopularityConfig::with_uniform_weights(0.1, 2);
        const auto mats = build_propagation_matrices(ds, popularity);
        auto params = init_parameters(ds.num_users, ds.num_items, 8, popularity, 1);

        TrainConfig cfg;
        cfg.batch_size = 32;
        cfg.seed = 1;
        const auto log = train(ds, mats, params, PhaseSchedule::uniform(2, 60), cfg, layers);
        std::printf("trained %zu epochs, final loss %.4f\n", log.size(), log.back().loss);

        const auto out = propagate(params, mats, layers);
        const auto& weights = params.popularity.granularity_weights;
        const auto report = evaluate(out, ds, 5, weights);
        std::printf("Recall@5 %.4f  NDCG@5 %.4f\n", report.recall, report.ndcg);

        for (Index u : {Index{0}, static_cast<Index>(ds.num_users - 1)}) {
            const auto scores = score_all_items(out, u, weights);
            std::printf("user %u:", u);
            for (Index i : rank_user(scores, ds.train[u], 3)) std::printf(" %u (%.3f)", i, scores[i]);
            std::printf("\n");
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
