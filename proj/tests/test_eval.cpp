#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "jmpgcf/eval.hpp"
#include "oracles.hpp"

using namespace jmpgcf;

TEST(RankUser, OrdersByScoreThenIndex) {
    const std::vector<double> scores{0, 1, 2, 3};
    EXPECT_EQ(rank_user(scores, {}, 2), (std::vector<Index>{3, 2}));
    const std::vector<double> ties{1, 5, 5, 1};
    EXPECT_EQ(rank_user(ties, {}, 4), (std::vector<Index>{1, 2, 0, 3}));
}

TEST(RankUser, ExcludedItemsNeverAppear) {
    const std::vector<double> scores{0, 9, 2, 3};
    const std::vector<Index> exclude{1};
    const auto top = rank_user(scores, exclude, 3);
    EXPECT_EQ(top, (std::vector<Index>{3, 2, 0}));
    // fewer candidates than K: everything that remains
    const std::vector<Index> most{0, 1, 2};
    EXPECT_EQ(rank_user(scores, most, 5), (std::vector<Index>{3}));
}

TEST(RankUser, MatchesFullSortOracle) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> coarse(0, 9);  // plenty of ties
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> scores(30);
        for (double& s : scores) s = coarse(rng);
        std::vector<Index> exclude;
        for (Index i = 0; i < 30; ++i)
            if (coarse(rng) == 0) exclude.push_back(i);

        std::vector<std::pair<double, Index>> all;
        for (Index i = 0; i < 30; ++i)
            if (!std::binary_search(exclude.begin(), exclude.end(), i)) all.push_back({-scores[i], i});
        std::sort(all.begin(), all.end());
        std::vector<Index> want;
        for (std::size_t p = 0; p < std::min<std::size_t>(5, all.size()); ++p) want.push_back(all[p].second);
        EXPECT_EQ(rank_user(scores, exclude, 5), want);
    }
}

TEST(Metrics, RecallExamples) {
    const std::vector<Index> top{4, 1, 7, 2};
    EXPECT_DOUBLE_EQ(recall_at_k(top, std::vector<Index>{1, 2, 7}), 1.0);
    EXPECT_DOUBLE_EQ(recall_at_k(top, std::vector<Index>{0, 3}), 0.0);
    EXPECT_DOUBLE_EQ(recall_at_k(top, std::vector<Index>{0, 2, 3, 4, 9}), 0.4);
    EXPECT_THROW(recall_at_k(top, std::vector<Index>{}), ConfigError);
}

TEST(Metrics, NdcgExamples) {
    std::vector<Index> top(20);
    std::iota(top.begin(), top.end(), Index{0});
    EXPECT_DOUBLE_EQ(ndcg_at_k(top, std::vector<Index>{0}, 20), 1.0);
    EXPECT_NEAR(ndcg_at_k(top, std::vector<Index>{1}, 20), 1.0 / std::log2(3.0), 1e-15);
    EXPECT_NEAR(ndcg_at_k(top, std::vector<Index>{1}, 20), 0.6309, 1e-4);
    EXPECT_DOUBLE_EQ(ndcg_at_k(top, std::vector<Index>{25, 30}, 20), 0.0);
    // ideal DCG truncated at K
    EXPECT_DOUBLE_EQ(ndcg_at_k(std::vector<Index>{5, 6}, std::vector<Index>{5, 6, 7, 8}, 2), 1.0);
}

TEST(Metrics, NdcgAtMostOneWithEqualityIffIdealPrefix) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Index> items(10);
        std::iota(items.begin(), items.end(), Index{0});
        std::shuffle(items.begin(), items.end(), rng);
        const std::size_t k = 1 + trial % 6;
        std::vector<Index> top(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k));
        std::vector<Index> relevant(items.begin() + static_cast<std::ptrdiff_t>(trial % 3),
                                    items.begin() + static_cast<std::ptrdiff_t>(trial % 3 + 1 + trial % 4));
        std::sort(relevant.begin(), relevant.end());
        const double v = ndcg_at_k(top, relevant, k);
        EXPECT_LE(v, 1.0 + 1e-15);
        bool ideal = true;
        for (std::size_t p = 0; p < std::min(relevant.size(), k); ++p)
            ideal &= std::binary_search(relevant.begin(), relevant.end(), top[p]);
        EXPECT_EQ(v == 1.0, ideal);
    }
}

namespace {

PropagationOutput random_output(const InteractionDataset& ds, std::size_t dim, std::uint64_t seed) {
    const auto cfg = PopularityConfig::with_uniform_weights(0.1, 2);
    const auto p = init_parameters(ds.num_users, ds.num_items, dim, cfg, seed);
    return propagate(p, build_propagation_matrices(ds, cfg), {1, 2});
}

}  // namespace

TEST(Evaluate, PerfectScorerGetsOne) {
    InteractionDataset ds;
    ds.num_users = 1;
    ds.num_items = 4;
    ds.train = {{0}};
    ds.test = {{2, 3}};
    ds.num_train_interactions = 1;
    // one granularity, embed_dim 1, user row 1, items scored by their row value
    PropagationOutput out{1, 4, {1, 2}, {}};
    DenseMatrix e(5, 1);
    e(0, 0) = 1.0;
    e(1, 0) = 100.0;  // excluded training item
    e(2, 0) = 0.0;
    e(3, 0) = 5.0;
    e(4, 0) = 4.0;
    out.chain.push_back({e, e});
    const std::vector<double> w{1.0};
    const auto rep = evaluate(out, ds, 2, w);
    EXPECT_DOUBLE_EQ(rep.recall, 1.0);
    EXPECT_DOUBLE_EQ(rep.ndcg, 1.0);
    EXPECT_EQ(rep.num_users_evaluated, 1u);
    const auto replay = evaluate_training_replay(out, ds, 1, w);
    EXPECT_DOUBLE_EQ(replay.recall, 1.0);
}

TEST(Evaluate, SkipsUsersWithoutTestItemsAndIsDeterministic) {
    auto ds = fixtures::uniform_lists(30, 40, 4, 3, 5);
    ds.test[3].clear();
    ds.test[7].clear();
    const auto out = random_output(ds, 4, 5);
    const std::vector<double> w{1, 1, 1};
    const auto a = evaluate(out, ds, 10, w);
    const auto b = evaluate(out, ds, 10, w);
    EXPECT_EQ(a.num_users_evaluated, 28u);
    EXPECT_EQ(a.recall, b.recall);
    EXPECT_EQ(a.ndcg, b.ndcg);
    EXPECT_GE(a.recall, 0.0);
    EXPECT_LE(a.recall, 1.0);

    for (auto& t : ds.test) t.clear();
    EXPECT_THROW(evaluate(out, ds, 10, w), Error);
}

TEST(Evaluate, CutoffSweepMatchesSingleCutoffRuns) {
    const auto ds = fixtures::uniform_lists(20, 50, 5, 5, 6);
    const auto out = random_output(ds, 3, 6);
    const std::vector<double> w{1, 1, 1};
    const std::vector<std::size_t> ks{5, 10, 15, 20, 25, 30, 35, 40};
    const auto sweep = evaluate_lists(out, ds.test, ds.train, ks, w);
    ASSERT_EQ(sweep.size(), ks.size());
    for (std::size_t c = 0; c < ks.size(); ++c) {
        const auto single = evaluate(out, ds, ks[c], w);
        EXPECT_EQ(sweep[c].recall, single.recall);
        EXPECT_EQ(sweep[c].ndcg, single.ndcg);
        if (c > 0) {
            EXPECT_GE(sweep[c].recall, sweep[c - 1].recall);
        }
    }
}

TEST(Evaluate, RankingInvariantUnderIncreasingTransform) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> s(25), t(25);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = noise(rng);
            t[i] = std::exp(3.0 * s[i]) + 2.0;
        }
        const std::vector<Index> exclude{2, 9};
        const std::vector<Index> relevant{1, 4, 11, 20};
        const auto a = rank_user(s, exclude, 5);
        const auto b = rank_user(t, exclude, 5);
        EXPECT_EQ(a, b);
        EXPECT_EQ(recall_at_k(a, relevant), recall_at_k(b, relevant));
        EXPECT_EQ(ndcg_at_k(a, relevant, 5), ndcg_at_k(b, relevant, 5));
    }
}

TEST(Evaluate, RandomEmbeddingsHitHypergeometricExpectation) {
    // 100 users x 1000 items, 5 train + 5 test items each. Test items are a uniform
    // subset of the 995 candidates, so E[recall@20] = 20 / 995.
    const double expected = 20.0 / 995.0;
    std::vector<double> per_seed;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const auto ds = fixtures::uniform_lists(100, 1000, 5, 5, 1000 + seed);
        const auto out = random_output(ds, 8, seed);
        const std::vector<double> w{1, 1, 1};
        per_seed.push_back(evaluate(out, ds, 20, w).recall);
    }
    const double mean = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / per_seed.size();
    double var = 0.0;
    for (double r : per_seed) var += (r - mean) * (r - mean);
    var /= per_seed.size() - 1;
    const double stderr_mean = std::sqrt(var / per_seed.size());
    EXPECT_LE(std::abs(mean - expected), 3.0 * stderr_mean) << "mean " << mean << " expected " << expected;
}
