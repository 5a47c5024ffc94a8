#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "jmpgcf/sampler.hpp"
#include "oracles.hpp"

using namespace jmpgcf;

namespace {

InteractionDataset make(std::size_t m, std::size_t n, std::vector<std::vector<Index>> train) {
    InteractionDataset ds;
    ds.num_users = m;
    ds.num_items = n;
    ds.train = std::move(train);
    ds.test.assign(m, {});
    for (const auto& t : ds.train) ds.num_train_interactions += t.size();
    return ds;
}

}  // namespace

TEST(Sampler, ForcedNegative) {
    std::vector<Index> all_but_seven;
    for (Index i = 0; i < 10; ++i)
        if (i != 7) all_but_seven.push_back(i);
    const auto ds = make(1, 10, {all_but_seven});
    std::mt19937_64 rng(1);
    for (const auto& t : sample_batch(ds, 200, rng)) {
        EXPECT_EQ(t.user, 0u);
        EXPECT_EQ(t.neg, 7u);
        EXPECT_NE(t.pos, 7u);
    }
}

TEST(Sampler, TriplesRespectInteractions) {
    const auto ds = oracle::random_dataset(20, 15, 0.3, 2);
    std::mt19937_64 rng(2);
    for (const auto& t : sample_batch(ds, 1000, rng)) {
        EXPECT_TRUE(ds.has_train_item(t.user, t.pos));
        EXPECT_FALSE(ds.has_train_item(t.user, t.neg));
    }
}

TEST(Sampler, SeedFixesSequence) {
    const auto ds = oracle::random_dataset(20, 15, 0.3, 3);
    std::mt19937_64 a(9), b(9);
    EXPECT_EQ(sample_batch(ds, 64, a), sample_batch(ds, 64, b));
}

TEST(Sampler, SkipsEmptyAndSaturatedUsers) {
    const auto ds = make(3, 3, {{}, {0, 1, 2}, {1}});
    std::ostringstream log;
    TripleSampler sampler(ds, &log);
    EXPECT_EQ(sampler.eligible_users(), (std::vector<Index>{2}));
    EXPECT_NE(log.str().find("skipping 1 user"), std::string::npos);
    EXPECT_THROW(TripleSampler(make(1, 2, {{0, 1}}), nullptr), DatasetError);
}

TEST(Sampler, NegativesUniformOverUnobservedItems) {
    // user 0 observed item 0; negatives should be uniform over items 1..4.
    const auto ds = make(1, 5, {{0}});
    TripleSampler sampler(ds, nullptr);
    std::mt19937_64 rng(4);
    std::array<double, 5> counts{};
    const int draws = 100000;
    for (int d = 0; d < draws; ++d) counts[sampler.sample(rng).neg] += 1;
    EXPECT_EQ(counts[0], 0.0);
    double chi2 = 0.0;
    const double expected = draws / 4.0;
    for (int i = 1; i < 5; ++i) chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
    // chi-square with 3 degrees of freedom: P(X > 11.345) = 0.01
    EXPECT_LT(chi2, 11.345);
}
