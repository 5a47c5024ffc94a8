#include <gtest/gtest.h>

#include <sstream>

#include "jmpgcf/dataset.hpp"
#include "oracles.hpp"

using namespace jmpgcf;

TEST(LoadDataset, TranscribesSimpleTrainFile) {
    oracle::TempDir dir;
    const auto train = dir.write("train.txt", "0 1 2\n1 0\n");
    const auto test = dir.write("test.txt", "");
    const auto ds = load_dataset(train, test);
    EXPECT_EQ(ds.num_users, 2u);
    EXPECT_EQ(ds.num_items, 3u);
    EXPECT_EQ(ds.train[0], (std::vector<Index>{1, 2}));
    EXPECT_EQ(ds.train[1], (std::vector<Index>{0}));
    EXPECT_EQ(ds.num_train_interactions, 3u);
    EXPECT_TRUE(ds.test[0].empty());
    EXPECT_TRUE(ds.test[1].empty());
    EXPECT_NO_THROW(ds.validate());
}

TEST(LoadDataset, DimensionsSpanBothFiles) {
    oracle::TempDir dir;
    const auto ds = load_dataset(dir.write("train.txt", "0 1\n2\n"), dir.write("test.txt", "0 7\n"));
    EXPECT_EQ(ds.num_users, 3u);
    EXPECT_EQ(ds.num_items, 8u);
    EXPECT_TRUE(ds.train[1].empty());  // gap user
    EXPECT_TRUE(ds.train[2].empty());  // uid-only line
    EXPECT_EQ(ds.test[0], (std::vector<Index>{7}));
}

TEST(LoadDataset, SortsAndDeduplicatesItems) {
    oracle::TempDir dir;
    const auto ds = load_dataset(dir.write("train.txt", "0 5 3 3 1\r\n\n  \n"), dir.write("test.txt", ""));
    EXPECT_EQ(ds.train[0], (std::vector<Index>{1, 3, 5}));
    EXPECT_EQ(ds.num_train_interactions, 3u);
}

TEST(LoadDataset, MalformedTokenNamesFileAndLine) {
    oracle::TempDir dir;
    const auto train = dir.write("train.txt", "0 1\n1 2x\n");
    try {
        load_dataset(train, dir.write("test.txt", ""));
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("train.txt:2"), std::string::npos);
    }
    EXPECT_THROW(load_dataset(dir.write("neg.txt", "0 -1\n"), dir.write("t.txt", "")), ParseError);
}

TEST(LoadDataset, RejectsDuplicateUserOverlapAndColdStart) {
    oracle::TempDir dir;
    const auto empty = dir.write("empty.txt", "");
    EXPECT_THROW(load_dataset(dir.write("dup.txt", "0 1\n0 2\n"), empty), DatasetError);
    EXPECT_THROW(load_dataset(dir.write("a.txt", "0 1 2\n"), dir.write("b.txt", "0 2\n")), DatasetError);
    EXPECT_THROW(load_dataset(dir.write("c.txt", "0 1\n"), dir.write("d.txt", "1 2\n")), DatasetError);
}

TEST(LoadDataset, MissingFileIsAnError) {
    EXPECT_THROW(load_dataset("/nonexistent/train.txt", "/nonexistent/test.txt"), Error);
}

TEST(LoadDataset, RemappingCompactsSparseIds) {
    oracle::TempDir dir;
    const auto loaded = load_dataset_remapped(dir.write("train.txt", "100 9000 70\n5 70\n"),
                                              dir.write("test.txt", "100 12\n"));
    const auto& ds = loaded.dataset;
    EXPECT_EQ(ds.num_users, 2u);
    EXPECT_EQ(ds.num_items, 3u);
    EXPECT_EQ(loaded.mapping.users, (std::vector<std::uint64_t>{5, 100}));
    EXPECT_EQ(loaded.mapping.items, (std::vector<std::uint64_t>{12, 70, 9000}));
    EXPECT_EQ(ds.train[1], (std::vector<Index>{1, 2}));
    EXPECT_EQ(ds.test[1], (std::vector<Index>{0}));

    std::ostringstream os;
    write_id_mapping(os, loaded.mapping.items);
    EXPECT_EQ(os.str(), "12 0\n70 1\n9000 2\n");
}

TEST(LoadDataset, WriteThenReloadIsIdentity) {
    oracle::TempDir dir;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto ds = oracle::random_dataset(12, 9, 0.3, seed);
        // move a few items to test to exercise both files
        const auto [fit, valid] = split_validation(ds, 0.3, seed);
        std::ostringstream tr, te;
        write_interactions(tr, valid.train);
        write_interactions(te, valid.test);
        auto reloaded = load_dataset(dir.write("tr.txt", tr.str()), dir.write("te.txt", te.str()));
        // the reload infers n from the largest item present
        auto expected = valid;
        expected.num_items = reloaded.num_items;
        EXPECT_EQ(reloaded, expected) << "seed " << seed;
        std::size_t total = 0;
        for (const auto& items : reloaded.train) total += items.size();
        EXPECT_EQ(total, reloaded.num_train_interactions);
    }
}

TEST(SplitValidation, MovesCeilingFractionPerUser) {
    InteractionDataset ds;
    ds.num_users = 3;
    ds.num_items = 12;
    ds.train = {{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {0, 1, 2, 3}, {4}};
    ds.test = {{}, {}, {}};
    ds.num_train_interactions = 15;

    const auto [fit, valid] = split_validation(ds, 0.1, 7);
    EXPECT_EQ(valid.test[0].size(), 1u);
    EXPECT_EQ(fit.train[0].size(), 9u);
    EXPECT_EQ(fit.train[2], (std::vector<Index>{4}));  // never emptied
    EXPECT_TRUE(valid.test[2].empty());
    EXPECT_NO_THROW(fit.validate());
    EXPECT_NO_THROW(valid.validate());

    const auto [fit2, valid2] = split_validation(ds, 0.5, 7);
    EXPECT_EQ(valid2.test[1].size(), 2u);
    std::vector<Index> both = fit2.train[1];
    both.insert(both.end(), valid2.test[1].begin(), valid2.test[1].end());
    std::sort(both.begin(), both.end());
    EXPECT_EQ(both, ds.train[1]);  // partition: union preserved, no overlap
    EXPECT_EQ(fit2.num_train_interactions, 15u - valid2.num_test_interactions());
}

TEST(SplitValidation, DeterministicForSeed) {
    const auto ds = oracle::random_dataset(30, 40, 0.2, 3);
    const auto a = split_validation(ds, 0.2, 11);
    const auto b = split_validation(ds, 0.2, 11);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    EXPECT_THROW(split_validation(ds, 0.0, 1), ConfigError);
    EXPECT_THROW(split_validation(ds, 1.0, 1), ConfigError);
}
