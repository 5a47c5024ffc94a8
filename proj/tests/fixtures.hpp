#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "jmpgcf/dataset.hpp"

namespace fixtures {

/// Users and items split into `blocks` equal groups; each user interacts only
/// with items of its own block. A user draws round(density * block_items) items
/// without replacement, item r of the block weighted by 1/(r+1)^skew, and
/// `held_out` of them go to the test list.
inline jmpgcf::InteractionDataset planted_blocks(std::size_t num_users, std::size_t num_items,
                                                 std::size_t blocks, double density,
                                                 std::size_t held_out, double skew,
                                                 std::uint64_t seed) {
    using jmpgcf::Index;
    std::mt19937_64 rng(seed);
    const std::size_t users_per_block = num_users / blocks;
    const std::size_t items_per_block = num_items / blocks;
    const auto per_user = static_cast<std::size_t>(std::lround(density * static_cast<double>(items_per_block)));

    jmpgcf::InteractionDataset ds;
    ds.num_users = num_users;
    ds.num_items = num_items;
    ds.train.resize(num_users);
    ds.test.resize(num_users);
    for (std::size_t u = 0; u < num_users; ++u) {
        const std::size_t block = std::min(u / users_per_block, blocks - 1);
        std::vector<double> weight(items_per_block);
        for (std::size_t r = 0; r < items_per_block; ++r) weight[r] = std::pow(static_cast<double>(r + 1), -skew);
        std::vector<Index> chosen;
        for (std::size_t d = 0; d < per_user; ++d) {
            std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
            const std::size_t r = pick(rng);
            weight[r] = 0.0;
            chosen.push_back(static_cast<Index>(block * items_per_block + r));
        }
        std::shuffle(chosen.begin(), chosen.end(), rng);
        const std::size_t test_count = std::min(held_out, chosen.size());
        ds.test[u].assign(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(test_count));
        ds.train[u].assign(chosen.begin() + static_cast<std::ptrdiff_t>(test_count), chosen.end());
        std::sort(ds.test[u].begin(), ds.test[u].end());
        std::sort(ds.train[u].begin(), ds.train[u].end());
        ds.num_train_interactions += ds.train[u].size();
    }
    return ds;
}

/// Every user draws `train_count + test_count` distinct items uniformly at random.
inline jmpgcf::InteractionDataset uniform_lists(std::size_t num_users, std::size_t num_items,
                                                std::size_t train_count, std::size_t test_count,
                                                std::uint64_t seed) {
    using jmpgcf::Index;
    std::mt19937_64 rng(seed);
    jmpgcf::InteractionDataset ds;
    ds.num_users = num_users;
    ds.num_items = num_items;
    ds.train.resize(num_users);
    ds.test.resize(num_users);
    std::vector<Index> items(num_items);
    std::iota(items.begin(), items.end(), Index{0});
    for (std::size_t u = 0; u < num_users; ++u) {
        std::shuffle(items.begin(), items.end(), rng);
        ds.train[u].assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(train_count));
        ds.test[u].assign(items.begin() + static_cast<std::ptrdiff_t>(train_count),
                          items.begin() + static_cast<std::ptrdiff_t>(train_count + test_count));
        std::sort(ds.train[u].begin(), ds.train[u].end());
        std::sort(ds.test[u].begin(), ds.test[u].end());
        ds.num_train_interactions += train_count;
    }
    return ds;
}

}  // namespace fixtures
