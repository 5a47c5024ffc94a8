#pragma once

#include <cstdint>
#include <iostream>
#include <random>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "loss.hpp"

namespace jmpgcf {

/// Uniform BPR triple sampler: user uniform over users with a usable train list,
/// positive uniform over that list, negative uniform over items rejected until
/// it is unobserved.
class TripleSampler {
public:
    explicit TripleSampler(const InteractionDataset& ds, std::ostream* log = &std::cerr) : ds_(ds) {
        std::size_t saturated = 0;
        for (std::size_t u = 0; u < ds.num_users; ++u) {
            const auto size = ds.train[u].size();
            if (size == 0) continue;
            if (size >= ds.num_items) {
                ++saturated;
                continue;
            }
            users_.push_back(static_cast<Index>(u));
        }
        if (saturated > 0 && log)
            *log << "warning: skipping " << saturated
                 << " user(s) who interacted with every item (no negative exists)\n";
        if (users_.empty()) throw DatasetError("no user has both a positive and a negative item");
    }

    const std::vector<Index>& eligible_users() const noexcept { return users_; }

    template <class Rng>
    TrainingTriple sample(Rng& rng) const {
        std::uniform_int_distribution<std::size_t> pick_user(0, users_.size() - 1);
        const Index u = users_[pick_user(rng)];
        const auto& items = ds_.train[u];
        std::uniform_int_distribution<std::size_t> pick_pos(0, items.size() - 1);
        std::uniform_int_distribution<Index> pick_item(0, static_cast<Index>(ds_.num_items - 1));
        Index j = pick_item(rng);
        while (ds_.has_train_item(u, j)) j = pick_item(rng);
        return {u, items[pick_pos(rng)], j};
    }

    template <class Rng>
    std::vector<TrainingTriple> sample_batch(std::size_t batch_size, Rng& rng) const {
        std::vector<TrainingTriple> batch;
        batch.reserve(batch_size);
        for (std::size_t b = 0; b < batch_size; ++b) batch.push_back(sample(rng));
        return batch;
    }

private:
    const InteractionDataset& ds_;
    std::vector<Index> users_;
};

inline std::vector<TrainingTriple> sample_batch(const InteractionDataset& ds, std::size_t batch_size,
                                                std::mt19937_64& rng) {
    return TripleSampler(ds).sample_batch(batch_size, rng);
}

}  // namespace jmpgcf
