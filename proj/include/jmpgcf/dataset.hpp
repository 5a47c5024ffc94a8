#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "types.hpp"

namespace jmpgcf {

/// ID-mapped implicit-feedback interactions split into train and test lists.
/// Users occupy indices [0, num_users), items [0, num_items); every per-user list
/// is strictly increasing.
struct InteractionDataset {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::vector<std::vector<Index>> train;
    std::vector<std::vector<Index>> test;
    std::size_t num_train_interactions = 0;

    std::size_t num_test_interactions() const {
        std::size_t total = 0;
        for (const auto& items : test) total += items.size();
        return total;
    }

    bool has_train_item(Index user, Index item) const {
        const auto& items = train[user];
        return std::binary_search(items.begin(), items.end(), item);
    }

    /// Throws DatasetError on the first broken invariant.
    void validate() const;

    friend bool operator==(const InteractionDataset&, const InteractionDataset&) = default;
};

/// Original identifiers, indexed by the dense index they were mapped to.
struct IdMapping {
    std::vector<std::uint64_t> users;
    std::vector<std::uint64_t> items;
};

struct LoadedDataset {
    InteractionDataset dataset;
    IdMapping mapping;
};

namespace detail {

using RawLists = std::map<std::uint64_t, std::vector<std::uint64_t>>;

inline bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

inline RawLists read_interaction_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open interaction file '" + path.string() + "'");

    RawLists lists;
    std::string line;
    std::size_t line_no = 0;
    const std::string name = path.string();
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<std::uint64_t> tokens;
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && is_blank(line[pos])) ++pos;
            if (pos == line.size()) break;
            std::size_t end = pos;
            while (end < line.size() && !is_blank(line[end])) ++end;
            std::uint64_t value = 0;
            const char* first = line.data() + pos;
            const char* last = line.data() + end;
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc{} || ptr != last) {
                throw ParseError(name, line_no,
                                 "malformed token '" + std::string(first, last) + "'");
            }
            tokens.push_back(value);
            pos = end;
        }
        if (tokens.empty()) continue;

        const std::uint64_t uid = tokens.front();
        auto [it, inserted] = lists.try_emplace(uid);
        if (!inserted) {
            throw DatasetError(name + ":" + std::to_string(line_no) + ": user " +
                               std::to_string(uid) + " appears more than once");
        }
        it->second.assign(tokens.begin() + 1, tokens.end());
    }
    return lists;
}

inline Index checked_index(std::uint64_t id, const char* what) {
    if (id >= std::numeric_limits<Index>::max()) {
        throw DatasetError(std::string(what) + " id " + std::to_string(id) +
                           " exceeds the supported index range (use remapping)");
    }
    return static_cast<Index>(id);
}

inline void sort_unique(std::vector<Index>& items) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
}

inline InteractionDataset assemble(const RawLists& train_raw, const RawLists& test_raw,
                                   const IdMapping* mapping) {
    for (const auto& [uid, items] : test_raw) {
        if (!train_raw.contains(uid)) {
            throw DatasetError("user " + std::to_string(uid) +
                               " appears only in the test file (cold-start users are not supported)");
        }
    }

    std::map<std::uint64_t, Index> user_index;
    std::map<std::uint64_t, Index> item_index;
    if (mapping) {
        for (std::size_t i = 0; i < mapping->users.size(); ++i)
            user_index[mapping->users[i]] = static_cast<Index>(i);
        for (std::size_t i = 0; i < mapping->items.size(); ++i)
            item_index[mapping->items[i]] = static_cast<Index>(i);
    }
    auto user_of = [&](std::uint64_t id) {
        return mapping ? user_index.at(id) : checked_index(id, "user");
    };
    auto item_of = [&](std::uint64_t id) {
        return mapping ? item_index.at(id) : checked_index(id, "item");
    };

    InteractionDataset ds;
    std::uint64_t max_user = 0;
    std::uint64_t max_item = 0;
    bool any_user = false;
    bool any_item = false;
    for (const RawLists* raw : {&train_raw, &test_raw}) {
        for (const auto& [uid, items] : *raw) {
            max_user = std::max<std::uint64_t>(max_user, user_of(uid));
            any_user = true;
            for (auto iid : items) {
                max_item = std::max<std::uint64_t>(max_item, item_of(iid));
                any_item = true;
            }
        }
    }
    ds.num_users = any_user ? max_user + 1 : 0;
    ds.num_items = any_item ? max_item + 1 : 0;
    ds.train.resize(ds.num_users);
    ds.test.resize(ds.num_users);

    auto fill = [&](const RawLists& raw, std::vector<std::vector<Index>>& out) {
        for (const auto& [uid, items] : raw) {
            auto& dst = out[user_of(uid)];
            dst.reserve(items.size());
            for (auto iid : items) dst.push_back(item_of(iid));
            sort_unique(dst);
        }
    };
    fill(train_raw, ds.train);
    fill(test_raw, ds.test);

    for (std::size_t u = 0; u < ds.num_users; ++u) {
        ds.num_train_interactions += ds.train[u].size();
        std::vector<Index> common;
        std::set_intersection(ds.train[u].begin(), ds.train[u].end(), ds.test[u].begin(),
                              ds.test[u].end(), std::back_inserter(common));
        if (!common.empty()) {
            const auto uid = mapping ? mapping->users[u] : u;
            const auto iid = mapping ? mapping->items[common.front()] : common.front();
            throw DatasetError("item " + std::to_string(iid) + " of user " + std::to_string(uid) +
                               " is in both the train and the test file");
        }
    }
    return ds;
}

inline IdMapping build_mapping(const RawLists& train_raw, const RawLists& test_raw) {
    std::vector<std::uint64_t> users;
    std::vector<std::uint64_t> items;
    for (const RawLists* raw : {&train_raw, &test_raw}) {
        for (const auto& [uid, list] : *raw) {
            users.push_back(uid);
            items.insert(items.end(), list.begin(), list.end());
        }
    }
    for (auto* v : {&users, &items}) {
        std::sort(v->begin(), v->end());
        v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    return {std::move(users), std::move(items)};
}

}  // namespace detail

inline void InteractionDataset::validate() const {
    if (train.size() != num_users || test.size() != num_users)
        throw DatasetError("per-user list count does not match num_users");
    std::size_t total = 0;
    for (std::size_t u = 0; u < num_users; ++u) {
        for (const auto* list : {&train[u], &test[u]}) {
            for (std::size_t p = 0; p < list->size(); ++p) {
                if ((*list)[p] >= num_items)
                    throw DatasetError("item index out of range for user " + std::to_string(u));
                if (p > 0 && (*list)[p - 1] >= (*list)[p])
                    throw DatasetError("item list of user " + std::to_string(u) +
                                       " is not strictly increasing");
            }
        }
        std::vector<Index> common;
        std::set_intersection(train[u].begin(), train[u].end(), test[u].begin(), test[u].end(),
                              std::back_inserter(common));
        if (!common.empty())
            throw DatasetError("train and test lists of user " + std::to_string(u) + " overlap");
        total += train[u].size();
    }
    if (total != num_train_interactions)
        throw DatasetError("num_train_interactions does not match the train lists");
}

/// Loads `uid iid...` train/test files whose IDs are already contiguous from 0.
inline InteractionDataset load_dataset(const std::filesystem::path& train_path,
                                       const std::filesystem::path& test_path) {
    const auto train_raw = detail::read_interaction_file(train_path);
    const auto test_raw = detail::read_interaction_file(test_path);
    return detail::assemble(train_raw, test_raw, nullptr);
}

/// Loads arbitrary (sparse, non-contiguous) IDs and assigns dense indices in
/// ascending order of original ID.
inline LoadedDataset load_dataset_remapped(const std::filesystem::path& train_path,
                                           const std::filesystem::path& test_path) {
    const auto train_raw = detail::read_interaction_file(train_path);
    const auto test_raw = detail::read_interaction_file(test_path);
    IdMapping mapping = detail::build_mapping(train_raw, test_raw);
    InteractionDataset ds = detail::assemble(train_raw, test_raw, &mapping);
    return {std::move(ds), std::move(mapping)};
}

/// One line per user (including users with empty lists): `uid iid...`.
inline void write_interactions(std::ostream& out, const std::vector<std::vector<Index>>& lists) {
    for (std::size_t u = 0; u < lists.size(); ++u) {
        out << u;
        for (auto item : lists[u]) out << ' ' << item;
        out << '\n';
    }
}

/// Lines `original_id new_id`.
inline void write_id_mapping(std::ostream& out, std::span<const std::uint64_t> originals) {
    for (std::size_t i = 0; i < originals.size(); ++i) out << originals[i] << ' ' << i << '\n';
}

/// Moves ceil(fraction * |train[u]|) random training items of every user into a
/// held-out list. Returns {reduced train + original test, reduced train + held-out}.
/// A user never loses its last training item.
inline std::pair<InteractionDataset, InteractionDataset> split_validation(
    const InteractionDataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ConfigError("validation fraction must lie in (0, 1)");

    std::mt19937_64 rng(seed);
    InteractionDataset fit = ds;
    InteractionDataset validation = ds;
    fit.num_train_interactions = 0;
    for (std::size_t u = 0; u < ds.num_users; ++u) {
        const auto& items = ds.train[u];
        // The epsilon keeps products like 0.3 * 10 from rounding up past an integer.
        auto moved = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(items.size()) - 1e-9));
        if (!items.empty()) moved = std::min(moved, items.size() - 1);

        std::vector<Index> shuffled = items;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::vector<Index> held(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(moved));
        std::vector<Index> kept(shuffled.begin() + static_cast<std::ptrdiff_t>(moved), shuffled.end());
        std::sort(held.begin(), held.end());
        std::sort(kept.begin(), kept.end());

        fit.train[u] = kept;
        validation.train[u] = std::move(kept);
        validation.test[u] = std::move(held);
        fit.num_train_interactions += fit.train[u].size();
    }
    validation.num_train_interactions = fit.num_train_interactions;
    return {std::move(fit), std::move(validation)};
}

}  // namespace jmpgcf
