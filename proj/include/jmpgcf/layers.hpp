#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"

namespace jmpgcf {

struct LayerSelectionConfig {
    double alpha = 0.5;            // coverage threshold
    std::size_t sample_size = 100;  // users sampled for the coverage estimate
    int max_hops = 16;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
        if (sample_size < 1) throw ConfigError("sample_size must be at least 1");
        if (max_hops < 2) throw ConfigError("max_hops must be at least 2");
    }
};

/// The propagation layers whose embeddings feed prediction: one odd hop
/// (heterogeneous neighbours) and one even hop (homogeneous neighbours).
struct SelectedLayers {
    int odd = 1;
    int even = 2;

    int depth() const { return std::max(odd, even); }

    void validate() const {
        if (odd < 1 || odd % 2 != 1) throw ConfigError("odd layer must be a positive odd number");
        if (even < 2 || even % 2 != 0)
            throw ConfigError("even layer must be a positive even number");
    }

    friend bool operator==(const SelectedLayers&, const SelectedLayers&) = default;
};

struct HopCoverage {
    int hop = 0;
    double coverage = 0.0;  // mean over sampled users of (#nodes at exactly `hop`) / (#nodes of that type)
};

struct LayerSelectionReport {
    SelectedLayers layers;
    std::vector<HopCoverage> coverage;  // hops 1..max_hops
    std::vector<Index> sampled_users;
};

inline std::string format_coverage(const std::vector<HopCoverage>& coverage) {
    std::ostringstream os;
    os << std::left << std::setw(6) << "hop" << "coverage\n";
    for (const auto& c : coverage) os << std::setw(6) << c.hop << c.coverage << '\n';
    return os.str();
}

/// Raised when no hop up to max_hops reaches the coverage threshold.
class LayerSelectionFailure : public Error {
public:
    LayerSelectionFailure(const std::string& what, std::vector<HopCoverage> coverage)
        : Error(what + "\n" + format_coverage(coverage)), coverage_(std::move(coverage)) {}

    const std::vector<HopCoverage>& coverage() const noexcept { return coverage_; }

private:
    std::vector<HopCoverage> coverage_;
};

/// Breadth-first search over the train bipartite graph. Users are nodes [0, m),
/// item i is node m+i.
class BipartiteBfs {
public:
    explicit BipartiteBfs(const InteractionDataset& ds)
        : ds_(ds), item_users_(ds.num_items), dist_(ds.num_users + ds.num_items, -1) {
        for (std::size_t u = 0; u < ds.num_users; ++u)
            for (Index i : ds.train[u]) item_users_[i].push_back(static_cast<Index>(u));
    }

    /// counts[h] = number of nodes at shortest distance exactly h from `user`, h = 0..max_hops.
    std::vector<std::size_t> hop_counts(Index user, int max_hops) {
        std::vector<std::size_t> counts(static_cast<std::size_t>(max_hops) + 1, 0);
        const std::size_t m = ds_.num_users;
        std::vector<std::size_t> frontier{user};
        std::vector<std::size_t> visited{user};
        dist_[user] = 0;
        counts[0] = 1;
        for (int h = 1; h <= max_hops && !frontier.empty(); ++h) {
            std::vector<std::size_t> next;
            for (std::size_t node : frontier) {
                auto visit = [&](std::size_t nb) {
                    if (dist_[nb] >= 0) return;
                    dist_[nb] = h;
                    next.push_back(nb);
                    visited.push_back(nb);
                };
                if (node < m) {
                    for (Index i : ds_.train[node]) visit(m + i);
                } else {
                    for (Index u : item_users_[node - m]) visit(u);
                }
            }
            counts[static_cast<std::size_t>(h)] = next.size();
            frontier = std::move(next);
        }
        for (std::size_t node : visited) dist_[node] = -1;
        return counts;
    }

private:
    const InteractionDataset& ds_;
    std::vector<std::vector<Index>> item_users_;
    std::vector<int> dist_;
};

/// Number of nodes at shortest-path distance exactly `hop` from user `u`
/// (items for odd hops, users for even hops).
inline std::size_t count_k_hop_neighbors(const InteractionDataset& ds, Index u, int hop) {
    if (hop < 1) throw ConfigError("hop must be at least 1");
    if (u >= ds.num_users) throw ConfigError("user index out of range");
    BipartiteBfs bfs(ds);
    return bfs.hop_counts(u, hop)[static_cast<std::size_t>(hop)];
}

/// Uniform sample without replacement, returned in ascending order. All users when
/// the population is not larger than the sample.
inline std::vector<Index> sample_users(std::size_t num_users, std::size_t sample_size,
                                       std::uint64_t seed) {
    std::vector<Index> users(num_users);
    std::iota(users.begin(), users.end(), Index{0});
    if (num_users > sample_size) {
        std::mt19937_64 rng(seed);
        for (std::size_t p = 0; p < sample_size; ++p) {
            std::uniform_int_distribution<std::size_t> pick(p, num_users - 1);
            std::swap(users[p], users[pick(rng)]);
        }
        users.resize(sample_size);
        std::sort(users.begin(), users.end());
    }
    return users;
}

/// Picks the first odd hop whose mean item coverage reaches alpha and the first
/// even hop whose mean user coverage reaches alpha. Hops advance by two.
inline LayerSelectionReport select_layers(const InteractionDataset& ds,
                                          const LayerSelectionConfig& cfg) {
    cfg.validate();
    if (ds.num_users == 0 || ds.num_items == 0) throw ConfigError("dataset is empty");

    LayerSelectionReport report;
    report.sampled_users = sample_users(ds.num_users, cfg.sample_size, cfg.seed);

    std::vector<double> summed(static_cast<std::size_t>(cfg.max_hops) + 1, 0.0);
    BipartiteBfs bfs(ds);
    for (Index u : report.sampled_users) {
        const auto counts = bfs.hop_counts(u, cfg.max_hops);
        for (std::size_t h = 1; h < counts.size(); ++h) summed[h] += static_cast<double>(counts[h]);
    }

    const auto sampled = static_cast<double>(report.sampled_users.size());
    for (int h = 1; h <= cfg.max_hops; ++h) {
        const double population = static_cast<double>(h % 2 == 1 ? ds.num_items : ds.num_users);
        report.coverage.push_back({h, summed[static_cast<std::size_t>(h)] / population / sampled});
    }

    auto first_reaching = [&](int start) {
        for (int h = start; h <= cfg.max_hops; h += 2)
            if (report.coverage[static_cast<std::size_t>(h - 1)].coverage >= cfg.alpha) return h;
        return 0;
    };
    report.layers.odd = first_reaching(1);
    report.layers.even = first_reaching(2);
    if (report.layers.odd == 0 || report.layers.even == 0) {
        std::string missing = report.layers.odd == 0 ? "odd" : "even";
        if (report.layers.odd == 0 && report.layers.even == 0) missing = "odd and even";
        throw LayerSelectionFailure("no " + missing + " hop up to " + std::to_string(cfg.max_hops) +
                                        " reaches coverage alpha=" + std::to_string(cfg.alpha),
                                    report.coverage);
    }
    return report;
}

}  // namespace jmpgcf
