#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dense.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "layers.hpp"
#include "sparse.hpp"

namespace jmpgcf {

/// Trainable state: one (m+n) x embed_dim base table per granularity 0..K.
/// Rows [0, m) are users, rows [m, m+n) items.
struct ModelParameters {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::size_t embed_dim = 0;
    PopularityConfig popularity;
    std::vector<DenseMatrix> base;

    std::size_t num_nodes() const { return num_users + num_items; }
    int max_granularity() const { return popularity.max_granularity; }

    void validate() const {
        popularity.validate();
        if (base.size() != popularity.num_granularities())
            throw DimensionError("expected " + std::to_string(popularity.num_granularities()) +
                                 " base tables, got " + std::to_string(base.size()));
        for (const auto& t : base) {
            if (t.rows() != num_nodes() || t.cols() != embed_dim)
                throw DimensionError("base table shape does not match (m+n) x embed_dim");
            for (double v : t.values())
                if (!std::isfinite(v)) throw NumericalError("non-finite parameter");
        }
    }

    friend bool operator==(const ModelParameters& a, const ModelParameters& b) {
        return a.num_users == b.num_users && a.num_items == b.num_items &&
               a.embed_dim == b.embed_dim && a.popularity.unit == b.popularity.unit &&
               a.popularity.max_granularity == b.popularity.max_granularity && a.base == b.base;
    }
};

/// Xavier-uniform bound for an embedding row with fan_in = fan_out = embed_dim.
inline double xavier_bound(std::size_t embed_dim) {
    return std::sqrt(6.0 / (2.0 * static_cast<double>(embed_dim)));
}

/// Fills K+1 tables i.i.d. uniform on [-a, a]. With `shared_base` every table
/// starts as a copy of the first one.
inline ModelParameters init_parameters(std::size_t num_users, std::size_t num_items,
                                       std::size_t embed_dim, const PopularityConfig& cfg,
                                       std::uint64_t seed, bool shared_base = false) {
    if (embed_dim < 1) throw ConfigError("embed_dim must be at least 1");
    cfg.validate();
    ModelParameters p{num_users, num_items, embed_dim, cfg, {}};
    const double a = xavier_bound(embed_dim);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-a, a);
    for (std::size_t k = 0; k < cfg.num_granularities(); ++k) {
        if (shared_base && k > 0) {
            p.base.push_back(p.base.front());
            continue;
        }
        DenseMatrix t(p.num_nodes(), embed_dim);
        for (double& v : t.values()) v = dist(rng);
        p.base.push_back(std::move(t));
    }
    return p;
}

/// Granularities trained in phase p (1-based) of the stacked schedule: K down to K-p+1.
inline std::vector<int> phase_granularities(int max_granularity, int phase) {
    if (phase < 1 || phase > max_granularity + 1)
        throw ConfigError("phase " + std::to_string(phase) + " outside [1, " +
                          std::to_string(max_granularity + 1) + "]");
    std::vector<int> ks;
    for (int p = 1; p <= phase; ++p) ks.push_back(max_granularity - p + 1);
    return ks;
}

inline std::vector<int> all_granularities(int max_granularity) {
    return phase_granularities(max_granularity, max_granularity + 1);
}

/// Propagated embeddings E_k^(l) for l = 1..depth. Granularities that were not
/// propagated have an empty chain.
struct PropagationOutput {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    SelectedLayers layers;
    std::vector<std::vector<DenseMatrix>> chain;  // chain[k][l-1]

    int max_granularity() const { return static_cast<int>(chain.size()) - 1; }
    int depth() const {
        for (const auto& c : chain)
            if (!c.empty()) return static_cast<int>(c.size());
        return 0;
    }
    bool has(int k) const {
        return k >= 0 && k < static_cast<int>(chain.size()) && !chain[static_cast<std::size_t>(k)].empty();
    }

    std::vector<int> granularities() const {
        std::vector<int> ks;
        for (int k = max_granularity(); k >= 0; --k)
            if (has(k)) ks.push_back(k);
        return ks;
    }

    const DenseMatrix& layer(int k, int l) const {
        if (!has(k)) throw Error("granularity " + std::to_string(k) + " was not propagated");
        const auto& c = chain[static_cast<std::size_t>(k)];
        if (l < 1 || l > static_cast<int>(c.size()))
            throw Error("layer " + std::to_string(l) + " was not propagated");
        return c[static_cast<std::size_t>(l - 1)];
    }

    std::span<const double> user_row(int k, int l, Index u) const { return layer(k, l).row(u); }
    std::span<const double> item_row(int k, int l, Index i) const {
        return layer(k, l).row(num_users + i);
    }
};

/// E_k^(l) = A_k * E_k^(l-1), E_k^(0) = base[k], for each requested granularity.
/// `depth` 0 means the deepest selected layer.
inline PropagationOutput propagate(const ModelParameters& params, const PropagationMatrices& mats,
                                   const SelectedLayers& layers,
                                   std::span<const int> granularities, int depth = 0) {
    layers.validate();
    if (depth == 0) depth = layers.depth();
    if (depth < layers.depth()) throw ConfigError("propagation depth below the selected layers");
    if (mats.max_granularity() != params.max_granularity())
        throw DimensionError("propagation matrices and parameters disagree on K");
    if (mats.num_nodes() != params.num_nodes())
        throw DimensionError("propagation matrices have " + std::to_string(mats.num_nodes()) +
                             " nodes, parameters have " + std::to_string(params.num_nodes()));

    PropagationOutput out{params.num_users, params.num_items, layers, {}};
    out.chain.resize(params.base.size());
    for (int k : granularities) {
        if (k < 0 || k > params.max_granularity())
            throw ConfigError("granularity " + std::to_string(k) + " out of range");
        auto& chain = out.chain[static_cast<std::size_t>(k)];
        if (!chain.empty()) continue;
        chain.reserve(static_cast<std::size_t>(depth));
        const DenseMatrix* prev = &params.base[static_cast<std::size_t>(k)];
        for (int l = 1; l <= depth; ++l) {
            chain.push_back(spmm(mats.forward[static_cast<std::size_t>(k)], *prev));
            prev = &chain.back();
        }
    }
    return out;
}

inline PropagationOutput propagate(const ModelParameters& params, const PropagationMatrices& mats,
                                   const SelectedLayers& layers) {
    const auto ks = all_granularities(params.max_granularity());
    return propagate(params, mats, layers, ks);
}

namespace detail {

inline void check_pair(const PropagationOutput& out, Index u, Index i) {
    if (u >= out.num_users)
        throw ConfigError("user index " + std::to_string(u) + " out of range");
    if (i >= out.num_items)
        throw ConfigError("item index " + std::to_string(i) + " out of range");
}

inline void check_weights(const PropagationOutput& out, std::span<const double> weights) {
    if (weights.size() != out.chain.size())
        throw ConfigError("expected " + std::to_string(out.chain.size()) +
                          " granularity weights, got " + std::to_string(weights.size()));
}

}  // namespace detail

/// Unweighted odd-layer plus even-layer inner product at one granularity.
inline double granularity_score(const PropagationOutput& out, int k, Index u, Index i) {
    const auto& L = out.layers;
    return dot(out.user_row(k, L.odd, u), out.item_row(k, L.odd, i)) +
           dot(out.user_row(k, L.even, u), out.item_row(k, L.even, i));
}

/// Preference score summed over every propagated granularity, user rows scaled by
/// the granularity weight.
inline double score_pair(const PropagationOutput& out, Index u, Index i,
                         std::span<const double> weights) {
    detail::check_pair(out, u, i);
    detail::check_weights(out, weights);
    double r = 0.0;
    for (int k : out.granularities()) r += weights[static_cast<std::size_t>(k)] * granularity_score(out, k, u, i);
    return r;
}

/// Score of the model after `phase` stacked training phases: the phase's own
/// granularity term on top of the previous phase's score.
inline double stacked_score(const PropagationOutput& out, Index u, Index i,
                            std::span<const double> weights, int phase) {
    detail::check_pair(out, u, i);
    detail::check_weights(out, weights);
    if (phase == 0) return 0.0;
    const int k = out.max_granularity() - phase + 1;
    if (k < 0) throw ConfigError("phase beyond the number of granularities");
    return weights[static_cast<std::size_t>(k)] * granularity_score(out, k, u, i) +
           stacked_score(out, u, i, weights, phase - 1);
}

/// Scores of user u against every item.
inline std::vector<double> score_all_items(const PropagationOutput& out, Index u,
                                           std::span<const double> weights) {
    if (u >= out.num_users) throw ConfigError("user index " + std::to_string(u) + " out of range");
    detail::check_weights(out, weights);
    std::vector<double> scores(out.num_items, 0.0);
    for (int k : out.granularities()) {
        const double w = weights[static_cast<std::size_t>(k)];
        for (int l : {out.layers.odd, out.layers.even}) {
            const DenseMatrix& e = out.layer(k, l);
            const auto user = e.row(u);
            for (std::size_t i = 0; i < out.num_items; ++i)
                scores[i] += w * dot(user, e.row(out.num_users + i));
        }
    }
    return scores;
}

/// Concatenation of every (granularity, selected layer) block into one row per
/// user (weighted) and per item, so a full score is a single inner product.
struct ScoringTables {
    DenseMatrix users;
    DenseMatrix items;
};

inline ScoringTables make_scoring_tables(const PropagationOutput& out,
                                         std::span<const double> weights) {
    detail::check_weights(out, weights);
    const auto ks = out.granularities();
    if (ks.empty()) throw Error("no propagated granularity to score with");
    const std::size_t d = out.layer(ks.front(), out.layers.odd).cols();
    const std::size_t width = ks.size() * 2 * d;
    ScoringTables t{DenseMatrix(out.num_users, width), DenseMatrix(out.num_items, width)};
    std::size_t offset = 0;
    for (int k : ks) {
        const double w = weights[static_cast<std::size_t>(k)];
        for (int l : {out.layers.odd, out.layers.even}) {
            const DenseMatrix& e = out.layer(k, l);
            for (std::size_t u = 0; u < out.num_users; ++u)
                for (std::size_t c = 0; c < d; ++c) t.users(u, offset + c) = w * e(u, c);
            for (std::size_t i = 0; i < out.num_items; ++i)
                for (std::size_t c = 0; c < d; ++c) t.items(i, offset + c) = e(out.num_users + i, c);
            offset += d;
        }
    }
    return t;
}

}  // namespace jmpgcf
