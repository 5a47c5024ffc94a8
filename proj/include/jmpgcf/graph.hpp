#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "sparse.hpp"

namespace jmpgcf {

/// Popularity granularity settings. Granularity k raises the right-hand degree
/// exponent of the normalized adjacency to -1/2 + k*c.
struct PopularityConfig {
    double unit = 0.1;                           // c
    int max_granularity = 2;                     // K
    std::vector<double> granularity_weights{1.0, 1.0, 1.0};  // lambda_k, length K+1

    static PopularityConfig with_uniform_weights(double unit, int max_granularity) {
        return {unit, max_granularity,
                std::vector<double>(static_cast<std::size_t>(std::max(max_granularity, 0)) + 1, 1.0)};
    }

    std::size_t num_granularities() const { return static_cast<std::size_t>(max_granularity) + 1; }

    double column_exponent(int k) const { return -0.5 + k * unit; }

    void validate() const {
        if (!(unit > 0.0) || !std::isfinite(unit))
            throw ConfigError("granularity unit c must be positive");
        if (max_granularity < 0) throw ConfigError("max granularity K must be non-negative");
        if (granularity_weights.size() != num_granularities())
            throw ConfigError("expected " + std::to_string(num_granularities()) +
                              " granularity weights, got " +
                              std::to_string(granularity_weights.size()));
        for (double w : granularity_weights)
            if (!(w > 0.0) || !std::isfinite(w))
                throw ConfigError("granularity weights must be positive");
        // The largest column exponent -1/2 + K*c must stay below 1/2.
        if (!(column_exponent(max_granularity) < 0.5))
            throw ConfigError("K * c must be below 1 (got K=" + std::to_string(max_granularity) +
                              ", c=" + std::to_string(unit) + ")");
    }
};

/// Symmetric (m+n)-square adjacency of the train interactions; users first, item i
/// at node m+i. No self-loops.
inline SparseMatrix build_adjacency(const InteractionDataset& ds) {
    const std::size_t m = ds.num_users;
    const std::size_t nodes = m + ds.num_items;

    std::vector<std::vector<Index>> item_users(ds.num_items);
    for (std::size_t u = 0; u < m; ++u)
        for (Index i : ds.train[u]) item_users[i].push_back(static_cast<Index>(u));

    SparseMatrix a;
    a.num_rows = a.num_cols = nodes;
    a.row_offsets.assign(nodes + 1, 0);
    a.col_indices.reserve(2 * ds.num_train_interactions);
    for (std::size_t u = 0; u < m; ++u) {
        for (Index i : ds.train[u]) a.col_indices.push_back(static_cast<Index>(m + i));
        a.row_offsets[u + 1] = a.col_indices.size();
    }
    for (std::size_t i = 0; i < ds.num_items; ++i) {
        // users were appended in ascending order, so the row is already sorted
        for (Index u : item_users[i]) a.col_indices.push_back(u);
        a.row_offsets[m + i + 1] = a.col_indices.size();
    }
    a.values.assign(a.col_indices.size(), 1.0);
    return a;
}

/// Row degrees of an adjacency without self-loops.
inline std::vector<double> node_degrees(const SparseMatrix& a) {
    std::vector<double> d(a.num_rows, 0.0);
    for (std::size_t r = 0; r < a.num_rows; ++r)
        for (std::size_t p = a.row_offsets[r]; p < a.row_offsets[r + 1]; ++p) d[r] += a.values[p];
    return d;
}

/// (d+1)^e evaluated as exp(e * ln(d+1)).
inline double degree_power(double degree, double exponent) {
    return std::exp(exponent * std::log(degree + 1.0));
}

/// (D+I)^{-1/2} (A+I) (D+I)^{-1/2 + k c}, with D the degree matrix of A.
/// Granularity 0 gives the usual symmetric normalization; k > 0 makes the result
/// asymmetric by boosting columns of high-degree nodes.
inline SparseMatrix build_normalized_adjacency(const SparseMatrix& a, int k,
                                               const PopularityConfig& cfg) {
    if (a.num_rows != a.num_cols) throw DimensionError("adjacency must be square");
    if (k < 0 || k > cfg.max_granularity)
        throw ConfigError("granularity " + std::to_string(k) + " outside [0, " +
                          std::to_string(cfg.max_granularity) + "]");

    const auto deg = node_degrees(a);
    std::vector<double> left(a.num_rows);
    std::vector<double> right(a.num_rows);
    for (std::size_t i = 0; i < a.num_rows; ++i) {
        left[i] = degree_power(deg[i], -0.5);
        right[i] = degree_power(deg[i], cfg.column_exponent(k));
    }

    SparseMatrix out;
    out.num_rows = out.num_cols = a.num_rows;
    out.row_offsets.assign(a.num_rows + 1, 0);
    out.col_indices.reserve(a.nnz() + a.num_rows);
    out.values.reserve(a.nnz() + a.num_rows);
    for (std::size_t r = 0; r < a.num_rows; ++r) {
        bool diagonal_done = false;
        auto emit = [&](std::size_t c, double v) {
            out.col_indices.push_back(static_cast<Index>(c));
            out.values.push_back(left[r] * v * right[c]);
        };
        for (std::size_t p = a.row_offsets[r]; p < a.row_offsets[r + 1]; ++p) {
            const std::size_t c = a.col_indices[p];
            if (!diagonal_done && c >= r) {
                if (c == r) {
                    emit(c, a.values[p] + 1.0);
                    diagonal_done = true;
                    continue;
                }
                emit(r, 1.0);
                diagonal_done = true;
            }
            emit(c, a.values[p]);
        }
        if (!diagonal_done) emit(r, 1.0);
        out.row_offsets[r + 1] = out.col_indices.size();
    }
    return out;
}

/// Forward matrices for every granularity 0..K and their transposes (used to pull
/// gradients back through propagation).
struct PropagationMatrices {
    std::vector<SparseMatrix> forward;
    std::vector<SparseMatrix> backward;

    std::size_t num_nodes() const { return forward.empty() ? 0 : forward.front().num_rows; }
    int max_granularity() const { return static_cast<int>(forward.size()) - 1; }
};

inline PropagationMatrices build_propagation_matrices(const InteractionDataset& ds,
                                                      const PopularityConfig& cfg) {
    cfg.validate();
    const SparseMatrix a = build_adjacency(ds);
    PropagationMatrices mats;
    for (int k = 0; k <= cfg.max_granularity; ++k) {
        mats.forward.push_back(build_normalized_adjacency(a, k, cfg));
        mats.backward.push_back(k == 0 ? mats.forward.back() : transpose(mats.forward.back()));
    }
    return mats;
}

}  // namespace jmpgcf
