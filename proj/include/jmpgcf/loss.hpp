#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dense.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "model.hpp"

namespace jmpgcf {

/// (user, observed item, unobserved item).
struct TrainingTriple {
    Index user = 0;
    Index pos = 0;
    Index neg = 0;

    friend bool operator==(const TrainingTriple&, const TrainingTriple&) = default;
};

/// Which propagated rows the L2 term covers.
enum class RegularizationScope {
    batch_rows,   // rows of each triple's user/positive/negative, counted per triple
    full_matrix,  // every row of every selected layer
};

/// -ln(sigmoid(x)) without overflow for large |x|.
inline double neg_log_sigmoid(double x) {
    return x >= 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace detail {

inline void check_granularities(const PropagationOutput& out, std::span<const int> ks) {
    if (ks.empty()) throw ConfigError("active granularity set is empty");
    for (std::size_t a = 0; a < ks.size(); ++a) {
        if (ks[a] < 0 || ks[a] > out.max_granularity())
            throw ConfigError("granularity " + std::to_string(ks[a]) + " out of range");
        for (std::size_t b = 0; b < a; ++b)
            if (ks[a] == ks[b]) throw ConfigError("granularity listed twice");
        if (!out.has(ks[a]))
            throw Error("internal: propagation chain for granularity " + std::to_string(ks[a]) +
                        " was not retained");
    }
}

inline void check_batch(const PropagationOutput& out, std::span<const TrainingTriple> batch) {
    for (const auto& t : batch)
        if (t.user >= out.num_users || t.pos >= out.num_items || t.neg >= out.num_items)
            throw ConfigError("training triple index out of range");
}

inline double triple_rows_norm(const PropagationOutput& out, int k, int l, const TrainingTriple& t) {
    return squared_norm(out.user_row(k, l, t.user)) + squared_norm(out.item_row(k, l, t.pos)) +
           squared_norm(out.item_row(k, l, t.neg));
}

inline double layer_margin(const PropagationOutput& out, int k, int l, const TrainingTriple& t) {
    const auto eu = out.user_row(k, l, t.user);
    return dot(eu, out.item_row(k, l, t.pos)) - dot(eu, out.item_row(k, l, t.neg));
}

}  // namespace detail

/// Loss contribution of a single granularity: the odd- and even-layer pairwise
/// terms for every triple plus that granularity's L2 term.
inline double granularity_loss(const PropagationOutput& out, std::span<const TrainingTriple> batch,
                               int k, double l2,
                               RegularizationScope scope = RegularizationScope::batch_rows) {
    const int ks[] = {k};
    detail::check_granularities(out, ks);
    detail::check_batch(out, batch);
    const auto& L = out.layers;
    double data = 0.0;
    double reg = 0.0;
    for (const auto& t : batch) {
        for (int l : {L.odd, L.even}) {
            data += neg_log_sigmoid(detail::layer_margin(out, k, l, t));
            if (scope == RegularizationScope::batch_rows) reg += detail::triple_rows_norm(out, k, l, t);
        }
    }
    if (scope == RegularizationScope::full_matrix)
        for (int l : {L.odd, L.even}) reg += squared_frobenius(out.layer(k, l));
    return data + l2 * reg;
}

/// Separated pairwise ranking loss over a batch: one -ln sigmoid term per
/// (triple, granularity, selected layer), plus l2 times the squared norm of the
/// regularized propagated rows.
inline double separated_bpr_loss(const PropagationOutput& out,
                                 std::span<const TrainingTriple> batch,
                                 std::span<const int> granularities, double l2,
                                 RegularizationScope scope = RegularizationScope::batch_rows) {
    detail::check_granularities(out, granularities);
    detail::check_batch(out, batch);
    const auto& L = out.layers;
    double data = 0.0;
    double reg = 0.0;
    for (const auto& t : batch) {
        for (int k : granularities) {
            data += neg_log_sigmoid(detail::layer_margin(out, k, L.odd, t)) +
                    neg_log_sigmoid(detail::layer_margin(out, k, L.even, t));
            if (scope == RegularizationScope::batch_rows)
                reg += detail::triple_rows_norm(out, k, L.odd, t) +
                       detail::triple_rows_norm(out, k, L.even, t);
        }
    }
    if (scope == RegularizationScope::full_matrix)
        for (int k : granularities)
            reg += squared_frobenius(out.layer(k, L.odd)) + squared_frobenius(out.layer(k, L.even));
    return data + l2 * reg;
}

/// Cumulative objective after `phase` stacked phases: the granularity K-phase+1
/// term plus the previous phase's objective.
inline double stacked_loss(const PropagationOutput& out, std::span<const TrainingTriple> batch,
                           int phase, double l2,
                           RegularizationScope scope = RegularizationScope::batch_rows) {
    if (phase < 0 || phase > out.max_granularity() + 1)
        throw ConfigError("phase " + std::to_string(phase) + " out of range");
    if (phase == 0) return 0.0;
    const int k = out.max_granularity() - phase + 1;
    return granularity_loss(out, batch, k, l2, scope) + stacked_loss(out, batch, phase - 1, l2, scope);
}

/// Gradient of `scale * separated_bpr_loss` with respect to every base table.
/// Inactive granularities get zero tables.
inline std::vector<DenseMatrix> backward(const PropagationOutput& out,
                                         const PropagationMatrices& mats,
                                         std::span<const TrainingTriple> batch,
                                         std::span<const int> granularities, double l2,
                                         RegularizationScope scope = RegularizationScope::batch_rows,
                                         double scale = 1.0) {
    detail::check_granularities(out, granularities);
    detail::check_batch(out, batch);
    if (mats.max_granularity() != out.max_granularity())
        throw DimensionError("propagation matrices and output disagree on K");

    const auto& L = out.layers;
    const std::size_t nodes = out.num_users + out.num_items;
    const std::size_t d = out.layer(granularities.front(), L.odd).cols();
    const int depth = out.depth();

    std::vector<DenseMatrix> grads(out.chain.size(), DenseMatrix(nodes, d));
    for (int k : granularities) {
        DenseMatrix g_odd(nodes, d);
        DenseMatrix g_even(nodes, d);
        for (int l : {L.odd, L.even}) {
            DenseMatrix& g = l == L.odd ? g_odd : g_even;
            const DenseMatrix& e = out.layer(k, l);
            for (const auto& t : batch) {
                const std::size_t ru = t.user;
                const std::size_t ri = out.num_users + t.pos;
                const std::size_t rj = out.num_users + t.neg;
                const auto eu = e.row(ru);
                const auto ei = e.row(ri);
                const auto ej = e.row(rj);
                // d/dx of -ln sigmoid(x) is -sigmoid(-x)
                const double w = -sigmoid(-(dot(eu, ei) - dot(eu, ej))) * scale;
                axpy(w, ei, g.row(ru));
                axpy(-w, ej, g.row(ru));
                axpy(w, eu, g.row(ri));
                axpy(-w, eu, g.row(rj));
                if (scope == RegularizationScope::batch_rows) {
                    const double r = 2.0 * l2 * scale;
                    axpy(r, eu, g.row(ru));
                    axpy(r, ei, g.row(ri));
                    axpy(r, ej, g.row(rj));
                }
            }
            if (scope == RegularizationScope::full_matrix) axpy(2.0 * l2 * scale, e.values(), g.values());
        }

        // dL/dE^(l-1) = A_k^T dL/dE^(l)
        const SparseMatrix& back = mats.backward[static_cast<std::size_t>(k)];
        DenseMatrix acc(nodes, d);
        DenseMatrix next(nodes, d);
        for (int l = depth; l >= 1; --l) {
            if (l == L.odd) axpy(1.0, g_odd.values(), acc.values());
            if (l == L.even) axpy(1.0, g_even.values(), acc.values());
            spmm(back, acc, next);
            std::swap(acc, next);
        }
        grads[static_cast<std::size_t>(k)] = std::move(acc);
    }
    return grads;
}

}  // namespace jmpgcf
