#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "model.hpp"

namespace jmpgcf {

struct MetricsReport {
    std::size_t k = 0;
    double recall = 0.0;
    double ndcg = 0.0;
    std::size_t num_users_evaluated = 0;
};

/// The k highest-scoring items not in `exclude` (sorted ascending), by descending
/// score with ties going to the lower item index.
inline std::vector<Index> rank_user(std::span<const double> scores, std::span<const Index> exclude,
                                    std::size_t k) {
    std::vector<Index> candidates;
    candidates.reserve(scores.size());
    auto ex = exclude.begin();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        while (ex != exclude.end() && *ex < i) ++ex;
        if (ex != exclude.end() && *ex == i) continue;
        candidates.push_back(static_cast<Index>(i));
    }
    auto better = [&](Index a, Index b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    };
    const std::size_t keep = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), better);
    candidates.resize(keep);
    return candidates;
}

inline std::size_t count_hits(std::span<const Index> topk, std::span<const Index> relevant) {
    std::size_t hits = 0;
    for (Index i : topk) hits += std::binary_search(relevant.begin(), relevant.end(), i);
    return hits;
}

/// |topk ∩ relevant| / |relevant|; `relevant` sorted ascending and nonempty.
inline double recall_at_k(std::span<const Index> topk, std::span<const Index> relevant) {
    if (relevant.empty()) throw ConfigError("recall is undefined for an empty relevant set");
    return static_cast<double>(count_hits(topk, relevant)) / static_cast<double>(relevant.size());
}

/// Binary-relevance NDCG with log2 discount; the ideal DCG is truncated at
/// min(|relevant|, k).
inline double ndcg_at_k(std::span<const Index> topk, std::span<const Index> relevant, std::size_t k) {
    if (relevant.empty()) throw ConfigError("ndcg is undefined for an empty relevant set");
    double dcg = 0.0;
    const std::size_t n = std::min(k, topk.size());
    for (std::size_t p = 0; p < n; ++p)
        if (std::binary_search(relevant.begin(), relevant.end(), topk[p]))
            dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    double idcg = 0.0;
    for (std::size_t p = 0; p < std::min(relevant.size(), k); ++p)
        idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    return dcg / idcg;
}

/// Full-ranking evaluation at several cutoffs. Users with an empty relevant list
/// are skipped; `exclude[u]` (sorted) is removed from u's candidates.
inline std::vector<MetricsReport> evaluate_lists(const PropagationOutput& out,
                                                 const std::vector<std::vector<Index>>& relevant,
                                                 const std::vector<std::vector<Index>>& exclude,
                                                 std::span<const std::size_t> cutoffs,
                                                 std::span<const double> weights) {
    if (cutoffs.empty()) throw ConfigError("no cutoff requested");
    if (relevant.size() != out.num_users || exclude.size() != out.num_users)
        throw DimensionError("evaluation lists do not match the number of users");
    const std::size_t max_k = *std::max_element(cutoffs.begin(), cutoffs.end());
    if (max_k == 0) throw ConfigError("cutoff must be positive");

    const ScoringTables tables = make_scoring_tables(out, weights);
    const std::size_t nc = cutoffs.size();
    std::vector<double> recall(out.num_users * nc, 0.0);
    std::vector<double> ndcg(out.num_users * nc, 0.0);

    const auto users = static_cast<std::ptrdiff_t>(out.num_users);
#pragma omp parallel
    {
        std::vector<double> scores(out.num_items);
#pragma omp for schedule(dynamic, 16)
        for (std::ptrdiff_t su = 0; su < users; ++su) {
            const auto u = static_cast<std::size_t>(su);
            if (relevant[u].empty()) continue;
            const auto urow = tables.users.row(u);
            for (std::size_t i = 0; i < out.num_items; ++i) scores[i] = dot(urow, tables.items.row(i));
            const auto top = rank_user(scores, exclude[u], max_k);
            for (std::size_t c = 0; c < nc; ++c) {
                const std::size_t k = cutoffs[c];
                const std::span<const Index> head(top.data(), std::min(k, top.size()));
                recall[u * nc + c] = recall_at_k(head, relevant[u]);
                ndcg[u * nc + c] = ndcg_at_k(head, relevant[u], k);
            }
        }
    }

    std::size_t evaluated = 0;
    for (const auto& r : relevant) evaluated += !r.empty();
    if (evaluated == 0) throw Error("no user has a nonempty relevant list to evaluate");

    std::vector<MetricsReport> reports;
    for (std::size_t c = 0; c < nc; ++c) {
        MetricsReport rep{cutoffs[c], 0.0, 0.0, evaluated};
        for (std::size_t u = 0; u < out.num_users; ++u) {
            rep.recall += recall[u * nc + c];
            rep.ndcg += ndcg[u * nc + c];
        }
        rep.recall /= static_cast<double>(evaluated);
        rep.ndcg /= static_cast<double>(evaluated);
        reports.push_back(rep);
    }
    return reports;
}

/// Test-set Recall@k / NDCG@k with training items excluded from the candidates.
inline MetricsReport evaluate(const PropagationOutput& out, const InteractionDataset& ds,
                              std::size_t k, std::span<const double> weights) {
    const std::size_t cutoffs[] = {k};
    return evaluate_lists(out, ds.test, ds.train, cutoffs, weights).front();
}

/// Training-replay metrics: the training items are the relevant set and nothing
/// is excluded.
inline MetricsReport evaluate_training_replay(const PropagationOutput& out,
                                              const InteractionDataset& ds, std::size_t k,
                                              std::span<const double> weights) {
    const std::size_t cutoffs[] = {k};
    const std::vector<std::vector<Index>> none(ds.num_users);
    return evaluate_lists(out, ds.train, none, cutoffs, weights).front();
}

}  // namespace jmpgcf
