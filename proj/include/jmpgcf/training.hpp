#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eval.hpp"
#include "graph.hpp"
#include "layers.hpp"
#include "loss.hpp"
#include "model.hpp"
#include "optimizer.hpp"
#include "sampler.hpp"

namespace jmpgcf {

/// Coarse-to-fine stacked schedule: phase p (1-based) introduces granularity
/// K-p+1 and keeps training every granularity introduced before it.
struct PhaseSchedule {
    int max_granularity = 2;
    std::vector<std::size_t> epochs{300, 300, 300};

    static PhaseSchedule uniform(int max_granularity, std::size_t epochs_per_phase) {
        return {max_granularity,
                std::vector<std::size_t>(static_cast<std::size_t>(max_granularity) + 1, epochs_per_phase)};
    }

    int num_phases() const { return max_granularity + 1; }
    int granularity(int phase) const { return max_granularity - phase + 1; }
    std::vector<int> active(int phase) const { return phase_granularities(max_granularity, phase); }

    std::size_t total_epochs() const {
        std::size_t total = 0;
        for (auto e : epochs) total += e;
        return total;
    }

    void validate() const {
        if (max_granularity < 0) throw ConfigError("schedule K must be non-negative");
        if (epochs.size() != static_cast<std::size_t>(num_phases()))
            throw ConfigError("schedule needs one epoch budget per phase");
    }
};

struct TrainConfig {
    OptimizerConfig optimizer;
    double l2_coeff = 1e-4;
    std::size_t batch_size = 2048;
    std::uint64_t seed = 0;
    RegularizationScope reg_scope = RegularizationScope::batch_rows;
    bool shared_base = false;
    std::size_t eval_every = 0;  // epochs between validation passes, 0 disables
    std::size_t topk = 20;

    void validate() const {
        optimizer.validate();
        if (!(l2_coeff >= 0.0)) throw ConfigError("l2 coefficient must be non-negative");
        if (batch_size < 1) throw ConfigError("batch size must be at least 1");
        if (topk < 1) throw ConfigError("topk must be at least 1");
    }
};

struct EpochRecord {
    int phase = 0;
    int epoch = 0;  // counted across phases, starting at 1
    double loss = 0.0;  // mean per-triple objective over the epoch's steps
    std::optional<MetricsReport> metrics;
    double wallclock_s = 0.0;
};

class Trainer {
public:
    Trainer(const InteractionDataset& ds, const PropagationMatrices& mats, ModelParameters& params,
            SelectedLayers layers, PhaseSchedule schedule, TrainConfig cfg)
        : ds_(ds),
          mats_(mats),
          params_(params),
          layers_(layers),
          schedule_(std::move(schedule)),
          cfg_(cfg),
          sampler_(ds),
          optimizer_(cfg.optimizer),
          rng_(cfg.seed) {
        cfg_.validate();
        schedule_.validate();
        layers_.validate();
        params_.validate();
        if (schedule_.max_granularity != params_.max_granularity())
            throw ConfigError("schedule and parameters disagree on K");
        if (params_.num_users != ds.num_users || params_.num_items != ds.num_items)
            throw DimensionError("parameters do not match the dataset shape");
    }

    /// Dataset whose test lists are scored every `eval_every` epochs.
    void set_validation(const InteractionDataset* validation) { validation_ = validation; }

    std::function<void(const EpochRecord&)> on_epoch;
    std::function<void(int phase, int epoch, const ModelParameters&)> on_phase_end;

    std::size_t steps_per_epoch() const {
        return std::max<std::size_t>(1, (ds_.num_train_interactions + cfg_.batch_size - 1) / cfg_.batch_size);
    }

    /// One optimizer step on a fresh batch; returns the batch's mean per-triple objective.
    double step(std::span<const int> active) {
        const PropagationOutput out = propagate(params_, mats_, layers_, active);
        const auto batch = sampler_.sample_batch(cfg_.batch_size, rng_);
        const double inv_batch = 1.0 / static_cast<double>(batch.size());
        const double loss =
            separated_bpr_loss(out, batch, active, cfg_.l2_coeff, cfg_.reg_scope) * inv_batch;
        if (!std::isfinite(loss)) throw NumericalError("training loss became non-finite");
        auto grads = backward(out, mats_, batch, active, cfg_.l2_coeff, cfg_.reg_scope, inv_batch);

        if (cfg_.shared_base) {
            // One shared table used by every granularity: sum the per-k gradients
            // and apply the same update to every copy.
            DenseMatrix total(grads.front().rows(), grads.front().cols());
            for (int k : active) axpy(1.0, grads[static_cast<std::size_t>(k)].values(), total.values());
            for (auto& g : grads) g = total;
            const auto all = all_granularities(params_.max_granularity());
            optimizer_.step(params_.base, grads, all);
        } else {
            optimizer_.step(params_.base, grads, active);
        }
        return loss;
    }

    std::vector<EpochRecord> run() {
        const auto start = std::chrono::steady_clock::now();
        std::vector<EpochRecord> log;
        int epoch = 0;
        for (int phase = 1; phase <= schedule_.num_phases(); ++phase) {
            const auto active = schedule_.active(phase);
            const auto budget = schedule_.epochs[static_cast<std::size_t>(phase - 1)];
            for (std::size_t e = 0; e < budget; ++e) {
                ++epoch;
                double total = 0.0;
                const std::size_t steps = steps_per_epoch();
                for (std::size_t s = 0; s < steps; ++s) total += step(active);

                EpochRecord rec{phase, epoch, total / static_cast<double>(steps), std::nullopt, 0.0};
                if (validation_ && cfg_.eval_every > 0 && epoch % static_cast<int>(cfg_.eval_every) == 0) {
                    const auto out = propagate(params_, mats_, layers_, active);
                    rec.metrics = evaluate(out, *validation_, cfg_.topk,
                                           params_.popularity.granularity_weights);
                }
                rec.wallclock_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                if (on_epoch) on_epoch(rec);
                log.push_back(std::move(rec));
            }
            if (on_phase_end) on_phase_end(phase, epoch, params_);
        }
        return log;
    }

private:
    const InteractionDataset& ds_;
    const PropagationMatrices& mats_;
    ModelParameters& params_;
    SelectedLayers layers_;
    PhaseSchedule schedule_;
    TrainConfig cfg_;
    TripleSampler sampler_;
    Optimizer optimizer_;
    std::mt19937_64 rng_;
    const InteractionDataset* validation_ = nullptr;
};

/// Runs the full stacked schedule in place on `params`.
inline std::vector<EpochRecord> train(const InteractionDataset& ds, const PropagationMatrices& mats,
                                      ModelParameters& params, const PhaseSchedule& schedule,
                                      const TrainConfig& cfg, const SelectedLayers& layers) {
    Trainer trainer(ds, mats, params, layers, schedule, cfg);
    return trainer.run();
}

}  // namespace jmpgcf
