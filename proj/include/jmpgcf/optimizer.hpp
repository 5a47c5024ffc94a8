#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dense.hpp"
#include "error.hpp"

namespace jmpgcf {

enum class OptimizerKind { adam, sgd };

inline OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

inline const char* to_string(OptimizerKind kind) {
    return kind == OptimizerKind::adam ? "adam" : "sgd";
}

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw ConfigError("adam betas must lie in [0, 1)");
        if (!(eps > 0.0)) throw ConfigError("adam epsilon must be positive");
    }
};

/// Per-table first-order optimizer. Adam keeps moments and a step count for
/// each table, so a table that starts training late gets its own bias correction.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    const OptimizerConfig& config() const noexcept { return cfg_; }

    /// Updates params[t] from grads[t] for every t in `tables`. Gradients are
    /// checked for finiteness before anything is modified.
    void step(std::vector<DenseMatrix>& params, const std::vector<DenseMatrix>& grads,
              std::span<const int> tables) {
        if (params.size() != grads.size()) throw DimensionError("params/grads table count mismatch");
        for (int t : tables) {
            const auto& g = grads.at(static_cast<std::size_t>(t));
            if (!g.same_shape(params[static_cast<std::size_t>(t)]))
                throw DimensionError("gradient shape mismatch in table " + std::to_string(t));
            const auto vals = g.values();
            for (std::size_t p = 0; p < vals.size(); ++p)
                if (!std::isfinite(vals[p]))
                    throw NumericalError("non-finite gradient in table " + std::to_string(t) +
                                         " at row " + std::to_string(p / g.cols()) + ", column " +
                                         std::to_string(p % g.cols()));
        }
        if (state_.size() < params.size()) state_.resize(params.size());
        for (int t : tables) {
            auto& param = params[static_cast<std::size_t>(t)];
            const auto& grad = grads[static_cast<std::size_t>(t)];
            if (cfg_.kind == OptimizerKind::sgd)
                axpy(-cfg_.learning_rate, grad.values(), param.values());
            else
                adam_update(state_[static_cast<std::size_t>(t)], param, grad);
        }
    }

    /// Number of updates applied to table t so far (Adam only).
    long steps(std::size_t t) const { return t < state_.size() ? state_[t].steps : 0; }

private:
    struct Moments {
        DenseMatrix m;
        DenseMatrix v;
        long steps = 0;
    };

    void adam_update(Moments& s, DenseMatrix& param, const DenseMatrix& grad) const {
        if (!s.m.same_shape(param)) {
            s.m = DenseMatrix(param.rows(), param.cols());
            s.v = DenseMatrix(param.rows(), param.cols());
        }
        ++s.steps;
        const double b1 = cfg_.beta1;
        const double b2 = cfg_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.steps));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.steps));
        auto p = param.values();
        auto m = s.m.values();
        auto v = s.v.values();
        const auto g = grad.values();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }

    OptimizerConfig cfg_;
    std::vector<Moments> state_;
};

}  // namespace jmpgcf
