#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace texpaint {

struct AdamWConfig {
    int iterations = 20;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct OptimizerState {
    AdamWConfig config;
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    explicit OptimizerState(AdamWConfig cfg = {}, std::size_t size = 0) : config(cfg), m(size, 0.0), v(size, 0.0) {}
};

/// Bias-corrected AdamW update in place. Weight decay is decoupled and only
/// applied when positive. Throws on non-finite gradients or shape mismatch.
void adamw_step(std::span<double> params, std::span<const double> grads, OptimizerState &state);

/// params -= lr * grads.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

enum class Reduction { Mean, Sum };

/// Subgradient of the L1 distance: sign(pred - target), zero at exact ties,
/// divided by the element count for mean reduction.
std::vector<double> l1_grad(std::span<const double> pred, std::span<const double> target, Reduction reduction = Reduction::Mean);

double l1_loss(std::span<const double> pred, std::span<const double> target, Reduction reduction = Reduction::Mean);

} // namespace texpaint
