#include "texpaint/optim.hpp"

#include "texpaint/common.hpp"

#include <cmath>

namespace texpaint {

namespace {

void check_grads(std::span<const double> params, std::span<const double> grads) {
    if (params.size() != grads.size()) throw Error("optim", "parameter and gradient sizes differ");
    for (double g : grads)
        if (!std::isfinite(g)) throw Error("optim", "non-finite gradient");
}

} // namespace

void adamw_step(std::span<double> params, std::span<const double> grads, OptimizerState &state) {
    check_grads(params, grads);
    if (state.m.size() != params.size()) {
        if (state.step != 0) throw Error("optim", "optimizer state shape does not match parameters");
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    const AdamWConfig &c = state.config;
    ++state.step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    const double decay = c.weight_decay > 0.0 ? 1.0 - c.lr * c.weight_decay : 1.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] = params[i] * decay - c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
    check_grads(params, grads);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

std::vector<double> l1_grad(std::span<const double> pred, std::span<const double> target, Reduction reduction) {
    if (pred.size() != target.size()) throw Error("optim", "l1 operands differ in size");
    const double scale = reduction == Reduction::Mean && !pred.empty() ? 1.0 / static_cast<double>(pred.size()) : 1.0;
    std::vector<double> g(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        g[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
    }
    return g;
}

double l1_loss(std::span<const double> pred, std::span<const double> target, Reduction reduction) {
    if (pred.size() != target.size()) throw Error("optim", "l1 operands differ in size");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - target[i]);
    return reduction == Reduction::Mean && !pred.empty() ? sum / static_cast<double>(pred.size()) : sum;
}

} // namespace texpaint
