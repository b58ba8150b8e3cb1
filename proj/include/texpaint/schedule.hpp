#pragma once

#include "texpaint/grids.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace texpaint {

using Rng = std::mt19937_64;

/// Fills g with independent standard normal samples.
void fill_normal(Grid &g, Rng &rng);

/// Linear-beta noise schedule over timesteps 1..T, with t = 0 the clean
/// state (alpha_bar(0) = 1). Arrays are indexed by timestep, size T + 1.
class NoiseSchedule {
public:
    int total_steps() const noexcept { return total_; }
    double alpha(int t) const { return alphas_.at(t); }
    double alpha_bar(int t) const { return alpha_bars_.at(t); }
    double beta(int t) const { return betas_.at(t); }

    /// DDIM noise scale for the jump t -> t_prev:
    /// eta * sqrt((1 - ab_prev) / (1 - ab_t)) * sqrt(1 - ab_t / ab_prev).
    double sigma(int t, int t_prev, double eta) const;

    /// Visited timesteps, descending, starting at T. The terminal t = 0 is
    /// not part of this list.
    const std::vector<int> &steps() const noexcept { return steps_; }
    bool is_visited(int t) const;
    /// Next visited timestep below t, or 0 after the last one.
    int previous_step(int t) const;

    /// Plain-text table: t beta alpha alpha_bar visited.
    std::string to_table() const;

private:
    friend NoiseSchedule make_schedule(int, double, double, int);
    int total_ = 0;
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;
    std::vector<double> betas_;
    std::vector<int> steps_;
};

/// Linear beta ramp from beta_min (t = 1) to beta_max (t = T); num_steps
/// visited timesteps round(k T / num_steps), k = 1..num_steps.
NoiseSchedule make_schedule(int total_steps, double beta_min, double beta_max, int num_steps);

/// Noiseless prediction z0_hat = (z_t - sqrt(1 - ab_t) eps) / sqrt(ab_t).
LatentGrid ddim_predict_z0(const LatentGrid &z_t, const LatentGrid &eps, int t, const NoiseSchedule &s);

/// One DDIM jump t -> t_prev from a (possibly adjusted) noiseless latent:
/// sqrt(ab_prev) z0 + sqrt(1 - ab_prev - sigma^2) eps + sigma * noise.
/// With eta = 0 the rng is not touched.
LatentGrid ddim_step(const LatentGrid &z0_bar, const LatentGrid &eps, int t, int t_prev, const NoiseSchedule &s, double eta, Rng &rng);

/// Deterministic part of ddim_step.
LatentGrid ddim_mean(const LatentGrid &z0_bar, const LatentGrid &eps, int t, int t_prev, const NoiseSchedule &s, double eta);

enum class DdpmVariance { Beta, Posterior };

/// Ancestral DDPM step t -> t_prev (t_prev = t - 1 by default). For jumps over
/// several timesteps the per-jump alpha = ab_t / ab_prev is used. No noise is
/// added on the final step into t = 0.
LatentGrid ddpm_step(const LatentGrid &z_t, const LatentGrid &eps, int t, const NoiseSchedule &s, Rng &rng, int t_prev = -1,
                     DdpmVariance variance = DdpmVariance::Beta);
LatentGrid ddpm_mean(const LatentGrid &z_t, const LatentGrid &eps, int t, const NoiseSchedule &s, int t_prev = -1);

/// z_t = sqrt(ab_t) z0 + sqrt(1 - ab_t) eps with fresh eps; returns both.
std::pair<LatentGrid, LatentGrid> forward_noise(const LatentGrid &z0, int t, const NoiseSchedule &s, Rng &rng);

} // namespace texpaint
