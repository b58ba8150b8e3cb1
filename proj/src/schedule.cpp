#include "texpaint/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace texpaint {

namespace {

Error schedule_error(const std::string &what) { return Error("schedule", what); }

void check_shapes(const Grid &a, const Grid &b) {
    if (!a.same_shape(b)) throw schedule_error("latent shapes do not match");
}

void check_timestep(const NoiseSchedule &s, int t) {
    if (t < 0 || t > s.total_steps()) throw schedule_error("timestep " + std::to_string(t) + " out of range");
}

} // namespace

void fill_normal(Grid &g, Rng &rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double &v : g.values()) v = normal(rng);
}

double NoiseSchedule::sigma(int t, int t_prev, double eta) const {
    const double ab = alpha_bar(t);
    const double ab_prev = alpha_bar(t_prev);
    if (eta == 0.0 || ab >= 1.0) return 0.0;
    return eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(std::max(0.0, 1.0 - ab / ab_prev));
}

bool NoiseSchedule::is_visited(int t) const { return std::find(steps_.begin(), steps_.end(), t) != steps_.end(); }

int NoiseSchedule::previous_step(int t) const {
    for (int s : steps_)
        if (s < t) return s;
    return 0;
}

std::string NoiseSchedule::to_table() const {
    std::ostringstream out;
    out.precision(17);
    out << "# t beta alpha alpha_bar visited\n";
    for (int t = 0; t <= total_; ++t)
        out << t << ' ' << betas_[t] << ' ' << alphas_[t] << ' ' << alpha_bars_[t] << ' ' << (is_visited(t) ? 1 : 0) << '\n';
    return out.str();
}

NoiseSchedule make_schedule(int total_steps, double beta_min, double beta_max, int num_steps) {
    if (total_steps < 1) throw schedule_error("total timesteps must be at least 1");
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
        throw schedule_error("need 0 < beta_min <= beta_max < 1");
    if (num_steps < 1 || num_steps > total_steps) throw schedule_error("num_steps must be in [1, T]");

    NoiseSchedule s;
    s.total_ = total_steps;
    s.betas_.assign(total_steps + 1, 0.0);
    s.alphas_.assign(total_steps + 1, 1.0);
    s.alpha_bars_.assign(total_steps + 1, 1.0);
    for (int t = 1; t <= total_steps; ++t) {
        const double frac = total_steps == 1 ? 0.0 : static_cast<double>(t - 1) / (total_steps - 1);
        s.betas_[t] = beta_min + (beta_max - beta_min) * frac;
        s.alphas_[t] = 1.0 - s.betas_[t];
        s.alpha_bars_[t] = s.alpha_bars_[t - 1] * s.alphas_[t];
    }
    for (int k = num_steps; k >= 1; --k) {
        const long long num = static_cast<long long>(k) * total_steps;
        s.steps_.push_back(static_cast<int>((2 * num + num_steps) / (2LL * num_steps)));
    }
    return s;
}

LatentGrid ddim_predict_z0(const LatentGrid &z_t, const LatentGrid &eps, int t, const NoiseSchedule &s) {
    check_shapes(z_t, eps);
    check_timestep(s, t);
    const double ab = s.alpha_bar(t);
    const double noise_scale = std::sqrt(1.0 - ab);
    const double inv_signal = 1.0 / std::sqrt(ab);
    LatentGrid out = z_t;
    out.timestep = t;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (z_t[i] - noise_scale * eps[i]) * inv_signal;
    return out;
}

LatentGrid ddim_mean(const LatentGrid &z0_bar, const LatentGrid &eps, int t, int t_prev, const NoiseSchedule &s, double eta) {
    check_shapes(z0_bar, eps);
    check_timestep(s, t);
    check_timestep(s, t_prev);
    if (t_prev >= t) throw schedule_error("ddim step needs t_prev < t");
    const double ab_prev = s.alpha_bar(t_prev);
    const double sigma = s.sigma(t, t_prev, eta);
    const double dir2 = 1.0 - ab_prev - sigma * sigma;
    if (dir2 < -1e-12)
        throw schedule_error("sigma^2 = " + std::to_string(sigma * sigma) + " exceeds 1 - alpha_bar(t_prev) = " + std::to_string(1.0 - ab_prev));
    const double a = std::sqrt(ab_prev);
    const double b = std::sqrt(std::max(0.0, dir2));
    LatentGrid out = z0_bar;
    out.timestep = t_prev;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * z0_bar[i] + b * eps[i];
    return out;
}

LatentGrid ddim_step(const LatentGrid &z0_bar, const LatentGrid &eps, int t, int t_prev, const NoiseSchedule &s, double eta, Rng &rng) {
    LatentGrid out = ddim_mean(z0_bar, eps, t, t_prev, s, eta);
    const double sigma = s.sigma(t, t_prev, eta);
    if (sigma > 0.0) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double &v : out.values()) v += sigma * normal(rng);
    }
    return out;
}

LatentGrid ddpm_mean(const LatentGrid &z_t, const LatentGrid &eps, int t, const NoiseSchedule &s, int t_prev) {
    check_shapes(z_t, eps);
    if (t < 1) throw schedule_error("ddpm step needs t >= 1");
    check_timestep(s, t);
    if (t_prev < 0) t_prev = t - 1;
    if (t_prev >= t) throw schedule_error("ddpm step needs t_prev < t");
    const double alpha = s.alpha_bar(t) / s.alpha_bar(t_prev);
    const double beta = 1.0 - alpha;
    const double k = beta / std::sqrt(1.0 - s.alpha_bar(t));
    const double inv = 1.0 / std::sqrt(alpha);
    LatentGrid out = z_t;
    out.timestep = t_prev;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (z_t[i] - k * eps[i]) * inv;
    return out;
}

LatentGrid ddpm_step(const LatentGrid &z_t, const LatentGrid &eps, int t, const NoiseSchedule &s, Rng &rng, int t_prev,
                     DdpmVariance variance) {
    if (t_prev < 0) t_prev = t - 1;
    LatentGrid out = ddpm_mean(z_t, eps, t, s, t_prev);
    if (t_prev == 0) return out;
    const double beta = 1.0 - s.alpha_bar(t) / s.alpha_bar(t_prev);
    const double var = variance == DdpmVariance::Beta ? beta : beta * (1.0 - s.alpha_bar(t_prev)) / (1.0 - s.alpha_bar(t));
    const double stddev = std::sqrt(var);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double &v : out.values()) v += stddev * normal(rng);
    return out;
}

std::pair<LatentGrid, LatentGrid> forward_noise(const LatentGrid &z0, int t, const NoiseSchedule &s, Rng &rng) {
    check_timestep(s, t);
    LatentGrid eps = z0;
    fill_normal(eps, rng);
    const double a = std::sqrt(s.alpha_bar(t));
    const double b = std::sqrt(1.0 - s.alpha_bar(t));
    LatentGrid zt = z0;
    zt.timestep = t;
    for (std::size_t i = 0; i < zt.size(); ++i) zt[i] = a * z0[i] + b * eps[i];
    return {std::move(zt), std::move(eps)};
}

} // namespace texpaint
