#pragma once

#include "texpaint/geometry.hpp"
#include "texpaint/grids.hpp"
#include "texpaint/models.hpp"
#include "texpaint/optim.hpp"
#include "texpaint/render.hpp"

#include <optional>
#include <vector>

namespace texpaint {

using LatentStack = std::vector<LatentGrid>;

/// Per-texel, per-camera weights w = max(0, <(c - T(u)) / |c - T(u)|, n(u)>)
/// masked by visibility, together with the nearest pixel each visible
/// camera samples for that texel.
class WeightField {
public:
    WeightField() = default;
    WeightField(std::size_t texels, int cameras);

    std::size_t texel_count() const noexcept { return texels_; }
    int camera_count() const noexcept { return cameras_; }

    double weight(std::size_t texel, int cam) const noexcept { return weight_[texel * cameras_ + cam]; }
    bool visible(std::size_t texel, int cam) const noexcept { return pixel_[texel * cameras_ + cam] >= 0; }
    /// Flat pixel index y * width + x, or -1 when not visible.
    int pixel(std::size_t texel, int cam) const noexcept { return pixel_[texel * cameras_ + cam]; }
    int visible_count(std::size_t texel) const noexcept;

    void set(std::size_t texel, int cam, double w, int pixel) noexcept {
        weight_[texel * cameras_ + cam] = w;
        pixel_[texel * cameras_ + cam] = pixel;
    }

    /// Weights of visible cameras divided by their sum; empty if none visible.
    std::vector<double> normalized(std::size_t texel) const;

private:
    std::size_t texels_ = 0;
    int cameras_ = 0;
    std::vector<double> weight_;
    std::vector<int> pixel_;
};

/// Visible means project_texel succeeds and the cosine is strictly positive.
WeightField compute_view_weights(const TexelTable &table, const std::vector<Camera> &cameras, const std::vector<DepthMap> &depth_maps,
                                 int workers = 1);

/// Weighted average over visible cameras of each view's nearest pixel. The
/// denominator sums visible cameras only. Texels without a visible camera
/// keep `previous` (or the fill color) and stay uncovered. The reduction is
/// independent of camera order.
Texture fuse_color(const std::vector<ImageView> &views, const WeightField &weights, const TexelTable &table,
                   const Texture *previous = nullptr, Rgb fill = {});

/// Same reduction for any channel count; returns a texel grid (height x width x channels)
/// plus coverage flags.
struct FusedGrid {
    Grid values;
    std::vector<std::uint8_t> covered;
};
FusedGrid fuse_grids(const std::vector<const Grid *> &views, const WeightField &weights, const TexelTable &table, const Grid *previous = nullptr,
                     double fill = 0.0);

struct LatentOptimizeResult {
    LatentStack latents;
    /// Per view: loss before each iteration, then the final loss.
    std::vector<std::vector<double>> traces;
    std::vector<double> initial_loss;
    std::vector<double> final_loss;
    std::vector<int> retries;

    double initial_total() const;
    double final_total() const;
};

/// Mean L1 between D(z) and target.
double latent_l1(const LatentCodec &codec, const LatentGrid &z, const ImageView &target);

/// Per view, AdamW on mean |D(z) - target| starting from z0_hats. Views are
/// independent. If a view ends above its initial loss it is rerun once with a
/// tenth of the learning rate, then falls back to its initial latent.
LatentOptimizeResult optimize_latents(const LatentStack &z0_hats, const std::vector<ImageView> &targets, const LatentCodec &codec,
                                      const AdamWConfig &cfg, int workers = 1);

/// Convenience form: targets are renders of `fused` from each camera.
LatentOptimizeResult optimize_latents(const LatentStack &z0_hats, const Texture &fused, const Mesh &mesh, const TexelTable &table,
                                      const std::vector<Camera> &cameras, const LatentCodec &codec, const AdamWConfig &cfg,
                                      Rgb background = {}, int workers = 1);

struct ViewRenderer {
    std::vector<int> pixel_texels; // per pixel, -1 for background
    int width = 0;
    int height = 0;
    int camera = -1;

    ImageView render(const Texture &tex, Rgb background) const {
        return render_color(pixel_texels, width, height, tex, background, camera);
    }
};

ViewRenderer make_view_renderer(const Mesh &mesh, const TexelTable &table, const Camera &camera);

struct JointConfig {
    AdamWConfig adam;
    int rounds = 2;
};

struct JointResult {
    LatentStack latents;
    Texture texture;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    std::vector<double> trace; // objective after each phase
};

/// Objective sum_i L(D(z_bar_i), R_i(I)) + L(D(z_hat_i), R_i(I)).
double joint_objective(const LatentStack &z_bars, const std::vector<ImageView> &hat_images, const Texture &tex,
                       const std::vector<ViewRenderer> &renderers, const LatentCodec &codec, Rgb background);

/// Alternating descent: each round runs AdamW on the latents with the texture
/// fixed, then AdamW on the valid texels with the latents fixed. Texture
/// gradients scatter the residual signs through each view's pixel->texel map
/// with integer accumulation. Returns the best iterate seen.
JointResult joint_optimize(const LatentStack &z0_hats, const Texture &texture_init, const std::vector<ViewRenderer> &renderers,
                           const LatentCodec &codec, const JointConfig &cfg, Rgb background = {}, int workers = 1);

struct LatentBlendResult {
    FusedGrid latent_texture;
    LatentStack latents;
};

/// Ablation: blend latents into a latent-resolution texture with the color
/// fusion rule, then read each view back through its pixel->texel map.
/// Uncovered latent pixels keep their input value.
LatentBlendResult blend_latent_texture(const LatentStack &latents, const WeightField &latent_weights, const TexelTable &latent_table,
                                       const std::vector<ViewRenderer> &latent_renderers);

} // namespace texpaint
