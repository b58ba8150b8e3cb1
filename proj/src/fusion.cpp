#include "texpaint/fusion.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace texpaint {

namespace {

Error fusion_error(const std::string &what) { return Error("fusion", what); }

Grid l1_grad_grid(const Grid &pred, const Grid &target) {
    Grid g(pred.height(), pred.width(), pred.channels());
    g.values() = l1_grad(pred.values(), target.values(), Reduction::Mean);
    return g;
}

} // namespace

WeightField::WeightField(std::size_t texels, int cameras)
    : texels_(texels), cameras_(cameras), weight_(texels * cameras, 0.0), pixel_(texels * cameras, -1) {}

int WeightField::visible_count(std::size_t texel) const noexcept {
    int n = 0;
    for (int c = 0; c < cameras_; ++c) n += visible(texel, c) ? 1 : 0;
    return n;
}

std::vector<double> WeightField::normalized(std::size_t texel) const {
    std::vector<double> w(cameras_, 0.0);
    std::vector<double> terms;
    for (int c = 0; c < cameras_; ++c)
        if (visible(texel, c)) terms.push_back(weight(texel, c));
    std::sort(terms.begin(), terms.end());
    const double sum = std::accumulate(terms.begin(), terms.end(), 0.0);
    if (!(sum > 0.0)) return {};
    for (int c = 0; c < cameras_; ++c)
        if (visible(texel, c)) w[c] = weight(texel, c) / sum;
    return w;
}

WeightField compute_view_weights(const TexelTable &table, const std::vector<Camera> &cameras, const std::vector<DepthMap> &depth_maps,
                                 int workers) {
    if (cameras.size() != depth_maps.size()) throw fusion_error("need one depth map per camera");
    WeightField field(table.size(), static_cast<int>(cameras.size()));
    parallel_for(static_cast<int>(cameras.size()), workers, [&](int ci) {
        const Camera &cam = cameras[ci];
        for (std::size_t u = 0; u < table.size(); ++u) {
            const Texel &t = table[u];
            if (!t.valid) continue;
            const auto proj = project_texel(table, cam, depth_maps[ci], u);
            if (!proj) continue;
            const double w = (cam.position - t.world).normalized().dot(t.normal);
            if (!(w > 0.0)) continue;
            field.set(u, ci, w, proj->y * cam.width + proj->x);
        }
    });
    return field;
}

FusedGrid fuse_grids(const std::vector<const Grid *> &views, const WeightField &weights, const TexelTable &table, const Grid *previous,
                     double fill) {
    if (views.size() != static_cast<std::size_t>(weights.camera_count())) throw fusion_error("need one view per camera");
    if (weights.texel_count() != table.size()) throw fusion_error("weight field does not match texel table");
    const int channels = views.empty() ? 3 : views.front()->channels();
    for (const Grid *v : views)
        if (v->channels() != channels) throw fusion_error("views disagree on channel count");

    FusedGrid out{Grid(table.height(), table.width(), channels, fill), std::vector<std::uint8_t>(table.size(), 0)};
    if (previous) {
        if (previous->height() != table.height() || previous->width() != table.width() || previous->channels() != channels)
            throw fusion_error("previous texture does not match texel table");
        out.values = *previous;
    }

    // (weight, values...) per visible camera, sorted so the sum does not depend on camera order.
    std::vector<double> rows;
    std::vector<std::size_t> order;
    const std::size_t stride = static_cast<std::size_t>(channels) + 1;
    for (std::size_t u = 0; u < table.size(); ++u) {
        if (!table[u].valid) continue;
        rows.clear();
        for (int c = 0; c < weights.camera_count(); ++c) {
            if (!weights.visible(u, c)) continue;
            const int p = weights.pixel(u, c);
            rows.push_back(weights.weight(u, c));
            for (int ch = 0; ch < channels; ++ch) rows.push_back((*views[c])[static_cast<std::size_t>(p) * channels + ch]);
        }
        const std::size_t n = rows.size() / stride;
        if (n == 0) continue;
        order.resize(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(rows.begin() + a * stride, rows.begin() + (a + 1) * stride, rows.begin() + b * stride,
                                                rows.begin() + (b + 1) * stride);
        });
        double den = 0.0;
        for (std::size_t k : order) den += rows[k * stride];
        for (int ch = 0; ch < channels; ++ch) {
            double num = 0.0;
            for (std::size_t k : order) num += rows[k * stride] * rows[k * stride + 1 + ch];
            out.values[u * channels + ch] = num / den;
        }
        out.covered[u] = 1;
    }
    return out;
}

Texture fuse_color(const std::vector<ImageView> &views, const WeightField &weights, const TexelTable &table, const Texture *previous,
                   Rgb fill) {
    std::vector<const Grid *> ptrs;
    for (const ImageView &v : views) {
        if (v.channels() != 3) throw fusion_error("color views must have 3 channels");
        ptrs.push_back(&v);
    }
    Texture tex(table, previous ? previous->fill_color : fill);
    FusedGrid fused = fuse_grids(ptrs, weights, table, previous ? static_cast<const Grid *>(previous) : static_cast<const Grid *>(&tex));
    static_cast<Grid &>(tex) = std::move(fused.values);
    tex.covered = std::move(fused.covered);
    tex.reset_invalid();
    return tex;
}

double LatentOptimizeResult::initial_total() const { return std::accumulate(initial_loss.begin(), initial_loss.end(), 0.0); }
double LatentOptimizeResult::final_total() const { return std::accumulate(final_loss.begin(), final_loss.end(), 0.0); }

double latent_l1(const LatentCodec &codec, const LatentGrid &z, const ImageView &target) {
    const ImageView x = codec.decode(z);
    if (!x.same_shape(target)) throw fusion_error("target image does not match the codec image shape");
    return l1_loss(x.values(), target.values(), Reduction::Mean);
}

namespace {

struct ViewRun {
    LatentGrid z;
    std::vector<double> trace;
    double final_loss = 0.0;
};

ViewRun descend(const LatentGrid &z0, const ImageView &target, const LatentCodec &codec, AdamWConfig cfg, int view) {
    ViewRun run{z0, {}, 0.0};
    OptimizerState state(cfg, z0.size());
    for (int it = 0; it <= cfg.iterations; ++it) {
        const ImageView x = codec.decode(run.z);
        const double loss = l1_loss(x.values(), target.values(), Reduction::Mean);
        if (!std::isfinite(loss)) throw fusion_error("non-finite latent loss at view " + std::to_string(view) + ", iteration " + std::to_string(it));
        run.trace.push_back(loss);
        if (it == cfg.iterations) {
            run.final_loss = loss;
            break;
        }
        const LatentGrid grad = codec.decode_vjp(run.z, l1_grad_grid(x, target));
        adamw_step(run.z.values(), grad.values(), state);
    }
    return run;
}

} // namespace

LatentOptimizeResult optimize_latents(const LatentStack &z0_hats, const std::vector<ImageView> &targets, const LatentCodec &codec,
                                      const AdamWConfig &cfg, int workers) {
    if (z0_hats.size() != targets.size()) throw fusion_error("need one target per latent");
    const std::size_t n = z0_hats.size();
    LatentOptimizeResult res;
    res.latents.resize(n);
    res.traces.resize(n);
    res.initial_loss.resize(n);
    res.final_loss.resize(n);
    res.retries.assign(n, 0);
    parallel_for(static_cast<int>(n), workers, [&](int i) {
        ViewRun run = descend(z0_hats[i], targets[i], codec, cfg, i);
        const double initial = run.trace.front();
        if (run.final_loss > initial) {
            AdamWConfig slower = cfg;
            slower.lr *= 0.1;
            run = descend(z0_hats[i], targets[i], codec, slower, i);
            res.retries[i] = 1;
            if (run.final_loss > initial) {
                spdlog::warn("fusion: view {} did not descend after retry; keeping its initial latent", i);
                run.z = z0_hats[i];
                run.final_loss = initial;
                run.trace.push_back(initial);
            }
        }
        run.z.timestep = z0_hats[i].timestep;
        run.z.view = z0_hats[i].view;
        res.latents[i] = std::move(run.z);
        res.traces[i] = std::move(run.trace);
        res.initial_loss[i] = initial;
        res.final_loss[i] = run.final_loss;
    });
    return res;
}

LatentOptimizeResult optimize_latents(const LatentStack &z0_hats, const Texture &fused, const Mesh &mesh, const TexelTable &table,
                                      const std::vector<Camera> &cameras, const LatentCodec &codec, const AdamWConfig &cfg, Rgb background,
                                      int workers) {
    if (cameras.size() != z0_hats.size()) throw fusion_error("need one camera per latent");
    std::vector<ImageView> targets;
    for (const Camera &c : cameras) targets.push_back(render_color(mesh, fused, table, c, background));
    return optimize_latents(z0_hats, targets, codec, cfg, workers);
}

ViewRenderer make_view_renderer(const Mesh &mesh, const TexelTable &table, const Camera &camera) {
    const Raster r = rasterize(mesh, camera);
    return {map_pixels_to_texels(mesh, r, table), camera.width, camera.height, camera.id};
}

double joint_objective(const LatentStack &z_bars, const std::vector<ImageView> &hat_images, const Texture &tex,
                       const std::vector<ViewRenderer> &renderers, const LatentCodec &codec, Rgb background) {
    double total = 0.0;
    for (std::size_t i = 0; i < z_bars.size(); ++i) {
        const ImageView r = renderers[i].render(tex, background);
        total += latent_l1(codec, z_bars[i], r) + l1_loss(hat_images[i].values(), r.values(), Reduction::Mean);
    }
    return total;
}

JointResult joint_optimize(const LatentStack &z0_hats, const Texture &texture_init, const std::vector<ViewRenderer> &renderers,
                           const LatentCodec &codec, const JointConfig &cfg, Rgb background, int workers) {
    const std::size_t n = z0_hats.size();
    if (renderers.size() != n) throw fusion_error("need one renderer per latent");
    std::vector<ImageView> hat_images(n);
    parallel_for(static_cast<int>(n), workers, [&](int i) { hat_images[i] = codec.decode(z0_hats[i]); });

    LatentStack z = z0_hats;
    Texture tex = texture_init;
    std::vector<OptimizerState> latent_states;
    for (std::size_t i = 0; i < n; ++i) latent_states.emplace_back(cfg.adam, z[i].size());
    OptimizerState texture_state(cfg.adam, tex.size());

    JointResult best{z, tex, 0.0, 0.0, {}};
    best.initial_objective = joint_objective(z, hat_images, tex, renderers, codec, background);
    if (!std::isfinite(best.initial_objective)) throw fusion_error("non-finite joint objective");
    best.final_objective = best.initial_objective;
    double current = best.initial_objective;
    auto consider = [&] {
        best.trace.push_back(current);
        if (current < best.final_objective) {
            best.final_objective = current;
            best.latents = z;
            best.texture = tex;
        }
    };

    for (int round = 0; round < cfg.rounds; ++round) {
        // Latents with the texture fixed.
        std::vector<ImageView> renders(n);
        for (std::size_t i = 0; i < n; ++i) renders[i] = renderers[i].render(tex, background);
        parallel_for(static_cast<int>(n), workers, [&](int i) {
            for (int it = 0; it < cfg.adam.iterations; ++it) {
                const ImageView x = codec.decode(z[i]);
                const LatentGrid g = codec.decode_vjp(z[i], l1_grad_grid(x, renders[i]));
                adamw_step(z[i].values(), g.values(), latent_states[i]);
            }
        });
        current = joint_objective(z, hat_images, tex, renderers, codec, background);
        if (!std::isfinite(current)) throw fusion_error("non-finite joint objective in latent phase");
        consider();

        // Texture with the latents fixed.
        std::vector<ImageView> decoded(n);
        parallel_for(static_cast<int>(n), workers, [&](int i) { decoded[i] = codec.decode(z[i]); });
        for (int it = 0; it < cfg.adam.iterations; ++it) {
            std::vector<long long> counts(tex.size(), 0);
            double scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const ImageView r = renderers[i].render(tex, background);
                scale = 1.0 / static_cast<double>(r.size());
                const auto &map = renderers[i].pixel_texels;
                for (std::size_t p = 0; p < map.size(); ++p) {
                    const int t = map[p];
                    if (t < 0 || !tex.valid[t]) continue;
                    for (int ch = 0; ch < 3; ++ch) {
                        const double rv = r[p * 3 + ch];
                        for (const ImageView *img : {&decoded[i], &hat_images[i]}) {
                            const double d = rv - (*img)[p * 3 + ch];
                            counts[static_cast<std::size_t>(t) * 3 + ch] += (d > 0.0) - (d < 0.0);
                        }
                    }
                }
            }
            std::vector<double> grad(tex.size());
            for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = static_cast<double>(counts[k]) * scale;
            adamw_step(tex.values(), grad, texture_state);
        }
        current = joint_objective(z, hat_images, tex, renderers, codec, background);
        if (!std::isfinite(current)) throw fusion_error("non-finite joint objective in texture phase");
        consider();
    }
    return best;
}

LatentBlendResult blend_latent_texture(const LatentStack &latents, const WeightField &latent_weights, const TexelTable &latent_table,
                                       const std::vector<ViewRenderer> &latent_renderers) {
    if (latents.size() != latent_renderers.size()) throw fusion_error("need one latent renderer per view");
    std::vector<const Grid *> ptrs;
    for (const LatentGrid &z : latents) ptrs.push_back(&z);
    LatentBlendResult res{fuse_grids(ptrs, latent_weights, latent_table), latents};
    for (std::size_t i = 0; i < latents.size(); ++i) {
        LatentGrid &z = res.latents[i];
        const auto &map = latent_renderers[i].pixel_texels;
        if (map.size() != z.pixel_count()) throw fusion_error("latent renderer does not match latent size");
        const int channels = z.channels();
        for (std::size_t p = 0; p < map.size(); ++p) {
            const int t = map[p];
            if (t < 0 || !res.latent_texture.covered[t]) continue;
            for (int ch = 0; ch < channels; ++ch) z[p * channels + ch] = res.latent_texture.values[static_cast<std::size_t>(t) * channels + ch];
        }
    }
    return res;
}

} // namespace texpaint
