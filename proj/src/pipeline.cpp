#include "texpaint/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>

namespace texpaint {

namespace {

Error pipeline_error(const std::string &what) { return Error("pipeline", what); }

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) out.push_back(item);
    return out;
}

} // namespace

std::string to_string(PredictorKind k) { return k == PredictorKind::Toy ? "toy" : "oracle"; }

std::string to_string(CodecKind k) {
    switch (k) {
    case CodecKind::Identity: return "identity";
    case CodecKind::Affine: return "affine";
    case CodecKind::Nonlinear: return "nonlinear";
    }
    return "?";
}

std::string to_string(Variant v) {
    switch (v) {
    case Variant::Main: return "main";
    case Variant::LatentBlend: return "latent-blend";
    case Variant::DdpmFusion: return "ddpm-fusion";
    case Variant::DirectEncode: return "direct-encode";
    }
    return "?";
}

Variant parse_variant(const std::string &name) {
    for (Variant v : {Variant::Main, Variant::LatentBlend, Variant::DdpmFusion, Variant::DirectEncode})
        if (to_string(v) == name) return v;
    throw pipeline_error("unknown variant '" + name + "' (expected main, latent-blend, ddpm-fusion or direct-encode)");
}

void RunConfig::validate() const {
    auto fail = [](const std::string &key, const std::string &why) { throw Error("config", key + ": " + why); };
    if (cameras < 1) fail("cameras", "need at least one camera");
    if (!(radius > 0.0)) fail("radius", "must be positive");
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) fail("fov", "must be in (0, 180)");
    if (image_size < 1) fail("image_size", "must be positive");
    if (texture_size < 1) fail("texture_size", "must be positive");
    if (latent.height < 1 || latent.width < 1 || latent.channels < 1) fail("latent", "must be positive");
    if (steps < 1 || steps > train_steps) fail("steps", "must be in [1, train_steps]");
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) fail("beta_min", "need 0 < beta_min <= beta_max < 1");
    if (eta < 0.0) fail("eta", "must be non-negative");
    if (adam.iterations < 0) fail("adam_iterations", "must be non-negative");
    if (!(adam.lr > 0.0)) fail("adam_lr", "must be positive");
    if (sgd.iterations < 0) fail("sgd_iterations", "must be non-negative");
    if (workers < 1) fail("threads", "must be at least 1");
    if (joint_rounds < 1) fail("joint_rounds", "must be at least 1");
    if (prompts.empty()) fail("prompts", "need at least one prompt");
    if (codec == CodecKind::Identity) {
        if (latent.height != image_size || latent.width != image_size || latent.channels != 3)
            fail("latent", "identity codec needs latent " + std::to_string(image_size) + "x" + std::to_string(image_size) + "x3");
    } else {
        if (image_size % latent.height != 0 || image_size % latent.width != 0 || latent.height != latent.width)
            fail("latent", "image_size must be an integer multiple of a square latent");
        const int f = image_size / latent.height;
        if (3 * f * f < latent.channels) fail("latent_channels", "more latent channels than pixels per latent cell");
    }
    if (!camera_prompts.empty()) {
        if (static_cast<int>(camera_prompts.size()) != cameras)
            fail("camera_prompts", "need exactly one prompt per camera (" + std::to_string(cameras) + ")");
        for (int p : camera_prompts)
            if (p < 0 || p >= static_cast<int>(prompts.size())) fail("camera_prompts", "prompt index " + std::to_string(p) + " out of range");
    }
    if (predictor == PredictorKind::Oracle && oracle_targets.size() != 1 && oracle_targets.size() != prompts.size())
        fail("oracle_targets", "need one target or one per prompt");
}

int RunConfig::prompt_of(int camera_id) const {
    if (camera_prompts.empty()) return 0;
    return camera_prompts.at(camera_id);
}

Scene build_scene(Mesh mesh, std::vector<Camera> cameras, int texture_width, int texture_height, int workers) {
    Scene s;
    s.mesh = std::move(mesh);
    s.cameras = std::move(cameras);
    s.table = build_texel_table(s.mesh, texture_width, texture_height);
    s.depths.resize(s.cameras.size());
    s.renderers.resize(s.cameras.size());
    parallel_for(static_cast<int>(s.cameras.size()), workers, [&](int i) {
        const Raster r = rasterize(s.mesh, s.cameras[i]);
        s.renderers[i] = {map_pixels_to_texels(s.mesh, r, s.table), s.cameras[i].width, s.cameras[i].height, s.cameras[i].id};
        s.depths[i] = r.depth;
    });
    s.weights = compute_view_weights(s.table, s.cameras, s.depths, workers);
    return s;
}

Texture make_pattern_texture(const std::string &name, const TexelTable &table, Rgb fill) {
    Texture tex(table, fill);
    auto paint = [&](auto color) {
        for (int y = 0; y < table.height(); ++y) {
            for (int x = 0; x < table.width(); ++x) {
                const std::size_t i = table.index(x, y);
                if (!table[i].valid) continue;
                const Rgb c = color(x, y, table[i]);
                tex.set(i, 0, c.r);
                tex.set(i, 1, c.g);
                tex.set(i, 2, c.b);
            }
        }
    };
    auto constant = [&](Rgb c) { paint([c](int, int, const Texel &) { return c; }); };
    if (name == "smooth") {
        const Vec3 a(0.8, 0.5, 0.3), b(-0.4, 0.9, 0.2), c(0.3, -0.2, 0.93);
        paint([&](int, int, const Texel &t) {
            return Rgb{0.5 + 0.3 * std::sin(2.5 * a.dot(t.world) + 0.3), 0.5 + 0.3 * std::sin(2.5 * b.dot(t.world) + 1.7),
                       0.5 + 0.3 * std::sin(2.5 * c.dot(t.world) - 0.9)};
        });
    } else if (name == "checker") {
        paint([&](int x, int y, const Texel &) {
            const bool on = ((x * 8 / table.width()) + (y * 8 / table.height())) % 2 == 0;
            return on ? Rgb{0.9, 0.9, 0.9} : Rgb{0.1, 0.1, 0.1};
        });
    } else if (name == "red") {
        constant({0.9, 0.1, 0.1});
    } else if (name == "blue") {
        constant({0.1, 0.1, 0.9});
    } else if (name == "green") {
        constant({0.1, 0.9, 0.1});
    } else if (name == "gray") {
        constant({0.5, 0.5, 0.5});
    } else if (name == "white") {
        constant({1.0, 1.0, 1.0});
    } else if (name == "black") {
        constant({0.0, 0.0, 0.0});
    } else if (name.rfind("constant:", 0) == 0) {
        const auto parts = split(name.substr(9), ',');
        if (parts.size() != 3) throw pipeline_error("constant pattern needs r,g,b");
        constant({std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])});
    } else {
        throw pipeline_error("unknown texture pattern '" + name + "'");
    }
    tex.covered.assign(tex.covered.size(), 1);
    return tex;
}

Mesh load_run_mesh(const std::string &source) {
    if (source == "builtin:quad") return normalize_mesh(make_quad());
    if (source == "builtin:cube") return normalize_mesh(make_cube());
    if (source == "builtin:icosphere") return normalize_mesh(make_icosphere());
    if (!std::filesystem::exists(source)) throw pipeline_error("mesh file '" + source + "' does not exist");
    return normalize_mesh(load_mesh(source));
}

CodecPtr make_codec(const RunConfig &cfg) {
    const ImageShape image{cfg.image_size, cfg.image_size};
    const std::uint64_t seed = cfg.base_seed * 7919 + 17;
    switch (cfg.codec) {
    case CodecKind::Identity: return identity_codec(image);
    case CodecKind::Affine: return affine_codec(cfg.latent, image, seed, CodecNonlinearity::None);
    case CodecKind::Nonlinear: return affine_codec(cfg.latent, image, seed, CodecNonlinearity::Tanh);
    }
    throw pipeline_error("unknown codec");
}

Backend make_backend(const RunConfig &cfg, const Scene &scene, const NoiseSchedule &schedule) {
    Backend b;
    b.codec = make_codec(cfg);
    const int n = static_cast<int>(scene.cameras.size());
    PredictorPtr toy;
    if (cfg.predictor == PredictorKind::Toy) toy = toy_denoiser(cfg.base_seed * 7919 + 29, b.codec->latent_shape(), schedule);
    std::map<std::string, Texture> targets;
    for (int i = 0; i < n; ++i) {
        const Camera &cam = scene.cameras[i];
        const int p = cfg.prompt_of(cam.id);
        b.prompt_index.push_back(p);
        b.embeddings.push_back(embed_prompt(cfg.prompts.at(p)));
        if (cfg.predictor == PredictorKind::Toy) {
            b.predictors.push_back(toy);
            continue;
        }
        const std::string &pattern = cfg.oracle_targets.size() == 1 ? cfg.oracle_targets.front() : cfg.oracle_targets.at(p);
        auto it = targets.find(pattern);
        if (it == targets.end()) it = targets.emplace(pattern, make_pattern_texture(pattern, scene.table, cfg.background)).first;
        const ImageView view = scene.renderers[i].render(it->second, cfg.background);
        b.predictors.push_back(oracle_predictor(b.codec->encode(view), schedule));
    }
    return b;
}

std::vector<double> cross_view_variances(const std::vector<ImageView> &views, const WeightField &weights, const TexelTable &table) {
    std::vector<double> out;
    for (std::size_t u = 0; u < table.size(); ++u) {
        if (!table[u].valid || weights.visible_count(u) < 2) continue;
        double var = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
            double sum = 0.0, sum2 = 0.0;
            int n = 0;
            for (int c = 0; c < weights.camera_count(); ++c) {
                if (!weights.visible(u, c)) continue;
                const double v = views[c][static_cast<std::size_t>(weights.pixel(u, c)) * 3 + ch];
                sum += v;
                ++n;
            }
            const double mean = sum / n;
            for (int c = 0; c < weights.camera_count(); ++c) {
                if (!weights.visible(u, c)) continue;
                const double d = views[c][static_cast<std::size_t>(weights.pixel(u, c)) * 3 + ch] - mean;
                sum2 += d * d;
            }
            var += sum2 / n;
        }
        out.push_back(var / 3.0);
    }
    return out;
}

VarianceStats summarize_variances(std::vector<double> values) {
    VarianceStats s;
    s.count = values.size();
    if (values.empty()) return s;
    // Sorting first makes the mean independent of input order.
    std::sort(values.begin(), values.end());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    const std::size_t k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(values.size()))) - 1;
    s.p95 = values[std::min(k, values.size() - 1)];
    return s;
}

ConsistencyReport consistency_report(const Texture &final_texture, const std::vector<ImageView> &final_views, const Scene &scene,
                                     Rgb background, const std::vector<int> &view_prompt) {
    if (final_views.size() != scene.cameras.size()) throw pipeline_error("need one final view per camera");
    ConsistencyReport r;
    const VarianceStats stats = summarize_variances(cross_view_variances(final_views, scene.weights, scene.table));
    r.variance_mean = stats.mean;
    r.variance_p95 = stats.p95;
    r.shared_texels = stats.count;
    r.valid_texels = scene.table.valid_count();
    for (std::size_t u = 0; u < scene.table.size(); ++u)
        if (scene.table[u].valid && scene.weights.visible_count(u) > 0) ++r.covered_texels;

    double fg_sum = 0.0;
    std::size_t fg_count = 0;
    for (std::size_t i = 0; i < final_views.size(); ++i) {
        const ImageView render = scene.renderers[i].render(final_texture, background);
        r.view_l_diff.push_back(l1_loss(final_views[i].values(), render.values(), Reduction::Mean));
        const auto &map = scene.renderers[i].pixel_texels;
        for (std::size_t p = 0; p < map.size(); ++p) {
            if (map[p] < 0) continue;
            for (int ch = 0; ch < 3; ++ch) fg_sum += std::abs(final_views[i][p * 3 + ch] - render[p * 3 + ch]);
            fg_count += 3;
        }
    }
    r.rerender_l1 = fg_count > 0 ? fg_sum / static_cast<double>(fg_count) : 0.0;

    r.view_prompt = view_prompt.empty() ? std::vector<int>(final_views.size(), 0) : view_prompt;
    const int sets = *std::max_element(r.view_prompt.begin(), r.view_prompt.end()) + 1;
    std::vector<double> sum(sets, 0.0);
    std::vector<int> count(sets, 0);
    for (std::size_t i = 0; i < r.view_l_diff.size(); ++i) {
        sum[r.view_prompt[i]] += r.view_l_diff[i];
        ++count[r.view_prompt[i]];
    }
    for (int s = 0; s < sets; ++s) r.set_l_diff.push_back(count[s] > 0 ? sum[s] / count[s] : 0.0);
    return r;
}

std::string ConsistencyReport::to_text() const {
    std::ostringstream out;
    out.precision(10);
    out << "variance_mean=" << variance_mean << '\n'
        << "variance_p95=" << variance_p95 << '\n'
        << "shared_texels=" << shared_texels << '\n'
        << "covered_texels=" << covered_texels << '\n'
        << "valid_texels=" << valid_texels << '\n'
        << "rerender_l1=" << rerender_l1 << '\n';
    for (std::size_t s = 0; s < set_l_diff.size(); ++s) out << "set_l_diff." << s << '=' << set_l_diff[s] << '\n';
    out << "\n[views]\nview,prompt,l_diff\n";
    for (std::size_t i = 0; i < view_l_diff.size(); ++i) out << i << ',' << view_prompt[i] << ',' << view_l_diff[i] << '\n';
    return out.str();
}

ReconstructResult reconstruct_final_texture(const std::vector<ImageView> &final_views, const WeightField &weights, const TexelTable &table,
                                            const Texture &init, const SgdConfig &sgd, int workers) {
    if (final_views.size() != static_cast<std::size_t>(weights.camera_count())) throw pipeline_error("need one final view per camera");
    ReconstructResult res{init, 0.0, 0.0};
    std::vector<double> initial(table.size(), 0.0), final(table.size(), 0.0);
    std::vector<std::uint8_t> covered(table.size(), 0);
    const int rows = table.height();
    parallel_for(rows, workers, [&](int y) {
        std::vector<std::pair<double, double>> terms;
        for (int x = 0; x < table.width(); ++x) {
            const std::size_t u = table.index(x, y);
            if (!table[u].valid) continue;
            const std::vector<double> w = weights.normalized(u);
            if (w.empty()) continue;
            covered[u] = 1;
            for (int ch = 0; ch < 3; ++ch) {
                terms.clear();
                for (int c = 0; c < weights.camera_count(); ++c)
                    if (weights.visible(u, c)) terms.emplace_back(w[c], final_views[c][static_cast<std::size_t>(weights.pixel(u, c)) * 3 + ch]);
                // Sorted terms make every sum below independent of camera order.
                std::sort(terms.begin(), terms.end());
                auto loss = [&](double v) {
                    double l = 0.0;
                    for (const auto &[wk, sk] : terms) l += wk * std::abs(v - sk);
                    return l;
                };
                double v = init.get(u, ch);
                double best = v, best_loss = loss(v);
                initial[u] += best_loss / 3.0;
                for (int it = 0; it < sgd.iterations; ++it) {
                    double g = 0.0;
                    for (const auto &[wk, sk] : terms) g += wk * ((v > sk) - (v < sk));
                    v -= sgd.lr * g;
                    const double l = loss(v);
                    if (l < best_loss) {
                        best_loss = l;
                        best = v;
                    }
                }
                res.texture.set(u, ch, best);
                final[u] += best_loss / 3.0;
            }
        }
    });
    const std::size_t n = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1));
    if (n > 0) {
        res.initial_loss = std::accumulate(initial.begin(), initial.end(), 0.0) / static_cast<double>(n);
        res.final_loss = std::accumulate(final.begin(), final.end(), 0.0) / static_cast<double>(n);
    }
    res.texture.covered = covered;
    dilate_uncovered(res.texture);
    return res;
}

PaintOptions paint_options(const RunConfig &cfg) {
    PaintOptions o;
    o.eta = cfg.eta;
    o.guidance = cfg.guidance;
    o.adam = cfg.adam;
    o.sgd = cfg.sgd;
    o.joint = cfg.joint;
    o.joint_rounds = cfg.joint_rounds;
    o.variant = cfg.variant;
    o.background = cfg.background;
    o.base_seed = cfg.base_seed;
    o.workers = cfg.workers;
    return o;
}

namespace {

struct LatentScene {
    TexelTable table;
    WeightField weights;
    std::vector<ViewRenderer> renderers;
};

LatentScene build_latent_scene(const Scene &scene, const LatentCodec &codec, int texture_size) {
    const LatentShape ls = codec.latent_shape();
    const ImageShape is = codec.image_shape();
    if (texture_size <= 0) texture_size = std::max(1, scene.table.width() * ls.width / is.width);
    std::vector<Camera> cams = scene.cameras;
    for (Camera &c : cams) {
        c.width = ls.width;
        c.height = ls.height;
    }
    Scene latent = build_scene(scene.mesh, cams, texture_size, texture_size);
    return {std::move(latent.table), std::move(latent.weights), std::move(latent.renderers)};
}

void check_finite(const LatentStack &z, int t, const char *what) {
    for (std::size_t i = 0; i < z.size(); ++i)
        if (!z[i].all_finite()) throw pipeline_error(std::string("non-finite ") + what + " at timestep " + std::to_string(t) + ", view " + std::to_string(i));
}

std::vector<ImageView> decode_all(const LatentCodec &codec, const LatentStack &z, int workers) {
    std::vector<ImageView> out(z.size());
    parallel_for(static_cast<int>(z.size()), workers, [&](int i) { out[i] = codec.decode(z[i]); });
    return out;
}

} // namespace

PaintResult run_texpaint(const Scene &scene, const Backend &backend, const NoiseSchedule &schedule, const PaintOptions &opts) {
    const int n = static_cast<int>(scene.cameras.size());
    if (n < 1) throw pipeline_error("need at least one camera");
    if (static_cast<int>(backend.predictors.size()) != n || static_cast<int>(backend.embeddings.size()) != n)
        throw pipeline_error("need one predictor and prompt embedding per camera");
    const LatentCodec &codec = *backend.codec;
    const ImageShape is = codec.image_shape();
    for (const Camera &c : scene.cameras)
        if (c.width != is.width || c.height != is.height) throw pipeline_error("camera image size does not match the codec");
    if (opts.variant == Variant::DirectEncode && !codec.can_encode())
        throw pipeline_error("direct-encode needs a codec with an encoder (" + codec.name() + " has none)");

    LatentScene latent_scene;
    if (opts.variant == Variant::LatentBlend) latent_scene = build_latent_scene(scene, codec, opts.latent_texture_size);

    // Independent z_T and noise stream per view, keyed by camera id.
    std::vector<Rng> rngs;
    LatentStack z(n);
    for (int i = 0; i < n; ++i) {
        rngs.emplace_back(opts.base_seed + static_cast<std::uint64_t>(scene.cameras[i].id));
        z[i] = codec.zero_latent();
        fill_normal(z[i], rngs.back());
        z[i].timestep = schedule.total_steps();
        z[i].view = i;
    }

    PaintResult res;
    Texture fused(scene.table, opts.background);
    std::vector<int> timeline = schedule.steps();
    timeline.push_back(0);
    int step_index = 0;
    for (int t : timeline) {
        const int t_prev = t == 0 ? 0 : schedule.previous_step(t);
        LatentStack eps(n);
        parallel_for(n, opts.workers, [&](int i) {
            eps[i] = backend.predictors[i]->predict(z[i], t, scene.depths[i], backend.embeddings[i], opts.guidance);
        });
        check_finite(eps, t, "noise prediction");

        StepRecord rec;
        rec.t = t;
        rec.t_prev = t_prev;

        // The DDPM ablation fuses the decoded noisy latents themselves.
        LatentStack pred(n);
        if (opts.variant == Variant::DdpmFusion) {
            pred = z;
        } else {
            parallel_for(n, opts.workers, [&](int i) { pred[i] = ddim_predict_z0(z[i], eps[i], t, schedule); });
        }
        check_finite(pred, t, "noiseless prediction");
        std::vector<ImageView> views = decode_all(codec, pred, opts.workers);
        fused = fuse_color(views, scene.weights, scene.table, &fused);
        if (opts.on_fused) opts.on_fused(t, fused);
        rec.before = summarize_variances(cross_view_variances(views, scene.weights, scene.table));

        if (t == 0) {
            res.alg1_texture = fused;
            res.final_views = views;
            res.final_latents = pred;
            rec.after = rec.before;
            res.steps.push_back(rec);
            if (opts.on_step) opts.on_step(rec);
            break;
        }

        LatentStack adjusted;
        switch (opts.variant) {
        case Variant::Main:
        case Variant::DdpmFusion: {
            if (opts.joint && opts.variant == Variant::Main) {
                JointResult jr = joint_optimize(pred, fused, scene.renderers, codec, {opts.adam, opts.joint_rounds}, opts.background, opts.workers);
                adjusted = std::move(jr.latents);
                fused = std::move(jr.texture);
                rec.loss_before = jr.initial_objective;
                rec.loss_after = jr.final_objective;
                for (std::size_t k = 0; k < jr.trace.size(); ++k) res.loss_trace.push_back({step_index, -1, static_cast<int>(k), jr.trace[k]});
            } else {
                std::vector<ImageView> targets(n);
                for (int i = 0; i < n; ++i) targets[i] = scene.renderers[i].render(fused, opts.background);
                LatentOptimizeResult opt = optimize_latents(pred, targets, codec, opts.adam, opts.workers);
                rec.loss_before = opt.initial_total();
                rec.loss_after = opt.final_total();
                for (int i = 0; i < n; ++i)
                    for (std::size_t k = 0; k < opt.traces[i].size(); ++k)
                        res.loss_trace.push_back({step_index, i, static_cast<int>(k), opt.traces[i][k]});
                adjusted = std::move(opt.latents);
            }
            break;
        }
        case Variant::LatentBlend:
            adjusted = blend_latent_texture(pred, latent_scene.weights, latent_scene.table, latent_scene.renderers).latents;
            break;
        case Variant::DirectEncode:
            adjusted.resize(n);
            parallel_for(n, opts.workers, [&](int i) {
                adjusted[i] = codec.encode(scene.renderers[i].render(fused, opts.background));
                adjusted[i].timestep = pred[i].timestep;
                adjusted[i].view = i;
            });
            break;
        }
        check_finite(adjusted, t, "adjusted latent");
        rec.after = summarize_variances(cross_view_variances(decode_all(codec, adjusted, opts.workers), scene.weights, scene.table));
        res.steps.push_back(rec);
        if (opts.on_step) opts.on_step(rec);

        parallel_for(n, opts.workers, [&](int i) {
            if (opts.variant == Variant::DdpmFusion)
                z[i] = ddpm_step(adjusted[i], eps[i], t, schedule, rngs[i], t_prev);
            else
                z[i] = ddim_step(adjusted[i], eps[i], t, t_prev, schedule, opts.eta, rngs[i]);
            z[i].view = i;
        });
        check_finite(z, t_prev, "latent");
        ++step_index;
    }

    ReconstructResult rec = reconstruct_final_texture(res.final_views, scene.weights, scene.table, res.alg1_texture, opts.sgd, opts.workers);
    res.final_texture = std::move(rec.texture);
    res.reconstruct_initial_loss = rec.initial_loss;
    res.reconstruct_final_loss = rec.final_loss;
    res.report = consistency_report(res.final_texture, res.final_views, scene, opts.background, backend.prompt_index);
    return res;
}

Scene build_run_scene(const RunConfig &cfg) {
    Mesh mesh = load_run_mesh(cfg.mesh);
    auto cams = sample_cameras(cfg.cameras, cfg.radius, cfg.pitch_deg, cfg.fov_deg, cfg.image_size, cfg.image_size);
    return build_scene(std::move(mesh), std::move(cams), cfg.texture_size, cfg.texture_size, cfg.workers);
}

PaintResult texpaint(const RunConfig &cfg) {
    cfg.validate();
    const Scene scene = build_run_scene(cfg);
    const NoiseSchedule schedule = make_schedule(cfg.train_steps, cfg.beta_min, cfg.beta_max, cfg.steps);
    const Backend backend = make_backend(cfg, scene, schedule);
    return run_texpaint(scene, backend, schedule, paint_options(cfg));
}

PaintResult texpaint_multiprompt(const RunConfig &cfg) {
    if (static_cast<int>(cfg.camera_prompts.size()) < cfg.cameras)
        throw pipeline_error("camera " + std::to_string(cfg.camera_prompts.size()) + " has no prompt assignment");
    return texpaint(cfg);
}

PaintResult run_ablation(const RunConfig &cfg, Variant variant) {
    RunConfig c = cfg;
    c.variant = variant;
    return texpaint(c);
}

} // namespace texpaint
