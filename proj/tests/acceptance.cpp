// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "texpaint/config.hpp"
#include "texpaint/fusion.hpp"
#include "texpaint/image_io.hpp"
#include "texpaint/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace texpaint;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

double max_abs_diff(const Grid &a, const Grid &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Mean absolute difference over texels visible from at least one camera.
double covered_l1(const Texture &a, const Texture &b, const Scene &scene) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t u = 0; u < scene.table.size(); ++u) {
        if (!scene.table[u].valid || scene.weights.visible_count(u) == 0) continue;
        for (int c = 0; c < 3; ++c) sum += std::abs(a.get(u, c) - b.get(u, c));
        n += 3;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

struct Setup {
    RunConfig cfg;
    Scene scene;
    NoiseSchedule schedule;
    Backend backend;
};

Setup make_setup(const RunConfig &cfg) {
    cfg.validate();
    Setup s{cfg, build_run_scene(cfg), make_schedule(cfg.train_steps, cfg.beta_min, cfg.beta_max, cfg.steps), {}};
    s.backend = make_backend(cfg, s.scene, s.schedule);
    return s;
}

PaintResult run(const Setup &s, const std::function<void(PaintOptions &)> &tweak = {}) {
    PaintOptions o = paint_options(s.cfg);
    if (tweak) tweak(o);
    return run_texpaint(s.scene, s.backend, s.schedule, o);
}

RunConfig oracle_config() {
    RunConfig c = preset_config("oracle");
    c.cameras = 4;
    c.texture_size = 128;
    c.steps = 10;
    c.eta = 0.0;
    return c;
}

/// Cameras 0-1 are asked for one texture, cameras 2-3 for another.
RunConfig two_target_config(const std::string &a, const std::string &b, CodecKind codec) {
    RunConfig c = oracle_config();
    c.prompts = {"set a", "set b"};
    c.camera_prompts = {0, 0, 1, 1};
    c.oracle_targets = {a, b};
    c.codec = codec;
    if (codec != CodecKind::Identity) c.latent = {16, 16, 4};
    return c;
}

Outcome ddim_inversion() {
    const NoiseSchedule s = make_schedule(1000, 1e-4, 2e-2, 10);
    Rng rng(7);
    std::uniform_int_distribution<int> pick_t(1, s.total_steps());
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        LatentGrid z0(16, 16, 4);
        fill_normal(z0, rng);
        const int t = pick_t(rng);
        const auto [zt, eps] = forward_noise(z0, t, s, rng);
        worst = std::max(worst, max_abs_diff(ddim_predict_z0(zt, eps, t, s), z0));
    }
    return {worst <= 1e-5, "max abs error " + num(worst) + " (limit 1e-5)"};
}

Outcome oracle_end_to_end() {
    const Setup s = make_setup(oracle_config());
    const PaintResult r = run(s);
    const Texture target = make_pattern_texture("smooth", s.scene.table, s.cfg.background);
    const double l1 = covered_l1(r.final_texture, target, s.scene);
    const double var = r.report.variance_mean;
    return {l1 <= 0.02 && var <= 1e-4, "texture L1 " + num(l1) + " (limit 0.02), variance " + num(var) + " (limit 1e-4)"};
}

Outcome gradient_exactness() {
    const LatentShape ls{16, 16, 4};
    const ImageShape is{64, 64};
    struct Case {
        CodecPtr codec;
        double limit;
    };
    const std::vector<Case> cases = {{identity_codec(is), 1e-4},
                                     {affine_codec(ls, is, 3, CodecNonlinearity::None), 1e-8},
                                     {affine_codec(ls, is, 3, CodecNonlinearity::Tanh), 1e-4}};
    bool ok = true;
    std::string detail;
    for (const Case &c : cases) {
        Rng rng(11);
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            LatentGrid z = c.codec->zero_latent(), v = c.codec->zero_latent();
            fill_normal(z, rng);
            fill_normal(v, rng);
            Grid w(is.height, is.width, 3);
            fill_normal(w, rng);
            const double h = 1e-5;
            LatentGrid zp = z, zm = z;
            for (std::size_t i = 0; i < z.size(); ++i) {
                zp[i] += h * v[i];
                zm[i] -= h * v[i];
            }
            const ImageView xp = c.codec->decode(zp), xm = c.codec->decode(zm);
            double fd = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) fd += w[i] * (xp[i] - xm[i]) / (2.0 * h);
            const LatentGrid g = c.codec->decode_vjp(z, w);
            double an = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) an += g[i] * v[i];
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-12}));
        }
        ok = ok && worst <= c.limit;
        detail += c.codec->name() + " " + num(worst) + " (limit " + num(c.limit) + ") ";
    }
    return {ok, detail};
}

Outcome fusion_arithmetic() {
    // Single camera facing a quad, constant red image.
    const Mesh quad = make_quad();
    // Odd width puts a column of texel centers on the symmetry plane of the two-camera case.
    const TexelTable table = build_texel_table(quad, 33, 33);
    Camera cam;
    cam.position = {0.0, 0.0, 2.0};
    const WeightField one = compute_view_weights(table, {cam}, {render_depth(quad, cam)});
    ImageView red(cam.height, cam.width);
    for (std::size_t p = 0; p < red.pixel_count(); ++p) red[p * 3] = 1.0;
    const Texture single = fuse_color({red}, one, table);
    double err1 = 0.0;
    std::size_t visible = 0;
    for (std::size_t u = 0; u < table.size(); ++u) {
        if (!table[u].valid || one.visible_count(u) == 0) continue;
        ++visible;
        err1 = std::max({err1, std::abs(single.get(u, 0) - 1.0), std::abs(single.get(u, 1)), std::abs(single.get(u, 2))});
    }

    // Two cameras mirrored about the quad normal, white and black images.
    Camera left = cam, right = cam;
    left.position = {-1.0, 0.0, 1.5};
    right.position = {1.0, 0.0, 1.5};
    right.id = 1;
    const WeightField two = compute_view_weights(table, {left, right}, {render_depth(quad, left), render_depth(quad, right)});
    const Texture mixed = fuse_color({ImageView(64, 64, 1.0), ImageView(64, 64, 0.0)}, two, table);
    double err2 = 0.0;
    std::size_t shared = 0;
    for (std::size_t u = 0; u < table.size(); ++u) {
        if (two.visible_count(u) != 2 || std::abs(two.weight(u, 0) - two.weight(u, 1)) > 1e-12) continue;
        ++shared;
        for (int c = 0; c < 3; ++c) err2 = std::max(err2, std::abs(mixed.get(u, c) - 0.5));
    }

    // Weights (1, 0.5) on values 1.0 and 0.4.
    TexelTable tiny(1, 1);
    tiny[0].valid = true;
    WeightField w(1, 2);
    w.set(0, 0, 1.0, 0);
    w.set(0, 1, 0.5, 0);
    const Texture weighted = fuse_color({ImageView(1, 1, 1.0), ImageView(1, 1, 0.4)}, w, tiny);
    const double err3 = std::abs(weighted.get(0, 0) - 0.8);

    const bool ok = visible > 0 && shared > 0 && err1 <= 1e-6 && err2 <= 1e-6 && err3 <= 1e-6;
    return {ok, "single-view " + num(err1) + " over " + std::to_string(visible) + " texels, equal-weight " + num(err2) + " over " +
                    std::to_string(shared) + " texels, weighted " + num(err3) + " (limit 1e-6)"};
}

Outcome endpoint_descent() {
    RunConfig base = oracle_config();
    base.codec = CodecKind::Affine;
    base.latent = {16, 16, 4};
    const Scene scene = build_run_scene(base);
    const Texture smooth = make_pattern_texture("smooth", scene.table, base.background);
    std::vector<ImageView> targets;
    for (const ViewRenderer &r : scene.renderers) targets.push_back(r.render(smooth, base.background));

    int descended = 0;
    double worst_ratio = 0.0;
    for (int k = 0; k < 20; ++k) {
        const CodecNonlinearity nl = k % 2 == 0 ? CodecNonlinearity::None : CodecNonlinearity::Tanh;
        const CodecPtr codec = affine_codec({16, 16, 4}, {64, 64}, 100 + k, nl);
        Rng rng(500 + k);
        LatentStack z0(targets.size());
        for (LatentGrid &z : z0) {
            z = codec->zero_latent();
            fill_normal(z, rng);
        }
        const LatentOptimizeResult r = optimize_latents(z0, targets, *codec, AdamWConfig{});
        if (r.final_total() <= r.initial_total()) ++descended;
        worst_ratio = std::max(worst_ratio, r.final_total() / r.initial_total());
    }

    const CodecPtr identity = identity_codec({64, 64});
    Rng rng(99);
    LatentStack z0(targets.size());
    for (LatentGrid &z : z0) {
        z = identity->zero_latent();
        fill_normal(z, rng);
    }
    AdamWConfig long_run;
    long_run.iterations = 1000;
    long_run.lr = 0.005;
    const LatentOptimizeResult id = optimize_latents(z0, targets, *identity, long_run);
    double worst_l1 = 0.0;
    for (double l : id.final_loss) worst_l1 = std::max(worst_l1, l);

    return {descended == 20 && worst_l1 <= 1e-3, std::to_string(descended) + "/20 descended (worst final/initial " + num(worst_ratio) +
                                                      "), identity per-pixel L1 " + num(worst_l1) + " after 1000 iterations at lr 0.005 (limit 1e-3)"};
}

Outcome consistency_improvement() {
    const Setup s = make_setup(two_target_config("red", "blue", CodecKind::Identity));
    const PaintResult fused = run(s);
    const PaintResult independent = run(s, [](PaintOptions &o) { o.adam.iterations = 0; });
    const StepRecord &first = fused.steps.front();
    const double drop = 1.0 - first.after.mean / first.before.mean;
    const double ratio = independent.report.variance_mean / fused.report.variance_mean;
    return {drop >= 0.10 && ratio >= 2.0, "first-step variance " + num(first.before.mean) + " -> " + num(first.after.mean) + " (drop " +
                                              num(100 * drop) + "%, need 10%), final vs independent chains " + num(ratio) + "x (need 2x)"};
}

double cross_seed_variance(const Texture &a, const Texture &b, const Scene &scene) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t u = 0; u < scene.table.size(); ++u) {
        if (!scene.table[u].valid || scene.weights.visible_count(u) == 0) continue;
        for (int c = 0; c < 3; ++c) {
            const double d = 0.5 * (a.get(u, c) - b.get(u, c));
            sum += d * d;
        }
        n += 3;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

Outcome ablation_orderings() {
    std::string detail;
    bool ok = true;

    // Latent-space blending against color-space fusion.
    {
        const Setup s = make_setup(two_target_config("checker", "smooth", CodecKind::Affine));
        const double main_var = run(s).report.variance_mean;
        const double blend_var = run(s, [](PaintOptions &o) { o.variant = Variant::LatentBlend; }).report.variance_mean;
        ok = ok && blend_var > main_var;
        detail += "latent-blend " + num(blend_var) + " > main " + num(main_var) + "; ";
    }

    // Fused texture at the first (noisiest) step, two seeds.
    {
        RunConfig c;
        c.cameras = 4;
        const Setup s = make_setup(c);
        auto fused_at_top = [&](Variant v, std::uint64_t seed) {
            Texture out;
            run(s, [&](PaintOptions &o) {
                o.variant = v;
                o.base_seed = seed;
                o.on_fused = [&](int t, const Texture &tex) {
                    if (t == s.schedule.total_steps()) out = tex;
                };
            });
            return out;
        };
        const double main_var = cross_seed_variance(fused_at_top(Variant::Main, 1), fused_at_top(Variant::Main, 2), s.scene);
        const double ddpm_var = cross_seed_variance(fused_at_top(Variant::DdpmFusion, 1), fused_at_top(Variant::DdpmFusion, 2), s.scene);
        ok = ok && ddpm_var >= 2.0 * main_var;
        detail += "ddpm-fusion cross-seed " + num(ddpm_var) + " vs main " + num(main_var) + " (" + num(ddpm_var / main_var) + "x, need 2x); ";
    }

    // Encoder in place of the latent optimization, on a consistent single-target
    // scene with a latent as large as the image.
    for (CodecKind codec : {CodecKind::Nonlinear, CodecKind::Affine}) {
        RunConfig c = oracle_config();
        c.codec = codec;
        c.latent = {64, 64, 3};
        const Setup s = make_setup(c);
        const PaintResult main = run(s);
        const PaintResult enc = run(s, [](PaintOptions &o) { o.variant = Variant::DirectEncode; });
        if (codec == CodecKind::Nonlinear) {
            ok = ok && enc.report.rerender_l1 >= main.report.rerender_l1;
            detail += "nonlinear direct-encode re-render " + num(enc.report.rerender_l1) + " >= main " + num(main.report.rerender_l1) + "; ";
        } else {
            const double diff = covered_l1(main.final_texture, enc.final_texture, s.scene);
            ok = ok && diff <= 1e-3;
            detail += "invertible affine direct-encode vs main texture " + num(diff) + " (limit 1e-3)";
        }
    }
    return {ok, detail};
}

Outcome permutation_invariance() {
    RunConfig c;
    c.cameras = 4;
    const Setup s = make_setup(c);
    const PaintResult forward = run(s);

    bool ok = true;
    std::string detail;
    for (int workers : {1, 3}) {
        std::vector<Camera> cams(s.scene.cameras.rbegin(), s.scene.cameras.rend());
        const Scene rev_scene = build_scene(s.scene.mesh, cams, c.texture_size, c.texture_size, workers);
        const Backend rev_backend = make_backend(c, rev_scene, s.schedule);
        PaintOptions o = paint_options(c);
        o.workers = workers;
        const PaintResult reversed = run_texpaint(rev_scene, rev_backend, s.schedule, o);
        const bool fused_same = reversed.alg1_texture.values() == forward.alg1_texture.values();
        const double final_diff = max_abs_diff(reversed.final_texture, forward.final_texture);
        ok = ok && fused_same && final_diff <= 1e-6;
        detail += std::to_string(workers) + " worker(s): fused " + (fused_same ? "bit-identical" : "differs") + ", final max diff " + num(final_diff) +
                  "; ";
    }
    return {ok, detail};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "texpaint_acceptance_determinism";
    fs::create_directories(dir);
    RunConfig c;
    c.eta = 0.0;
    c.base_seed = 42;
    std::vector<std::string> bytes;
    for (int k = 0; k < 2; ++k) {
        const fs::path p = dir / ("texture_" + std::to_string(k) + ".png");
        write_texture_png(texpaint::texpaint(c).final_texture, p);
        std::ifstream in(p, std::ios::binary);
        bytes.emplace_back(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    fs::remove_all(dir);
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    return {same, same ? "texture PNGs bit-identical" : "texture PNGs differ"};
}

Outcome multi_prompt() {
    RunConfig single;
    single.cameras = 4;
    RunConfig multi = single;
    multi.prompts = {single.prompts.front(), single.prompts.front()};
    multi.camera_prompts = {0, 0, 1, 1};
    const bool same = texpaint_multiprompt(multi).final_texture.values() == texpaint::texpaint(single).final_texture.values();

    const Setup s = make_setup(two_target_config("red", "blue", CodecKind::Identity));
    const PaintResult r = run(s);
    const Texture red = make_pattern_texture("red", s.scene.table, s.cfg.background);
    const Texture blue = make_pattern_texture("blue", s.scene.table, s.cfg.background);
    double err[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
    for (std::size_t u = 0; u < s.scene.table.size(); ++u) {
        bool in_set[2] = {false, false};
        for (int c = 0; c < s.scene.weights.camera_count(); ++c)
            if (s.scene.weights.visible(u, c)) in_set[s.backend.prompt_index[c]] = true;
        if (in_set[0] == in_set[1]) continue;
        const int set = in_set[0] ? 0 : 1;
        const Texture &target = set == 0 ? red : blue;
        for (int c = 0; c < 3; ++c) err[set] += std::abs(r.final_texture.get(u, c) - target.get(u, c));
        count[set] += 3;
    }
    const double l1a = count[0] ? err[0] / count[0] : 1.0, l1b = count[1] ? err[1] / count[1] : 1.0;
    return {same && l1a <= 0.05 && l1b <= 0.05, std::string("identical prompts ") + (same ? "bit-exact" : "differ") + ", set-exclusive L1 " + num(l1a) +
                                                    " / " + num(l1b) + " (limit 0.05)"};
}

Outcome paper_scale_preset() {
    const RunConfig c = parse_config_text("preset = paper-scale\n");
    const RunConfig back = parse_config_text(config_echo(c));
    auto exact = [](const RunConfig &r) {
        return r.cameras == 8 && r.radius == 1.5 && r.fov_deg == 45.0 && r.pitch_deg == 30.0 && r.steps == 35 && r.adam.iterations == 20 &&
               r.adam.lr == 0.01 && r.sgd.iterations == 500 && r.image_size == 512 && r.latent == LatentShape{64, 64, 4} && r.texture_size == 1024;
    };
    const bool ok = exact(c) && exact(back) && config_echo(back) == config_echo(c);
    return {ok, ok ? "all constants load and survive the echo round trip" : "mismatch in loaded or echoed constants"};
}

} // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    struct Criterion {
        const char *name;
        double budget_s;
        Outcome (*fn)();
    };
    const Criterion criteria[] = {
        {"DDIM inversion identity", 1.0, ddim_inversion},
        {"oracle end-to-end", 60.0, oracle_end_to_end},
        {"gradient exactness", 30.0, gradient_exactness},
        {"fusion arithmetic", 0.0, fusion_arithmetic},
        {"latent optimization endpoint descent", 0.0, endpoint_descent},
        {"consistency improvement", 120.0, consistency_improvement},
        {"ablation orderings", 0.0, ablation_orderings},
        {"camera permutation invariance", 0.0, permutation_invariance},
        {"determinism", 0.0, determinism},
        {"multi-prompt", 0.0, multi_prompt},
        {"paper-scale preset", 0.0, paper_scale_preset},
    };
    int failures = 0;
    int index = 1;
    for (const Criterion &c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception &e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_s > 0.0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += " [over time budget " + num(c.budget_s) + " s]";
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", index++, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", 11 - failures, 11);
    return failures == 0 ? 0 : 1;
}
