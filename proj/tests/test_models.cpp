#include "texpaint/fusion.hpp"
#include "texpaint/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace texpaint;

namespace {

const NoiseSchedule &schedule() {
    static const NoiseSchedule s = make_schedule(1000, 1e-4, 2e-2, 10);
    return s;
}

LatentGrid random_grid(Rng &rng, int h, int w, int c, double scale = 1.0) {
    LatentGrid z(h, w, c);
    fill_normal(z, rng);
    for (double &v : z.values()) v *= scale;
    return z;
}

double max_abs_diff(const Grid &a, const Grid &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double dot(const Grid &a, const Grid &b) { return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0); }

/// Worst relative error of <vjp(z, g), v> against central differences of <g, D(z + h v)>.
double vjp_error(const LatentCodec &codec, int trials, std::uint64_t seed, double h = 1e-5) {
    Rng rng(seed);
    const LatentShape ls = codec.latent_shape();
    const ImageShape is = codec.image_shape();
    double worst = 0.0;
    for (int k = 0; k < trials; ++k) {
        const LatentGrid z = random_grid(rng, ls.height, ls.width, ls.channels);
        const LatentGrid v = random_grid(rng, ls.height, ls.width, ls.channels);
        const Grid g = random_grid(rng, is.height, is.width, 3);
        LatentGrid zp = z, zm = z;
        for (std::size_t i = 0; i < z.size(); ++i) {
            zp[i] += h * v[i];
            zm[i] -= h * v[i];
        }
        const double fd = (dot(g, codec.decode(zp)) - dot(g, codec.decode(zm))) / (2.0 * h);
        const double an = dot(codec.decode_vjp(z, g), v);
        worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-12}));
    }
    return worst;
}

DepthMap cube_depth(int size = 64) {
    Camera c = sample_cameras(1, 1.5, 30.0, 45.0, size, size)[0];
    return render_depth(make_cube(), c);
}

} // namespace

TEST(PromptEmbedding, UnitNormAndDeterministic) {
    const PromptEmbedding a = embed_prompt("a wooden crate"), b = embed_prompt("a wooden crate"), c = embed_prompt("a stone wall");
    ASSERT_EQ(a.values.size(), static_cast<std::size_t>(kEmbeddingDim));
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
    for (const PromptEmbedding &e : {a, c}) {
        const double norm = std::sqrt(std::inner_product(e.values.begin(), e.values.end(), e.values.begin(), 0.0));
        EXPECT_NEAR(norm, 1.0, 1e-12);
    }
}

TEST(OraclePredictor, NoiselessPredictionIsTarget) {
    Rng rng(1);
    const LatentGrid target = random_grid(rng, 8, 8, 4);
    const PredictorPtr p = oracle_predictor(target, schedule());
    for (int t : schedule().steps()) {
        const LatentGrid z = random_grid(rng, 8, 8, 4, 3.0);
        const LatentGrid eps = p->predict(z, t, DepthMap{}, embed_prompt(""), 1.0);
        EXPECT_LE(max_abs_diff(ddim_predict_z0(z, eps, t, schedule()), target), 1e-6) << "t=" << t;
    }
}

TEST(OraclePredictor, ZeroNoiseAtScaledTarget) {
    Rng rng(2);
    const LatentGrid target = random_grid(rng, 8, 8, 4);
    const PredictorPtr p = oracle_predictor(target, schedule());
    LatentGrid z = target;
    for (double &v : z.values()) v *= std::sqrt(schedule().alpha_bar(700));
    const LatentGrid eps = p->predict(z, 700, DepthMap{}, embed_prompt(""), 1.0);
    EXPECT_LE(max_abs_diff(eps, LatentGrid(8, 8, 4)), 1e-12);
}

TEST(OraclePredictor, CleanTimestepGivesZero) {
    Rng rng(3);
    const PredictorPtr p = oracle_predictor(random_grid(rng, 4, 4, 3), schedule());
    const LatentGrid eps = p->predict(random_grid(rng, 4, 4, 3), 0, DepthMap{}, embed_prompt(""), 1.0);
    for (double v : eps.values()) EXPECT_EQ(v, 0.0);
}

TEST(OraclePredictor, FullChainReachesTarget) {
    Rng rng(4);
    const LatentGrid target = random_grid(rng, 8, 8, 4);
    const PredictorPtr p = oracle_predictor(target, schedule());
    LatentGrid z = random_grid(rng, 8, 8, 4);
    for (int t : schedule().steps()) {
        const LatentGrid eps = p->predict(z, t, DepthMap{}, embed_prompt(""), 1.0);
        z = ddim_step(ddim_predict_z0(z, eps, t, schedule()), eps, t, schedule().previous_step(t), schedule(), 0.0, rng);
    }
    EXPECT_LE(max_abs_diff(z, target), 1e-4);
}

TEST(IdentityCodec, MapsAreIdentity) {
    const CodecPtr c = identity_codec({16, 16});
    Rng rng(5);
    ImageView x(16, 16);
    for (double &v : x.values()) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    EXPECT_EQ(c->decode(c->encode(x)).values(), x.values());
    const LatentGrid z = random_grid(rng, 16, 16, 3);
    const Grid g = random_grid(rng, 16, 16, 3);
    EXPECT_EQ(c->decode_vjp(z, g).values(), g.values());
    EXPECT_LE(vjp_error(*c, 10, 6), 1e-6);
    EXPECT_EQ(c->latent_shape(), (LatentShape{16, 16, 3}));
}

TEST(AffineCodec, EncodeInvertsDecode) {
    const CodecPtr c = affine_codec({16, 16, 4}, {64, 64}, 7);
    Rng rng(7);
    const LatentGrid z = random_grid(rng, 16, 16, 4);
    EXPECT_LE(max_abs_diff(c->encode(c->decode(z)), z), 1e-5);
}

TEST(AffineCodec, VjpMatchesFiniteDifferences) {
    // An affine map has no truncation error, so a large step only reduces cancellation.
    EXPECT_LE(vjp_error(*affine_codec({16, 16, 4}, {64, 64}, 8), 100, 8, 1e-2), 1e-8);
    EXPECT_LE(vjp_error(*affine_codec({16, 16, 4}, {64, 64}, 8, CodecNonlinearity::Tanh), 100, 9), 1e-4);
    EXPECT_LE(vjp_error(*affine_codec({32, 32, 3}, {64, 64}, 10, CodecNonlinearity::Tanh), 20, 10), 1e-4);
}

TEST(AffineCodec, DecodeIsAffine) {
    const auto codec = std::make_shared<AffineCodec>(LatentShape{8, 8, 4}, ImageShape{32, 32}, 11);
    Rng rng(11);
    const LatentGrid z = random_grid(rng, 8, 8, 4), zp = random_grid(rng, 8, 8, 4);
    const double a = 0.7, b = -1.9;
    LatentGrid mix(8, 8, 4);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * z[i] + b * zp[i];
    const ImageView dz = codec->decode(z), dzp = codec->decode(zp), dm = codec->decode(mix);
    const ImageView bias = codec->decode(LatentGrid(8, 8, 4));
    for (std::size_t i = 0; i < dm.size(); ++i) EXPECT_NEAR(dm[i], a * dz[i] + b * dzp[i] - (a + b - 1.0) * bias[i], 1e-6);
}

TEST(AffineCodec, NonlinearEncodeIsApproximate) {
    const CodecPtr c = affine_codec({16, 16, 4}, {64, 64}, 12, CodecNonlinearity::Tanh);
    Rng rng(12);
    const LatentGrid z = random_grid(rng, 16, 16, 4);
    const ImageView x = c->decode(z);
    const ImageView back = c->decode(c->encode(x));
    double l1 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) l1 += std::abs(back[i] - x[i]);
    l1 /= static_cast<double>(x.size());
    EXPECT_GT(l1, 0.0);
    EXPECT_LT(l1, 0.05);
}

TEST(AffineCodec, SeedDeterminesWeights) {
    const AffineCodec a({16, 16, 4}, {64, 64}, 13), b({16, 16, 4}, {64, 64}, 13), c({16, 16, 4}, {64, 64}, 14);
    EXPECT_EQ(a.matrix(), b.matrix());
    EXPECT_NE(a.matrix(), c.matrix());
    EXPECT_EQ(a.factor(), 4);
}

TEST(AffineCodec, RejectsInconsistentShapes) {
    EXPECT_THROW(AffineCodec({16, 16, 4}, {60, 64}, 1), Error);
    EXPECT_THROW(AffineCodec({64, 64, 4}, {64, 64}, 1), Error); // 3 rows < 4 channels
}

TEST(AffineCodec, DumpWeightsWritesMatrixAndBias) {
    const AffineCodec c({16, 16, 4}, {64, 64}, 15);
    const auto stem = std::filesystem::temp_directory_path() / "texpaint_affine_weights";
    c.dump_weights(stem);
    auto bin = stem, txt = stem;
    bin += ".bin";
    txt += ".txt";
    ASSERT_TRUE(std::filesystem::exists(txt));
    const auto bytes = std::filesystem::file_size(bin);
    EXPECT_EQ(bytes, static_cast<std::uintmax_t>((48 * 4 + 48) * sizeof(double)));
    std::ifstream in(bin, std::ios::binary);
    double first = 0.0;
    in.read(reinterpret_cast<char *>(&first), sizeof first);
    EXPECT_EQ(first, c.matrix()(0, 0));
    std::filesystem::remove(bin);
    std::filesystem::remove(txt);
}

TEST(ToyDenoiser, Deterministic) {
    const PredictorPtr p = toy_denoiser(1, {16, 16, 4}, schedule());
    Rng rng(16);
    const LatentGrid z = random_grid(rng, 16, 16, 4);
    const DepthMap d = cube_depth();
    const PromptEmbedding h = embed_prompt("a wooden crate");
    EXPECT_EQ(p->predict(z, 500, d, h, 1.0).values(), p->predict(z, 500, d, h, 1.0).values());
}

TEST(ToyDenoiser, PromptAndDepthMatter) {
    const PredictorPtr p = toy_denoiser(2, {16, 16, 4}, schedule());
    Rng rng(17);
    const LatentGrid z = random_grid(rng, 16, 16, 4);
    const DepthMap d = cube_depth();
    const PromptEmbedding h = embed_prompt("a wooden crate");
    const LatentGrid base = p->predict(z, 500, d, h, 1.0);
    EXPECT_GT(max_abs_diff(base, p->predict(z, 500, d, embed_prompt("a marble bust"), 1.0)), 1e-3);
    Camera far;
    far.position = {0.0, 0.0, 2.5};
    EXPECT_GT(max_abs_diff(base, p->predict(z, 500, render_depth(make_cube(), far), h, 1.0)), 1e-3);
}

TEST(ToyDenoiser, OutputIsBounded) {
    const PredictorPtr p = toy_denoiser(3, {16, 16, 4}, schedule());
    Rng rng(18);
    const DepthMap d = cube_depth();
    std::uniform_real_distribution<double> uniform(-10.0, 10.0);
    for (int k = 0; k < 40; ++k) {
        LatentGrid z(16, 16, 4);
        for (double &v : z.values()) v = uniform(rng);
        const int t = 1 + static_cast<int>(rng() % 1000);
        const double w = k % 2 ? 1.0 : 7.5;
        for (double v : p->predict(z, t, d, embed_prompt("p" + std::to_string(k)), w).values()) {
            EXPECT_TRUE(std::isfinite(v));
            EXPECT_LE(std::abs(v), ToyDenoiser::kOutputBound);
        }
    }
}

TEST(ToyDenoiser, GuidanceBlendsBranches) {
    const PredictorPtr p = toy_denoiser(4, {8, 8, 4}, schedule());
    Rng rng(19);
    // Small latents at a noisy step keep every branch away from the clamp.
    const LatentGrid z = random_grid(rng, 8, 8, 4, 0.1);
    const DepthMap d = cube_depth(32);
    const PromptEmbedding h = embed_prompt("a wooden crate");
    const LatentGrid cond = p->predict(z, 900, d, h, 1.0);
    const LatentGrid uncond = p->predict(z, 900, d, h, 0.0);
    EXPECT_LE(max_abs_diff(uncond, p->predict(z, 900, d, embed_prompt(""), 1.0)), 1e-12);
    const LatentGrid mid = p->predict(z, 900, d, h, 0.5);
    for (std::size_t i = 0; i < mid.size(); ++i) EXPECT_NEAR(mid[i], 0.5 * (cond[i] + uncond[i]), 1e-12);
}

TEST(ToyDenoiser, EmptyDepthIsAccepted) {
    const PredictorPtr p = toy_denoiser(5, {8, 8, 4}, schedule());
    Rng rng(20);
    const LatentGrid eps = p->predict(random_grid(rng, 8, 8, 4), 300, DepthMap{}, embed_prompt("x"), 1.0);
    EXPECT_TRUE(eps.all_finite());
}

TEST(ViewOracle, SingleViewConstantTarget) {
    const Mesh quad = make_quad();
    const TexelTable table = build_texel_table(quad, 32, 32);
    const Texture target(table, Rgb{0.2, 0.6, 0.4});
    Camera cam;
    const CodecPtr codec = identity_codec({64, 64});
    const auto preds = view_oracle_predictors(target, quad, table, {cam}, *codec, schedule());
    ASSERT_EQ(preds.size(), 1u);
    Rng rng(21);
    LatentGrid z = random_grid(rng, 64, 64, 3);
    const int t = schedule().steps().front();
    const LatentGrid eps = preds[0]->predict(z, t, DepthMap{}, embed_prompt(""), 1.0);
    const ImageView view = codec->decode(ddim_predict_z0(z, eps, t, schedule()));
    const WeightField w = compute_view_weights(table, {cam}, {render_depth(quad, cam)});
    const Texture fused = fuse_color({view}, w, table);
    std::size_t visible = 0;
    for (std::size_t u = 0; u < table.size(); ++u) {
        if (w.visible_count(u) == 0) continue;
        ++visible;
        EXPECT_NEAR(fused.get(u, 0), 0.2, 1e-9);
        EXPECT_NEAR(fused.get(u, 1), 0.6, 1e-9);
        EXPECT_NEAR(fused.get(u, 2), 0.4, 1e-9);
    }
    EXPECT_GT(visible, 0u);
}

TEST(ViewOracle, IdenticalTargetsNeedNoOptimization) {
    const Mesh quad = make_quad();
    const TexelTable table = build_texel_table(quad, 32, 32);
    const Texture target(table, Rgb{0.3, 0.3, 0.7});
    Camera a, b;
    b.id = 1;
    const CodecPtr codec = identity_codec({64, 64});
    const auto preds = view_oracle_predictors(target, quad, table, {a, b}, *codec, schedule());
    LatentStack hats;
    std::vector<ImageView> renders;
    Rng rng(22);
    for (int i = 0; i < 2; ++i) {
        const LatentGrid z = random_grid(rng, 64, 64, 3);
        const LatentGrid eps = preds[i]->predict(z, 500, DepthMap{}, embed_prompt(""), 1.0);
        hats.push_back(ddim_predict_z0(z, eps, 500, schedule()));
        renders.push_back(render_color(quad, target, table, i ? b : a));
    }
    const LatentOptimizeResult r = optimize_latents(hats, renders, *codec, AdamWConfig{});
    for (int i = 0; i < 2; ++i) {
        EXPECT_LE(r.initial_loss[i], 1e-9);
        EXPECT_LE(r.final_loss[i], 1e-9);
    }
}
