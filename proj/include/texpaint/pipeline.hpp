#pragma once

#include "texpaint/fusion.hpp"
#include "texpaint/geometry.hpp"
#include "texpaint/models.hpp"
#include "texpaint/render.hpp"
#include "texpaint/schedule.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace texpaint {

enum class PredictorKind { Toy, Oracle };
enum class CodecKind { Identity, Affine, Nonlinear };
enum class Variant { Main, LatentBlend, DdpmFusion, DirectEncode };

std::string to_string(PredictorKind k);
std::string to_string(CodecKind k);
std::string to_string(Variant v);
Variant parse_variant(const std::string &name);

struct SgdConfig {
    int iterations = 500;
    double lr = 0.01;
};

/// Every knob of a run. Defaults are the desk-scale setup.
struct RunConfig {
    std::string preset = "desk";
    /// OBJ path, or builtin:quad / builtin:cube / builtin:icosphere.
    std::string mesh = "builtin:cube";
    std::vector<std::string> prompts = {"a wooden crate"};
    /// Prompt index per camera id; empty means every camera uses prompt 0.
    std::vector<int> camera_prompts;

    int cameras = 4;
    double radius = 1.5;
    double pitch_deg = 30.0;
    double fov_deg = 45.0;

    int image_size = 64;
    LatentShape latent = {16, 16, 4};
    int texture_size = 128;

    int train_steps = 1000;
    double beta_min = 1e-4;
    double beta_max = 2e-2;
    int steps = 10;
    double eta = 0.0;

    PredictorKind predictor = PredictorKind::Toy;
    CodecKind codec = CodecKind::Affine;
    std::uint64_t base_seed = 0;
    double guidance = 1.0;
    /// Oracle target pattern per prompt (see make_pattern_texture).
    std::vector<std::string> oracle_targets = {"smooth"};

    AdamWConfig adam;
    SgdConfig sgd;
    bool joint = false;
    int joint_rounds = 2;

    Variant variant = Variant::Main;
    Rgb background = {0.5, 0.5, 0.5};
    int workers = 1;

    /// Resolutions consistent with the codec, prompts assigned, counts positive.
    void validate() const;
    int prompt_of(int camera_id) const;
};

/// Fixed geometry of a run: everything that does not change across timesteps.
struct Scene {
    Mesh mesh;
    TexelTable table;
    std::vector<Camera> cameras;
    std::vector<DepthMap> depths;
    std::vector<ViewRenderer> renderers;
    WeightField weights;
};

Scene build_scene(Mesh mesh, std::vector<Camera> cameras, int texture_width, int texture_height, int workers = 1);

/// Mesh, sampled cameras and texel table as configured.
Scene build_run_scene(const RunConfig &cfg);

/// Codec plus one predictor and prompt embedding per camera (same order as
/// Scene::cameras).
struct Backend {
    CodecPtr codec;
    std::vector<PredictorPtr> predictors;
    std::vector<PromptEmbedding> embeddings;
    std::vector<int> prompt_index;
};

/// Procedural textures: smooth (world-space sinusoids), checker, red, blue,
/// green, gray, white, black, or constant:r,g,b.
Texture make_pattern_texture(const std::string &name, const TexelTable &table, Rgb fill = {});

Mesh load_run_mesh(const std::string &source);
CodecPtr make_codec(const RunConfig &cfg);
Backend make_backend(const RunConfig &cfg, const Scene &scene, const NoiseSchedule &schedule);

struct ConsistencyReport {
    double variance_mean = 0.0;
    double variance_p95 = 0.0;
    std::size_t shared_texels = 0;
    std::size_t covered_texels = 0;
    std::size_t valid_texels = 0;
    std::vector<double> view_l_diff;
    std::vector<int> view_prompt;
    std::vector<double> set_l_diff;
    double rerender_l1 = 0.0;

    /// key=value lines followed by a CSV section of per-view values.
    std::string to_text() const;
};

/// Population variance across visible views of each texel's sampled color,
/// averaged over channels, for texels visible from >= 2 cameras.
std::vector<double> cross_view_variances(const std::vector<ImageView> &views, const WeightField &weights, const TexelTable &table);

struct VarianceStats {
    double mean = 0.0;
    double p95 = 0.0;
    std::size_t count = 0;
};
VarianceStats summarize_variances(std::vector<double> values);

/// view_prompt may be empty (single set).
ConsistencyReport consistency_report(const Texture &final_texture, const std::vector<ImageView> &final_views, const Scene &scene,
                                     Rgb background = {}, const std::vector<int> &view_prompt = {});

struct ReconstructResult {
    Texture texture;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

/// Per texel and channel, SGD on sum_i w_i |I(u) - x_i(p_i(u))| with
/// normalized weights, starting from `init` and keeping the best iterate.
/// Uncovered texels are filled by dilation.
ReconstructResult reconstruct_final_texture(const std::vector<ImageView> &final_views, const WeightField &weights, const TexelTable &table,
                                            const Texture &init, const SgdConfig &sgd, int workers = 1);

struct StepRecord {
    int t = 0;
    int t_prev = 0;
    VarianceStats before;        // decoded predictions entering fusion
    VarianceStats after;         // decoded adjusted latents leaving fusion
    double loss_before = 0.0;    // sum over views of L_diff at the initial guess
    double loss_after = 0.0;
};

struct LossRow {
    int step = 0;
    int view = 0;
    int iteration = 0;
    double loss = 0.0;
};

struct PaintOptions {
    double eta = 0.0;
    double guidance = 1.0;
    AdamWConfig adam;
    SgdConfig sgd;
    bool joint = false;
    int joint_rounds = 2;
    Variant variant = Variant::Main;
    Rgb background = {0.5, 0.5, 0.5};
    std::uint64_t base_seed = 0;
    int workers = 1;
    /// Latent-resolution texel table size for the latent-blend ablation;
    /// 0 derives it from the texture size and the latent/image ratio.
    int latent_texture_size = 0;
    std::function<void(const StepRecord &)> on_step;
    /// Called with the fused texture of every visited timestep and t = 0.
    std::function<void(int t, const Texture &fused)> on_fused;
};

PaintOptions paint_options(const RunConfig &cfg);

struct PaintResult {
    Texture alg1_texture;  // fused texture returned at t = 0
    Texture final_texture; // SGD reconstruction + dilation
    std::vector<ImageView> final_views;
    LatentStack final_latents;
    ConsistencyReport report;
    std::vector<StepRecord> steps;
    std::vector<LossRow> loss_trace;
    double reconstruct_initial_loss = 0.0;
    double reconstruct_final_loss = 0.0;
};

/// The multi-view DDIM loop with color-space fusion and per-step latent
/// re-optimization, or one of its ablations, followed by the final
/// reconstruction and report.
PaintResult run_texpaint(const Scene &scene, const Backend &backend, const NoiseSchedule &schedule, const PaintOptions &opts);

/// Builds scene, schedule and backend from cfg and runs it.
PaintResult texpaint(const RunConfig &cfg);

/// Requires every camera to have a prompt assignment.
PaintResult texpaint_multiprompt(const RunConfig &cfg);

/// cfg with `variant` swapped in.
PaintResult run_ablation(const RunConfig &cfg, Variant variant);

} // namespace texpaint
