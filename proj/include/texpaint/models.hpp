#pragma once

#include "texpaint/geometry.hpp"
#include "texpaint/grids.hpp"
#include "texpaint/render.hpp"
#include "texpaint/schedule.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace texpaint {

/// Unit-norm vector derived from a prompt string through a seeded hash.
struct PromptEmbedding {
    std::string text;
    std::vector<double> values;
};

inline constexpr int kEmbeddingDim = 16;

PromptEmbedding embed_prompt(const std::string &text, int dim = kEmbeddingDim);

/// Noise predictor eps(z_t, t, depth, h). Implementations are immutable and
/// safe to call concurrently.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual LatentGrid predict(const LatentGrid &z_t, int t, const DepthMap &depth, const PromptEmbedding &h,
                               double guidance_weight) const = 0;
};

using PredictorPtr = std::shared_ptr<const NoisePredictor>;

/// eps = (z_t - sqrt(ab_t) target) / sqrt(1 - ab_t), so that the noiseless
/// prediction equals `target` at every t. Returns zero where ab_t = 1.
PredictorPtr oracle_predictor(LatentGrid target, const NoiseSchedule &schedule);

struct LatentShape {
    int height = 16;
    int width = 16;
    int channels = 4;
    bool operator==(const LatentShape &) const = default;
};

struct ImageShape {
    int height = 64;
    int width = 64;
    bool operator==(const ImageShape &) const = default;
};

/// Latent <-> color codec (E, D) with the exact transpose-Jacobian of D.
class LatentCodec {
public:
    virtual ~LatentCodec() = default;
    virtual std::string name() const = 0;
    virtual LatentShape latent_shape() const = 0;
    virtual ImageShape image_shape() const = 0;

    virtual ImageView decode(const LatentGrid &z) const = 0;
    /// J_D(z)^T cotangent, where cotangent is shaped like a decoded image.
    virtual LatentGrid decode_vjp(const LatentGrid &z, const Grid &cotangent) const = 0;

    virtual bool can_encode() const { return true; }
    virtual LatentGrid encode(const ImageView &x) const = 0;

    LatentGrid zero_latent() const;
};

using CodecPtr = std::shared_ptr<const LatentCodec>;

/// latent = image, three channels; every map is the identity.
CodecPtr identity_codec(ImageShape image);

enum class CodecNonlinearity { None, Tanh };

/// Block-local affine decoder: each latent cell drives its own f x f pixel
/// patch (f = image / latent size) through one shared seeded full-rank
/// matrix plus a per-patch-position bias. With CodecNonlinearity::Tanh the
/// output passes through g(p) = 0.5 + 0.5 tanh(2 (p - 0.5)).
class AffineCodec final : public LatentCodec {
public:
    AffineCodec(LatentShape latent, ImageShape image, std::uint64_t seed, CodecNonlinearity nonlinearity = CodecNonlinearity::None,
                int encode_iterations = 10);

    std::string name() const override;
    LatentShape latent_shape() const override { return latent_; }
    ImageShape image_shape() const override { return image_; }
    ImageView decode(const LatentGrid &z) const override;
    LatentGrid decode_vjp(const LatentGrid &z, const Grid &cotangent) const override;
    /// Affine: exact pseudo-inverse. Tanh: the affine pseudo-inverse refined by
    /// `encode_iterations` steps of descent on 0.5 |D(z) - x|^2, so it is
    /// approximate.
    LatentGrid encode(const ImageView &x) const override;

    std::uint64_t seed() const noexcept { return seed_; }
    int factor() const noexcept { return factor_; }
    const Eigen::MatrixXd &matrix() const noexcept { return matrix_; }
    const Eigen::VectorXd &bias() const noexcept { return bias_; }

    /// Writes `<stem>.bin` (matrix then bias, little-endian doubles) and
    /// `<stem>.txt` describing the layout.
    void dump_weights(const std::filesystem::path &stem) const;

private:
    Eigen::VectorXd gather_block(const Grid &img, int cy, int cx) const;
    void scatter_block(Grid &img, int cy, int cx, const Eigen::VectorXd &values) const;

    LatentShape latent_;
    ImageShape image_;
    std::uint64_t seed_;
    CodecNonlinearity nonlinearity_;
    int encode_iterations_;
    int factor_;
    Eigen::MatrixXd matrix_;
    Eigen::VectorXd bias_;
    Eigen::MatrixXd pinv_;
    double step_size_ = 0.0;
};

CodecPtr affine_codec(LatentShape latent, ImageShape image, std::uint64_t seed, CodecNonlinearity nonlinearity = CodecNonlinearity::None);

/// Small fixed-weight network standing in for the depth-conditioned
/// denoiser. It predicts the noise relative to a content prior built from
/// depth features, position, the prompt and the 3x3 neighbourhood of z, and
/// clamps the output to [-10, 10]. Guidance blends the conditional and
/// unconditional (empty prompt) branches before the clamp.
class ToyDenoiser final : public NoisePredictor {
public:
    ToyDenoiser(std::uint64_t seed, LatentShape shape, NoiseSchedule schedule);

    LatentGrid predict(const LatentGrid &z_t, int t, const DepthMap &depth, const PromptEmbedding &h, double guidance_weight) const override;

    void dump_weights(const std::filesystem::path &stem) const;

    static constexpr double kOutputBound = 10.0;
    static constexpr int kFeatures = 6;

private:
    LatentGrid raw(const LatentGrid &z_t, int t, const std::vector<double> &features, const PromptEmbedding &h) const;
    std::vector<double> depth_features(const DepthMap &depth) const;

    LatentShape shape_;
    NoiseSchedule schedule_;
    PromptEmbedding null_prompt_;
    Eigen::MatrixXd feature_weights_; // channels x kFeatures
    Eigen::MatrixXd prompt_weights_;  // channels x kEmbeddingDim
    Eigen::VectorXd phase_;           // channels
    Eigen::VectorXd time_weights_;    // channels
    double mix_ = 0.3;
};

PredictorPtr toy_denoiser(std::uint64_t seed, LatentShape shape, const NoiseSchedule &schedule);

/// One oracle predictor per camera whose target is E(R(M, target, c)).
std::vector<PredictorPtr> view_oracle_predictors(const Texture &target, const Mesh &mesh, const TexelTable &table,
                                                 const std::vector<Camera> &cameras, const LatentCodec &codec,
                                                 const NoiseSchedule &schedule, Rgb background = {});

} // namespace texpaint
