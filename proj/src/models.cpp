#include "texpaint/models.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <numbers>

namespace texpaint {

namespace {

Error models_error(const std::string &what) { return Error("models", what); }

std::uint64_t fnv1a(const std::string &s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

Eigen::MatrixXd seeded_normal(Rng &rng, int rows, int cols, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

void check_latent(const LatentGrid &z, LatentShape shape) {
    if (z.height() != shape.height || z.width() != shape.width || z.channels() != shape.channels)
        throw models_error("latent shape " + std::to_string(z.height()) + "x" + std::to_string(z.width()) + "x" +
                           std::to_string(z.channels()) + " does not match codec");
}

void check_image(const Grid &x, ImageShape shape) {
    if (x.height() != shape.height || x.width() != shape.width || x.channels() != 3)
        throw models_error("image shape does not match codec");
}

class OraclePredictor final : public NoisePredictor {
public:
    OraclePredictor(LatentGrid target, NoiseSchedule schedule) : target_(std::move(target)), schedule_(std::move(schedule)) {}

    LatentGrid predict(const LatentGrid &z_t, int t, const DepthMap &, const PromptEmbedding &, double) const override {
        if (!z_t.same_shape(target_)) throw models_error("oracle target shape does not match latent");
        LatentGrid eps = z_t;
        eps.timestep = t;
        const double ab = schedule_.alpha_bar(t);
        if (ab >= 1.0) {
            std::fill(eps.values().begin(), eps.values().end(), 0.0);
            return eps;
        }
        const double a = std::sqrt(ab);
        const double inv = 1.0 / std::sqrt(1.0 - ab);
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = (z_t[i] - a * target_[i]) * inv;
        return eps;
    }

private:
    LatentGrid target_;
    NoiseSchedule schedule_;
};

class IdentityCodec final : public LatentCodec {
public:
    explicit IdentityCodec(ImageShape image) : image_(image) {}

    std::string name() const override { return "identity"; }
    LatentShape latent_shape() const override { return {image_.height, image_.width, 3}; }
    ImageShape image_shape() const override { return image_; }

    ImageView decode(const LatentGrid &z) const override {
        check_latent(z, latent_shape());
        return ImageView(static_cast<const Grid &>(z), z.view);
    }
    LatentGrid decode_vjp(const LatentGrid &z, const Grid &cotangent) const override {
        check_latent(z, latent_shape());
        check_image(cotangent, image_);
        return LatentGrid(cotangent, z.timestep, z.view);
    }
    LatentGrid encode(const ImageView &x) const override {
        check_image(x, image_);
        return LatentGrid(static_cast<const Grid &>(x), -1, x.camera);
    }

private:
    ImageShape image_;
};

double squash(double p) { return 0.5 + 0.5 * std::tanh(2.0 * (p - 0.5)); }
double squash_grad(double p) {
    const double th = std::tanh(2.0 * (p - 0.5));
    return 1.0 - th * th;
}

} // namespace

PromptEmbedding embed_prompt(const std::string &text, int dim) {
    Rng rng(fnv1a(text));
    std::normal_distribution<double> normal(0.0, 1.0);
    PromptEmbedding e{text, std::vector<double>(dim)};
    double norm2 = 0.0;
    for (double &v : e.values) {
        v = normal(rng);
        norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double &v : e.values) v *= inv;
    return e;
}

PredictorPtr oracle_predictor(LatentGrid target, const NoiseSchedule &schedule) {
    return std::make_shared<OraclePredictor>(std::move(target), schedule);
}

LatentGrid LatentCodec::zero_latent() const {
    const LatentShape s = latent_shape();
    return LatentGrid(s.height, s.width, s.channels);
}

CodecPtr identity_codec(ImageShape image) { return std::make_shared<IdentityCodec>(image); }

AffineCodec::AffineCodec(LatentShape latent, ImageShape image, std::uint64_t seed, CodecNonlinearity nonlinearity, int encode_iterations)
    : latent_(latent), image_(image), seed_(seed), nonlinearity_(nonlinearity), encode_iterations_(encode_iterations) {
    if (latent.height <= 0 || latent.width <= 0 || latent.channels <= 0) throw models_error("latent shape must be positive");
    if (image.height % latent.height != 0 || image.width % latent.width != 0 ||
        image.height / latent.height != image.width / latent.width)
        throw models_error("image size must be the same integer multiple of the latent size on both axes");
    factor_ = image.height / latent.height;
    const int rows = 3 * factor_ * factor_;
    if (rows < latent.channels) throw models_error("image pixel count must be at least the latent element count");

    // Scale so a standard-normal latent decodes to roughly 0.5 +- 0.3.
    const double scale = 0.3 / std::sqrt(static_cast<double>(latent.channels));
    for (int attempt = 0; attempt < 16; ++attempt, ++seed_) {
        Rng rng(seed_);
        matrix_ = seeded_normal(rng, rows, latent.channels, scale);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix_);
        const auto &sv = svd.singularValues();
        if (sv.minCoeff() > 1e-3 * sv.maxCoeff()) {
            bias_ = (0.5 * Eigen::VectorXd::Ones(rows) + seeded_normal(rng, rows, 1, 0.05)).col(0);
            pinv_ = matrix_.completeOrthogonalDecomposition().pseudoInverse();
            step_size_ = 1.0 / (sv.maxCoeff() * sv.maxCoeff());
            if (attempt > 0) spdlog::warn("models: affine codec seed {} was rank deficient, using seed {}", seed, seed_);
            return;
        }
    }
    throw models_error("could not draw a full-rank affine codec");
}

std::string AffineCodec::name() const { return nonlinearity_ == CodecNonlinearity::None ? "affine" : "nonlinear"; }

Eigen::VectorXd AffineCodec::gather_block(const Grid &img, int cy, int cx) const {
    Eigen::VectorXd v(3 * factor_ * factor_);
    int r = 0;
    for (int dy = 0; dy < factor_; ++dy)
        for (int dx = 0; dx < factor_; ++dx)
            for (int ch = 0; ch < 3; ++ch) v[r++] = img.at(cy * factor_ + dy, cx * factor_ + dx, ch);
    return v;
}

void AffineCodec::scatter_block(Grid &img, int cy, int cx, const Eigen::VectorXd &values) const {
    int r = 0;
    for (int dy = 0; dy < factor_; ++dy)
        for (int dx = 0; dx < factor_; ++dx)
            for (int ch = 0; ch < 3; ++ch) img.at(cy * factor_ + dy, cx * factor_ + dx, ch) = values[r++];
}

ImageView AffineCodec::decode(const LatentGrid &z) const {
    check_latent(z, latent_);
    ImageView out(image_.height, image_.width);
    out.camera = z.view;
    Eigen::VectorXd cell(latent_.channels);
    for (int cy = 0; cy < latent_.height; ++cy) {
        for (int cx = 0; cx < latent_.width; ++cx) {
            for (int c = 0; c < latent_.channels; ++c) cell[c] = z.at(cy, cx, c);
            Eigen::VectorXd pre = matrix_ * cell + bias_;
            if (nonlinearity_ == CodecNonlinearity::Tanh) pre = pre.unaryExpr(&squash);
            scatter_block(out, cy, cx, pre);
        }
    }
    return out;
}

LatentGrid AffineCodec::decode_vjp(const LatentGrid &z, const Grid &cotangent) const {
    check_latent(z, latent_);
    check_image(cotangent, image_);
    LatentGrid out(latent_.height, latent_.width, latent_.channels);
    out.timestep = z.timestep;
    out.view = z.view;
    Eigen::VectorXd cell(latent_.channels);
    for (int cy = 0; cy < latent_.height; ++cy) {
        for (int cx = 0; cx < latent_.width; ++cx) {
            Eigen::VectorXd g = gather_block(cotangent, cy, cx);
            if (nonlinearity_ == CodecNonlinearity::Tanh) {
                for (int c = 0; c < latent_.channels; ++c) cell[c] = z.at(cy, cx, c);
                const Eigen::VectorXd pre = matrix_ * cell + bias_;
                g = g.cwiseProduct(pre.unaryExpr(&squash_grad));
            }
            const Eigen::VectorXd back = matrix_.transpose() * g;
            for (int c = 0; c < latent_.channels; ++c) out.at(cy, cx, c) = back[c];
        }
    }
    return out;
}

LatentGrid AffineCodec::encode(const ImageView &x) const {
    check_image(x, image_);
    LatentGrid z(latent_.height, latent_.width, latent_.channels);
    z.view = x.camera;
    for (int cy = 0; cy < latent_.height; ++cy) {
        for (int cx = 0; cx < latent_.width; ++cx) {
            const Eigen::VectorXd target = gather_block(x, cy, cx);
            // The affine pseudo-inverse; with the nonlinearity it is only the starting point.
            Eigen::VectorXd cell = pinv_ * (target - bias_);
            if (nonlinearity_ == CodecNonlinearity::Tanh) {
                for (int it = 0; it < encode_iterations_; ++it) {
                    const Eigen::VectorXd pre = matrix_ * cell + bias_;
                    const Eigen::VectorXd resid = pre.unaryExpr(&squash) - target;
                    cell -= step_size_ * (matrix_.transpose() * resid.cwiseProduct(pre.unaryExpr(&squash_grad)));
                }
            }
            for (int c = 0; c < latent_.channels; ++c) z.at(cy, cx, c) = cell[c];
        }
    }
    return z;
}

void AffineCodec::dump_weights(const std::filesystem::path &stem) const {
    std::filesystem::path bin = stem, txt = stem;
    bin += ".bin";
    txt += ".txt";
    std::ofstream out(bin, std::ios::binary);
    out.write(reinterpret_cast<const char *>(matrix_.data()), static_cast<std::streamsize>(matrix_.size() * sizeof(double)));
    out.write(reinterpret_cast<const char *>(bias_.data()), static_cast<std::streamsize>(bias_.size() * sizeof(double)));
    std::ofstream hdr(txt);
    hdr << "codec=" << name() << "\nseed=" << seed_ << "\nfactor=" << factor_ << "\nmatrix_rows=" << matrix_.rows()
        << "\nmatrix_cols=" << matrix_.cols() << "\nlayout=matrix column-major float64, then bias float64\n"
        << "row_order=dy,dx,channel\n";
    if (!out || !hdr) throw models_error("failed writing weights to '" + stem.string() + "'");
}

CodecPtr affine_codec(LatentShape latent, ImageShape image, std::uint64_t seed, CodecNonlinearity nonlinearity) {
    return std::make_shared<AffineCodec>(latent, image, seed, nonlinearity);
}

ToyDenoiser::ToyDenoiser(std::uint64_t seed, LatentShape shape, NoiseSchedule schedule)
    : shape_(shape), schedule_(std::move(schedule)), null_prompt_(embed_prompt("")) {
    Rng rng(seed);
    feature_weights_ = seeded_normal(rng, shape.channels, kFeatures, 0.8);
    prompt_weights_ = seeded_normal(rng, shape.channels, kEmbeddingDim, 1.5);
    phase_ = seeded_normal(rng, shape.channels, 1, std::numbers::pi).col(0);
    time_weights_ = seeded_normal(rng, shape.channels, 1, 0.2).col(0);
}

std::vector<double> ToyDenoiser::depth_features(const DepthMap &depth) const {
    std::vector<double> feat(static_cast<std::size_t>(shape_.height) * shape_.width * kFeatures, 0.0);
    for (int cy = 0; cy < shape_.height; ++cy) {
        for (int cx = 0; cx < shape_.width; ++cx) {
            const int y0 = cy * depth.height() / shape_.height, y1 = (cy + 1) * depth.height() / shape_.height;
            const int x0 = cx * depth.width() / shape_.width, x1 = (cx + 1) * depth.width() / shape_.width;
            int hits = 0, total = 0;
            double sum = 0.0;
            // An empty depth map reads as all background.
            const bool has_depth = depth.width() > 0 && depth.height() > 0;
            for (int y = y0; has_depth && y < std::max(y1, y0 + 1); ++y) {
                for (int x = x0; x < std::max(x1, x0 + 1); ++x) {
                    ++total;
                    if (!depth.hit(x, y)) continue;
                    ++hits;
                    sum += depth.at(x, y);
                }
            }
            const double coverage = total > 0 ? static_cast<double>(hits) / total : 0.0;
            const double rel_depth = hits > 0 ? sum / hits - 1.5 : 0.0;
            double *f = &feat[(static_cast<std::size_t>(cy) * shape_.width + cx) * kFeatures];
            f[0] = coverage;
            f[1] = 4.0 * rel_depth;
            f[2] = coverage * f[1];
            f[3] = std::sin(4.0 * std::numbers::pi * (cx + 0.5) / shape_.width);
            f[4] = std::cos(4.0 * std::numbers::pi * (cy + 0.5) / shape_.height);
            f[5] = 1.0;
        }
    }
    return feat;
}

LatentGrid ToyDenoiser::raw(const LatentGrid &z_t, int t, const std::vector<double> &features, const PromptEmbedding &h) const {
    Eigen::VectorXd hv = Eigen::Map<const Eigen::VectorXd>(h.values.data(), static_cast<Eigen::Index>(h.values.size()));
    const Eigen::VectorXd prompt_term = prompt_weights_ * hv;
    const double ab = schedule_.alpha_bar(t);
    const double signal = std::sqrt(ab);
    const double inv_noise = 1.0 / std::max(std::sqrt(1.0 - ab), 0.1);
    const double tfrac = static_cast<double>(t) / schedule_.total_steps();

    LatentGrid eps = z_t;
    eps.timestep = t;
    for (int cy = 0; cy < shape_.height; ++cy) {
        for (int cx = 0; cx < shape_.width; ++cx) {
            const Eigen::Map<const Eigen::VectorXd> f(&features[(static_cast<std::size_t>(cy) * shape_.width + cx) * kFeatures], kFeatures);
            for (int c = 0; c < shape_.channels; ++c) {
                double nbr = 0.0;
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ny = cy + dy, nx = cx + dx;
                        if ((dy == 0 && dx == 0) || ny < 0 || nx < 0 || ny >= shape_.height || nx >= shape_.width) continue;
                        nbr += z_t.at(ny, nx, c);
                        ++n;
                    }
                }
                const double prior = std::tanh(feature_weights_.row(c).dot(f) + prompt_term[c] + 0.5 * std::sin(phase_[c] + 3.0 * f[3] * f[4]) +
                                               time_weights_[c] * tfrac + mix_ * nbr / n);
                const double z = z_t.at(cy, cx, c);
                eps.at(cy, cx, c) = (z - signal * prior) * inv_noise;
            }
        }
    }
    return eps;
}

LatentGrid ToyDenoiser::predict(const LatentGrid &z_t, int t, const DepthMap &depth, const PromptEmbedding &h, double guidance_weight) const {
    check_latent(z_t, shape_);
    if (h.values.size() != static_cast<std::size_t>(kEmbeddingDim)) throw models_error("prompt embedding has the wrong dimension");
    const std::vector<double> features = depth_features(depth);
    LatentGrid eps = raw(z_t, t, features, h);
    if (guidance_weight != 1.0) {
        const LatentGrid uncond = raw(z_t, t, features, null_prompt_);
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = uncond[i] + guidance_weight * (eps[i] - uncond[i]);
    }
    for (double &v : eps.values()) v = std::clamp(v, -kOutputBound, kOutputBound);
    return eps;
}

void ToyDenoiser::dump_weights(const std::filesystem::path &stem) const {
    std::filesystem::path bin = stem, txt = stem;
    bin += ".bin";
    txt += ".txt";
    std::ofstream out(bin, std::ios::binary);
    for (const Eigen::MatrixXd *m : {&feature_weights_, &prompt_weights_})
        out.write(reinterpret_cast<const char *>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(double)));
    out.write(reinterpret_cast<const char *>(phase_.data()), static_cast<std::streamsize>(phase_.size() * sizeof(double)));
    out.write(reinterpret_cast<const char *>(time_weights_.data()), static_cast<std::streamsize>(time_weights_.size() * sizeof(double)));
    std::ofstream hdr(txt);
    hdr << "model=toy_denoiser\nchannels=" << shape_.channels << "\nfeatures=" << kFeatures << "\nembedding_dim=" << kEmbeddingDim
        << "\nlayout=feature_weights[channels x features], prompt_weights[channels x embedding_dim], phase[channels], "
           "time_weights[channels]; column-major float64\n";
    if (!out || !hdr) throw models_error("failed writing weights to '" + stem.string() + "'");
}

PredictorPtr toy_denoiser(std::uint64_t seed, LatentShape shape, const NoiseSchedule &schedule) {
    return std::make_shared<ToyDenoiser>(seed, shape, schedule);
}

std::vector<PredictorPtr> view_oracle_predictors(const Texture &target, const Mesh &mesh, const TexelTable &table,
                                                 const std::vector<Camera> &cameras, const LatentCodec &codec,
                                                 const NoiseSchedule &schedule, Rgb background) {
    if (!codec.can_encode()) throw models_error("view oracle needs a codec with an encoder");
    std::vector<PredictorPtr> out;
    out.reserve(cameras.size());
    for (const Camera &cam : cameras) {
        const ImageView view = render_color(mesh, target, table, cam, background);
        out.push_back(oracle_predictor(codec.encode(view), schedule));
    }
    return out;
}

} // namespace texpaint
