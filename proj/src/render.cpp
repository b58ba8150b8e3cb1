#include "texpaint/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace texpaint {

namespace {

constexpr double kNearPlane = 1e-4;
constexpr double kEdgeTol = 1e-9;

Error render_error(const std::string &what) { return Error("render", what); }

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

} // namespace

void Camera::validate() const {
    if ((position - look_at).norm() == 0.0) throw render_error("camera position equals look_at");
    if (!(fov_y_deg > 0.0 && fov_y_deg < 180.0)) throw render_error("camera fov must be in (0, 180) degrees");
    if (width <= 0 || height <= 0) throw render_error("camera image size must be positive");
    if (forward().cross(up).norm() < 1e-9) throw render_error("camera up vector is parallel to the view direction");
}

Vec3 Camera::forward() const { return (look_at - position).normalized(); }
Vec3 Camera::right() const { return forward().cross(up).normalized(); }
Vec3 Camera::true_up() const { return right().cross(forward()); }
double Camera::focal_pixels() const { return 0.5 * height / std::tan(0.5 * radians(fov_y_deg)); }

Camera::Projection Camera::project(const Vec3 &world) const {
    const Vec3 d = world - position;
    const double zc = d.dot(forward());
    const double f = focal_pixels();
    Projection p;
    p.depth = zc;
    p.sx = 0.5 * width + f * d.dot(right()) / zc;
    p.sy = 0.5 * height - f * d.dot(true_up()) / zc;
    return p;
}

std::vector<Camera> sample_cameras(int count, double radius, double pitch_deg, double fov_deg, int width, int height) {
    if (count < 1) throw render_error("camera count must be at least 1");
    std::vector<Camera> cams;
    cams.reserve(count);
    const double pitch = radians(pitch_deg);
    for (int k = 0; k < count; ++k) {
        const double yaw = radians(360.0 * k / count);
        Camera c;
        c.position = radius * Vec3(std::cos(pitch) * std::sin(yaw), std::sin(pitch), std::cos(pitch) * std::cos(yaw));
        c.look_at = Vec3::Zero();
        c.up = Vec3::UnitY();
        c.fov_y_deg = fov_deg;
        c.width = width;
        c.height = height;
        c.id = k;
        c.validate();
        cams.push_back(c);
    }
    return cams;
}

DepthMap::DepthMap(int width, int height)
    : width_(width), height_(height), depth_(static_cast<std::size_t>(width) * height, kBackground),
      facet_(static_cast<std::size_t>(width) * height, -1), plane_(static_cast<std::size_t>(width) * height, {0.0, 0.0, 0.0}) {}

double DepthMap::surface_depth(double sx, double sy) const noexcept {
    const int x = static_cast<int>(std::floor(sx));
    const int y = static_cast<int>(std::floor(sy));
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return kBackground;
    const std::size_t i = index(x, y);
    if (facet_[i] < 0) return kBackground;
    const auto &p = plane_[i];
    const double inv = p[0] * sx + p[1] * sy + p[2];
    return inv > 0.0 ? 1.0 / inv : kBackground;
}

std::pair<double, double> DepthMap::hit_range() const noexcept {
    double lo = kBackground, hi = 0.0;
    for (std::size_t i = 0; i < depth_.size(); ++i) {
        if (facet_[i] < 0) continue;
        lo = std::min(lo, depth_[i]);
        hi = std::max(hi, depth_[i]);
    }
    return {lo, hi};
}

std::size_t DepthMap::hit_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(facet_.begin(), facet_.end(), [](int f) { return f >= 0; }));
}

Raster rasterize(const Mesh &m, const Camera &c) {
    c.validate();
    Raster r{DepthMap(c.width, c.height), std::vector<Vec3>(static_cast<std::size_t>(c.width) * c.height, Vec3::Zero())};
    for (std::size_t fi = 0; fi < m.facets.size(); ++fi) {
        const Facet &f = m.facets[fi];
        std::array<Camera::Projection, 3> p;
        bool behind = false;
        for (int k = 0; k < 3; ++k) {
            p[k] = c.project(m.vertices[f.v[k]]);
            behind = behind || p[k].depth <= kNearPlane;
        }
        if (behind) continue;
        const Vec2 a(p[0].sx, p[0].sy), b(p[1].sx, p[1].sy), cc(p[2].sx, p[2].sy);
        const double det = (b.x() - a.x()) * (cc.y() - a.y()) - (cc.x() - a.x()) * (b.y() - a.y());
        if (std::abs(det) < 1e-14) continue;

        const std::array<double, 3> q = {1.0 / p[0].depth, 1.0 / p[1].depth, 1.0 / p[2].depth};
        const double pa = ((q[1] - q[0]) * (cc.y() - a.y()) - (q[2] - q[0]) * (b.y() - a.y())) / det;
        const double pb = ((b.x() - a.x()) * (q[2] - q[0]) - (cc.x() - a.x()) * (q[1] - q[0])) / det;
        const std::array<double, 3> plane = {pa, pb, q[0] - pa * a.x() - pb * a.y()};

        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), cc.x()}) - 0.5)));
        const int x1 = std::min(c.width - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), cc.x()}) - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), cc.y()}) - 0.5)));
        const int y1 = std::min(c.height - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), cc.y()}) - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                Vec3 bary;
                if (!barycentric_2d(Vec2(x + 0.5, y + 0.5), a, b, cc, bary) || bary.minCoeff() < -kEdgeTol) continue;
                const Vec3 w(bary[0] * q[0], bary[1] * q[1], bary[2] * q[2]);
                const double inv_depth = w.sum();
                if (!(inv_depth > 0.0)) continue;
                const double depth = 1.0 / inv_depth;
                const std::size_t i = r.depth.index(x, y);
                const double cur = r.depth.at(x, y);
                const int cur_facet = r.depth.facet(x, y);
                if (depth < cur || (depth == cur && static_cast<int>(fi) < cur_facet)) {
                    r.depth.depth_ref(i) = depth;
                    r.depth.facet_ref(i) = static_cast<int>(fi);
                    r.depth.plane_ref(i) = plane;
                    r.bary[i] = (w / inv_depth).cwiseMax(0.0);
                }
            }
        }
    }
    return r;
}

DepthMap render_depth(const Mesh &m, const Camera &c) { return rasterize(m, c).depth; }

std::vector<int> map_pixels_to_texels(const Mesh &m, const Raster &raster, const TexelTable &table) {
    const DepthMap &d = raster.depth;
    std::vector<int> out(static_cast<std::size_t>(d.width()) * d.height(), -1);
    const int tw = table.width(), th = table.height();
    for (int y = 0; y < d.height(); ++y) {
        for (int x = 0; x < d.width(); ++x) {
            const std::size_t i = d.index(x, y);
            const int fi = d.facet(x, y);
            if (fi < 0) continue;
            const Facet &f = m.facets[fi];
            const Vec3 &b = raster.bary[i];
            const Vec2 uv = b[0] * m.uvs[f.uv[0]] + b[1] * m.uvs[f.uv[1]] + b[2] * m.uvs[f.uv[2]];
            const int tx = std::clamp(static_cast<int>(std::floor(uv.x() * tw)), 0, tw - 1);
            const int ty = std::clamp(static_cast<int>(std::floor(uv.y() * th)), 0, th - 1);
            int chosen = static_cast<int>(table.index(tx, ty));
            if (!table[chosen].valid) {
                // Prefer the closest valid texel of the same facet, then any valid one.
                double best = std::numeric_limits<double>::infinity();
                int best_rank = 2;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = tx + dx, ny = ty + dy;
                        if (nx < 0 || ny < 0 || nx >= tw || ny >= th) continue;
                        const Texel &t = table.at(nx, ny);
                        if (!t.valid) continue;
                        const int rank = t.facet == fi ? 0 : 1;
                        const double dist = (Vec2((nx + 0.5) / tw, (ny + 0.5) / th) - uv).squaredNorm();
                        if (rank < best_rank || (rank == best_rank && dist < best)) {
                            best_rank = rank;
                            best = dist;
                            chosen = static_cast<int>(table.index(nx, ny));
                        }
                    }
                }
            }
            out[i] = chosen;
        }
    }
    return out;
}

ImageView render_color(const std::vector<int> &pixel_texels, int width, int height, const Texture &tex, Rgb background, int camera) {
    if (pixel_texels.size() != static_cast<std::size_t>(width) * height) throw render_error("pixel map does not match image size");
    ImageView img(height, width);
    img.camera = camera;
    for (std::size_t i = 0; i < pixel_texels.size(); ++i) {
        const int t = pixel_texels[i];
        if (t < 0) {
            img[i * 3 + 0] = background.r;
            img[i * 3 + 1] = background.g;
            img[i * 3 + 2] = background.b;
        } else {
            for (int ch = 0; ch < 3; ++ch) img[i * 3 + ch] = tex.get(static_cast<std::size_t>(t), ch);
        }
    }
    return img;
}

ImageView render_color(const Mesh &m, const Texture &tex, const TexelTable &table, const Camera &c, Rgb background) {
    if (tex.width() != table.width() || tex.height() != table.height() || tex.channels() != 3)
        throw render_error("texture resolution " + std::to_string(tex.width()) + "x" + std::to_string(tex.height()) +
                           " does not match texel table " + std::to_string(table.width()) + "x" + std::to_string(table.height()));
    const Raster r = rasterize(m, c);
    return render_color(map_pixels_to_texels(m, r, table), c.width, c.height, tex, background, c.id);
}

std::optional<TexelProjection> project_texel_detail(const TexelTable &table, const Camera &c, const DepthMap &depth, std::size_t texel,
                                                    double eps) {
    const Texel &t = table[texel];
    if (!t.valid) return std::nullopt;
    const Camera::Projection p = c.project(t.world);
    if (!(p.depth > kNearPlane)) return std::nullopt;
    if (!(p.sx >= 0.0 && p.sy >= 0.0 && p.sx < c.width && p.sy < c.height)) return std::nullopt;
    const int x = static_cast<int>(std::floor(p.sx));
    const int y = static_cast<int>(std::floor(p.sy));
    if (!depth.hit(x, y)) return std::nullopt;
    const double surface = depth.surface_depth(p.sx, p.sy);
    if (!(std::abs(p.depth - surface) <= eps)) return std::nullopt;
    return TexelProjection{{x, y}, p.depth};
}

std::optional<PixelCoord> project_texel(const TexelTable &table, const Camera &c, const DepthMap &depth, std::size_t texel, double eps) {
    if (auto p = project_texel_detail(table, c, depth, texel, eps)) return p->pixel;
    return std::nullopt;
}

} // namespace texpaint
