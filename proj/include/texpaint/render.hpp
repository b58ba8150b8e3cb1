#pragma once

#include "texpaint/geometry.hpp"
#include "texpaint/grids.hpp"

#include <array>
#include <limits>
#include <optional>
#include <vector>

namespace texpaint {

/// Visibility tolerance in normalized-mesh units.
inline constexpr double kVisibilityEpsilon = 1e-3;

/// Pinhole camera. `id` is the camera's sampling index; it follows the camera
/// when a camera list is reordered and keys per-view seeds and backends.
struct Camera {
    Vec3 position = {0.0, 0.0, 1.5};
    Vec3 look_at = Vec3::Zero();
    Vec3 up = Vec3::UnitY();
    double fov_y_deg = 45.0;
    int width = 64;
    int height = 64;
    int id = 0;

    void validate() const;

    Vec3 forward() const;
    Vec3 right() const;
    Vec3 true_up() const;
    double focal_pixels() const;

    struct Projection {
        double sx = 0.0;    // continuous pixel x, pixel i spans [i, i+1)
        double sy = 0.0;    // continuous pixel y, row 0 at the top
        double depth = 0.0; // camera-space distance along the view axis
    };
    Projection project(const Vec3 &world) const;
};

/// Cameras on a sphere of `radius` around the origin at the given pitch, yaw
/// evenly spaced from 0 in steps of 360/count. Yaw 0 looks from +z; positive
/// yaw turns counterclockwise seen from +y.
std::vector<Camera> sample_cameras(int count, double radius, double pitch_deg, double fov_deg, int width, int height);

/// Z-buffered depth. Each hit pixel also keeps its facet and the plane of
/// inverse depth over the screen so depth can be evaluated off pixel centers.
class DepthMap {
public:
    static constexpr double kBackground = std::numeric_limits<double>::infinity();

    DepthMap() = default;
    DepthMap(int width, int height);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width_ + x; }

    bool hit(int x, int y) const noexcept { return facet_[index(x, y)] >= 0; }
    double at(int x, int y) const noexcept { return depth_[index(x, y)]; }
    int facet(int x, int y) const noexcept { return facet_[index(x, y)]; }

    /// Depth of the surface covering pixel floor(sx, sy), evaluated at (sx, sy).
    /// Background pixels return kBackground.
    double surface_depth(double sx, double sy) const noexcept;

    std::pair<double, double> hit_range() const noexcept;
    std::size_t hit_count() const noexcept;

    // Raster writes.
    double &depth_ref(std::size_t i) noexcept { return depth_[i]; }
    int &facet_ref(std::size_t i) noexcept { return facet_[i]; }
    std::array<double, 3> &plane_ref(std::size_t i) noexcept { return plane_[i]; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> depth_;
    std::vector<int> facet_;
    std::vector<std::array<double, 3>> plane_;
};

/// Per-pixel rasterization result: depth plus perspective-correct barycentrics.
struct Raster {
    DepthMap depth;
    std::vector<Vec3> bary;
};

Raster rasterize(const Mesh &m, const Camera &c);
DepthMap render_depth(const Mesh &m, const Camera &c);

/// For each pixel the texel its surface point samples (nearest, at the
/// interpolated UV), or -1 for background. When the nearest texel is invalid
/// the closest valid texel of the same facet in the 3x3 neighbourhood is used.
std::vector<int> map_pixels_to_texels(const Mesh &m, const Raster &raster, const TexelTable &table);

/// Unlit render from a precomputed pixel->texel map.
ImageView render_color(const std::vector<int> &pixel_texels, int width, int height, const Texture &tex, Rgb background = {},
                       int camera = -1);

/// Unlit albedo render with nearest texel fetch.
ImageView render_color(const Mesh &m, const Texture &tex, const TexelTable &table, const Camera &c, Rgb background = {});

struct PixelCoord {
    int x = 0;
    int y = 0;
    bool operator==(const PixelCoord &) const = default;
};

struct TexelProjection {
    PixelCoord pixel;
    double depth = 0.0;
};

/// Nearest pixel of T(u) when the texel is in front of the camera, inside the
/// image, and on the visible surface (|projected depth - surface depth| <= eps).
std::optional<TexelProjection> project_texel_detail(const TexelTable &table, const Camera &c, const DepthMap &depth, std::size_t texel,
                                                    double eps = kVisibilityEpsilon);
std::optional<PixelCoord> project_texel(const TexelTable &table, const Camera &c, const DepthMap &depth, std::size_t texel,
                                        double eps = kVisibilityEpsilon);

} // namespace texpaint
