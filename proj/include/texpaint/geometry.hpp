#pragma once

#include "texpaint/common.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace texpaint {

/// One triangle. Vertex and UV corners are indexed separately, as in OBJ.
struct Facet {
    std::array<int, 3> v{};
    std::array<int, 3> uv{};
};

/// Triangle mesh with per-corner UVs and flat per-facet unit normals.
/// Normals follow counterclockwise winding.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Vec2> uvs;
    std::vector<Facet> facets;
    std::vector<Vec3> normals;

    bool empty() const noexcept { return facets.empty(); }
};

/// Checks index ranges, distinct corners and normal lengths. Throws Error.
void validate_mesh(const Mesh &m);

/// Recomputes the flat facet normals from vertex positions and winding.
void compute_facet_normals(Mesh &m);

/// Reads the v / vt / vn / f subset of Wavefront OBJ. Polygons are fan
/// triangulated from their first corner; every corner needs a vt reference.
Mesh load_mesh(const std::filesystem::path &path);
Mesh parse_obj(const std::string &text);

/// Writes vertices, UVs and facets in a deterministic order.
void write_obj(const Mesh &m, const std::filesystem::path &path);

struct BoundingBox {
    Vec3 lo;
    Vec3 hi;
    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return 0.5 * (lo + hi); }
};

BoundingBox bounding_box(const Mesh &m);

/// Centers the bounding box at the origin and scales so the longest edge is 1.
Mesh normalize_mesh(const Mesh &m);

struct Texel {
    bool valid = false;
    int facet = -1;
    Vec3 world = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    Vec3 bary = Vec3::Zero();
};

/// Realizes the UV map: for each texel center ((x+0.5)/W, (y+0.5)/H) the
/// covering facet (lowest index on shared edges), the surface point and the
/// facet normal. Row y corresponds to v = (y+0.5)/H.
class TexelTable {
public:
    TexelTable() = default;
    TexelTable(int width, int height) : width_(width), height_(height), texels_(static_cast<std::size_t>(width) * height) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return texels_.size(); }
    std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width_ + x; }

    const Texel &operator[](std::size_t i) const noexcept { return texels_[i]; }
    Texel &operator[](std::size_t i) noexcept { return texels_[i]; }
    const Texel &at(int x, int y) const noexcept { return texels_[index(x, y)]; }

    std::size_t valid_count() const noexcept;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Texel> texels_;
};

TexelTable build_texel_table(const Mesh &m, int width, int height);

/// Barycentric coordinates of p with respect to triangle (a, b, c) in 2-D.
/// Returns false for degenerate triangles.
bool barycentric_2d(const Vec2 &p, const Vec2 &a, const Vec2 &b, const Vec2 &c, Vec3 &out);

// Test assets. All carry UVs and are already normalized.

/// Unit square in the z = 0 plane facing +z. `uv_lo`/`uv_hi` set its UV rectangle.
Mesh make_quad(Vec2 uv_lo = {0.0, 0.0}, Vec2 uv_hi = {1.0, 1.0});

/// Axis-aligned cube of edge 1 centered at the origin. Each face gets one
/// 0.25 x 0.25 cell of a 4 x 4 UV grid (cells 0..5 in row-major order).
Mesh make_cube();

/// Subdivided icosahedron projected to the sphere of diameter 1. Every
/// triangle gets its own cell of a square UV grid, inset by `margin` of the cell.
Mesh make_icosphere(int subdivisions = 1, double margin = 0.1);

} // namespace texpaint
