#include "texpaint/geometry.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace texpaint {

namespace {

Error geometry_error(const std::string &what) { return Error("geometry", what); }

Error parse_error(int line, const std::string &what) {
    return geometry_error("line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view tok, int line) {
    // std::from_chars for double is available in libstdc++ 11.
    double value = 0.0;
    const auto *end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, value);
    if (ec != std::errc() || ptr != end) throw parse_error(line, "expected a number, got '" + std::string(tok) + "'");
    return value;
}

int parse_index(std::string_view tok, int count, int line, const char *what) {
    int value = 0;
    const auto *end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, value);
    if (ec != std::errc() || ptr != end || value == 0)
        throw parse_error(line, std::string("bad ") + what + " index '" + std::string(tok) + "'");
    // Negative indices are relative to the end of the list so far.
    const int resolved = value > 0 ? value - 1 : count + value;
    if (resolved < 0 || resolved >= count)
        throw parse_error(line, std::string(what) + " index " + std::to_string(value) + " out of range");
    return resolved;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        const std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

Vec3 facet_normal(const Mesh &m, const Facet &f) {
    const Vec3 &a = m.vertices[f.v[0]];
    const Vec3 &b = m.vertices[f.v[1]];
    const Vec3 &c = m.vertices[f.v[2]];
    return (b - a).cross(c - a);
}

} // namespace

void compute_facet_normals(Mesh &m) {
    m.normals.resize(m.facets.size());
    for (std::size_t i = 0; i < m.facets.size(); ++i) {
        const Vec3 n = facet_normal(m, m.facets[i]);
        const double len = n.norm();
        if (!(len > 0.0)) throw geometry_error("facet " + std::to_string(i) + " has zero area");
        m.normals[i] = n / len;
    }
}

void validate_mesh(const Mesh &m) {
    const int nv = static_cast<int>(m.vertices.size());
    const int nt = static_cast<int>(m.uvs.size());
    if (m.normals.size() != m.facets.size()) throw geometry_error("normal count does not match facet count");
    for (std::size_t i = 0; i < m.facets.size(); ++i) {
        const Facet &f = m.facets[i];
        for (int k = 0; k < 3; ++k) {
            if (f.v[k] < 0 || f.v[k] >= nv) throw geometry_error("facet " + std::to_string(i) + " vertex index out of range");
            if (f.uv[k] < 0 || f.uv[k] >= nt) throw geometry_error("facet " + std::to_string(i) + " uv index out of range");
        }
        if (f.v[0] == f.v[1] || f.v[1] == f.v[2] || f.v[0] == f.v[2])
            throw geometry_error("facet " + std::to_string(i) + " repeats a vertex");
        if (std::abs(m.normals[i].norm() - 1.0) > 1e-6) throw geometry_error("facet " + std::to_string(i) + " normal is not unit length");
    }
}

Mesh parse_obj(const std::string &text) {
    Mesh m;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        const auto tok = split_ws(raw);
        if (tok.empty()) continue;
        const std::string_view kind = tok[0];
        if (kind == "v") {
            if (tok.size() < 4) throw parse_error(line, "vertex needs 3 coordinates");
            m.vertices.emplace_back(parse_double(tok[1], line), parse_double(tok[2], line), parse_double(tok[3], line));
        } else if (kind == "vt") {
            if (tok.size() < 3) throw parse_error(line, "texture coordinate needs 2 components");
            m.uvs.emplace_back(parse_double(tok[1], line), parse_double(tok[2], line));
        } else if (kind == "vn") {
            // Normals are recomputed per facet from winding; only check syntax.
            if (tok.size() < 4) throw parse_error(line, "normal needs 3 components");
            for (int k = 1; k <= 3; ++k) parse_double(tok[k], line);
        } else if (kind == "f") {
            if (tok.size() < 4) throw parse_error(line, "face needs at least 3 corners");
            std::vector<std::pair<int, int>> corners;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const std::string_view c = tok[k];
                const auto s1 = c.find('/');
                if (s1 == std::string_view::npos) throw parse_error(line, "missing uv: corner '" + std::string(c) + "' has no vt reference");
                const auto s2 = c.find('/', s1 + 1);
                const std::string_view vt = c.substr(s1 + 1, s2 == std::string_view::npos ? std::string_view::npos : s2 - s1 - 1);
                if (vt.empty()) throw parse_error(line, "missing uv: corner '" + std::string(c) + "' has no vt reference");
                const int vi = parse_index(c.substr(0, s1), static_cast<int>(m.vertices.size()), line, "vertex");
                const int ti = parse_index(vt, static_cast<int>(m.uvs.size()), line, "uv");
                corners.emplace_back(vi, ti);
            }
            for (std::size_t k = 1; k + 1 < corners.size(); ++k) {
                Facet f;
                f.v = {corners[0].first, corners[k].first, corners[k + 1].first};
                f.uv = {corners[0].second, corners[k].second, corners[k + 1].second};
                if (f.v[0] == f.v[1] || f.v[1] == f.v[2] || f.v[0] == f.v[2])
                    throw parse_error(line, "face repeats a vertex");
                m.facets.push_back(f);
                if (!(facet_normal(m, f).norm() > 0.0)) throw parse_error(line, "face has zero area");
            }
        }
        // Other directives (o, g, s, usemtl, mtllib, ...) are ignored.
    }
    compute_facet_normals(m);
    validate_mesh(m);
    return m;
}

Mesh load_mesh(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw geometry_error("cannot open mesh file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_obj(buf.str());
    } catch (const Error &e) {
        throw Error("geometry", path.string() + ": " + std::string(e.what()).substr(std::string("geometry: ").size()));
    }
}

void write_obj(const Mesh &m, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) throw geometry_error("cannot write '" + path.string() + "'");
    out.precision(17);
    for (const Vec3 &v : m.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const Vec2 &t : m.uvs) out << "vt " << t.x() << ' ' << t.y() << '\n';
    for (const Facet &f : m.facets) {
        out << 'f';
        for (int k = 0; k < 3; ++k) out << ' ' << f.v[k] + 1 << '/' << f.uv[k] + 1;
        out << '\n';
    }
    if (!out) throw geometry_error("failed writing '" + path.string() + "'");
}

BoundingBox bounding_box(const Mesh &m) {
    if (m.vertices.empty()) return {Vec3::Zero(), Vec3::Zero()};
    BoundingBox box{m.vertices.front(), m.vertices.front()};
    for (const Vec3 &v : m.vertices) {
        box.lo = box.lo.cwiseMin(v);
        box.hi = box.hi.cwiseMax(v);
    }
    return box;
}

Mesh normalize_mesh(const Mesh &m) {
    const BoundingBox box = bounding_box(m);
    const double longest = box.extent().maxCoeff();
    if (!(longest > 0.0)) throw geometry_error("degenerate mesh: bounding box has zero extent");
    const Vec3 center = box.center();
    Mesh out = m;
    if (center.isZero(0.0) && longest == 1.0) return out;
    const double scale = 1.0 / longest;
    for (Vec3 &v : out.vertices) v = (v - center) * scale;
    return out;
}

bool barycentric_2d(const Vec2 &p, const Vec2 &a, const Vec2 &b, const Vec2 &c, Vec3 &out) {
    const double det = (b.y() - c.y()) * (a.x() - c.x()) + (c.x() - b.x()) * (a.y() - c.y());
    if (det == 0.0) return false;
    const double l0 = ((b.y() - c.y()) * (p.x() - c.x()) + (c.x() - b.x()) * (p.y() - c.y())) / det;
    const double l1 = ((c.y() - a.y()) * (p.x() - c.x()) + (a.x() - c.x()) * (p.y() - c.y())) / det;
    out = {l0, l1, 1.0 - l0 - l1};
    return true;
}

std::size_t TexelTable::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(texels_.begin(), texels_.end(), [](const Texel &t) { return t.valid; }));
}

TexelTable build_texel_table(const Mesh &m, int width, int height) {
    if (width <= 0 || height <= 0) throw geometry_error("texel table resolution must be positive");
    TexelTable table(width, height);
    constexpr double kEdgeTol = 1e-12;
    for (std::size_t fi = 0; fi < m.facets.size(); ++fi) {
        const Facet &f = m.facets[fi];
        const Vec2 &a = m.uvs[f.uv[0]];
        const Vec2 &b = m.uvs[f.uv[1]];
        const Vec2 &c = m.uvs[f.uv[2]];
        const double umin = std::min({a.x(), b.x(), c.x()}), umax = std::max({a.x(), b.x(), c.x()});
        const double vmin = std::min({a.y(), b.y(), c.y()}), vmax = std::max({a.y(), b.y(), c.y()});
        const int x0 = std::max(0, static_cast<int>(std::floor(umin * width - 0.5)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(umax * width - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(vmin * height - 0.5)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(vmax * height - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                Texel &t = table[table.index(x, y)];
                if (t.valid) continue; // lowest facet index wins
                const Vec2 p((x + 0.5) / width, (y + 0.5) / height);
                Vec3 bary;
                if (!barycentric_2d(p, a, b, c, bary)) continue;
                if (bary.minCoeff() < -kEdgeTol) continue;
                bary = bary.cwiseMax(0.0);
                bary /= bary.sum();
                t.valid = true;
                t.facet = static_cast<int>(fi);
                t.bary = bary;
                t.world = bary[0] * m.vertices[f.v[0]] + bary[1] * m.vertices[f.v[1]] + bary[2] * m.vertices[f.v[2]];
                t.normal = m.normals[fi];
            }
        }
    }
    if (table.valid_count() == 0) spdlog::warn("geometry: texel table {}x{} has no UV coverage", width, height);
    return table;
}

Mesh make_quad(Vec2 uv_lo, Vec2 uv_hi) {
    Mesh m;
    m.vertices = {{-0.5, -0.5, 0.0}, {0.5, -0.5, 0.0}, {0.5, 0.5, 0.0}, {-0.5, 0.5, 0.0}};
    m.uvs = {{uv_lo.x(), uv_lo.y()}, {uv_hi.x(), uv_lo.y()}, {uv_hi.x(), uv_hi.y()}, {uv_lo.x(), uv_hi.y()}};
    m.facets = {Facet{{0, 1, 2}, {0, 1, 2}}, Facet{{0, 2, 3}, {0, 2, 3}}};
    compute_facet_normals(m);
    return m;
}

Mesh make_cube() {
    Mesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.emplace_back((i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5);
    // Corner quads, counterclockwise seen from outside: +x, -x, +y, -y, +z, -z.
    const std::array<std::array<int, 4>, 6> faces = {{
        {1, 3, 7, 5}, {0, 4, 6, 2}, {2, 6, 7, 3}, {0, 1, 5, 4}, {4, 5, 7, 6}, {0, 2, 3, 1},
    }};
    constexpr double cell = 0.25;
    for (int k = 0; k < 6; ++k) {
        const double u0 = (k % 4) * cell, v0 = (k / 4) * cell;
        const int base = static_cast<int>(m.uvs.size());
        m.uvs.insert(m.uvs.end(), {{u0, v0}, {u0 + cell, v0}, {u0 + cell, v0 + cell}, {u0, v0 + cell}});
        const auto &q = faces[k];
        m.facets.push_back(Facet{{q[0], q[1], q[2]}, {base, base + 1, base + 2}});
        m.facets.push_back(Facet{{q[0], q[2], q[3]}, {base, base + 2, base + 3}});
    }
    compute_facet_normals(m);
    return m;
}

Mesh make_icosphere(int subdivisions, double margin) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                               {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    std::vector<std::array<int, 3>> tris = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
                                           {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                           {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
                                           {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (Vec3 &v : verts) v.normalize();
    for (int s = 0; s < subdivisions; ++s) {
        std::vector<std::array<int, 3>> next;
        std::vector<std::pair<std::pair<int, int>, int>> midpoints;
        auto midpoint = [&](int a, int b) {
            const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
            for (const auto &[k, idx] : midpoints)
                if (k == key) return idx;
            verts.push_back((0.5 * (verts[a] + verts[b])).normalized());
            const int idx = static_cast<int>(verts.size()) - 1;
            midpoints.emplace_back(key, idx);
            return idx;
        };
        for (const auto &tri : tris) {
            const int ab = midpoint(tri[0], tri[1]), bc = midpoint(tri[1], tri[2]), ca = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }

    Mesh m;
    m.vertices = verts;
    const int n = static_cast<int>(tris.size());
    const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const double cell = 1.0 / grid;
    for (int i = 0; i < n; ++i) {
        const double u0 = (i % grid) * cell, v0 = (i / grid) * cell;
        const double lo = margin * cell, hi = (1.0 - margin) * cell;
        const int base = static_cast<int>(m.uvs.size());
        m.uvs.insert(m.uvs.end(), {{u0 + lo, v0 + lo}, {u0 + hi, v0 + lo}, {u0 + lo, v0 + hi}});
        m.facets.push_back(Facet{tris[i], {base, base + 1, base + 2}});
    }
    compute_facet_normals(m);
    return normalize_mesh(m);
}

} // namespace texpaint
