#include "texpaint/grids.hpp"

#include "texpaint/geometry.hpp"

namespace texpaint {

Texture::Texture(int width, int height, Rgb fill)
    : Grid(height, width, 3), valid(static_cast<std::size_t>(width) * height, 1),
      covered(static_cast<std::size_t>(width) * height, 0), fill_color(fill) {
    for (std::size_t i = 0; i < pixel_count(); ++i) {
        set(i, 0, fill.r);
        set(i, 1, fill.g);
        set(i, 2, fill.b);
    }
}

Texture::Texture(const TexelTable &table, Rgb fill) : Texture(table.width(), table.height(), fill) {
    for (std::size_t i = 0; i < table.size(); ++i) valid[i] = table[i].valid ? 1 : 0;
}

void Texture::reset_invalid() {
    for (std::size_t i = 0; i < pixel_count(); ++i) {
        if (valid[i]) continue;
        set(i, 0, fill_color.r);
        set(i, 1, fill_color.g);
        set(i, 2, fill_color.b);
    }
}

void dilate_uncovered(Texture &tex, int max_passes) {
    const int w = tex.width(), h = tex.height();
    if (max_passes < 0) max_passes = w + h;
    std::vector<std::uint8_t> painted(tex.pixel_count());
    for (std::size_t i = 0; i < painted.size(); ++i) painted[i] = tex.valid[i] && tex.covered[i];

    for (int pass = 0; pass < max_passes; ++pass) {
        std::vector<std::size_t> ring;
        std::vector<double> ring_values;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                if (painted[i]) continue;
                double sum[3] = {0, 0, 0};
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                        if (!painted[j]) continue;
                        for (int c = 0; c < 3; ++c) sum[c] += tex.get(j, c);
                        ++n;
                    }
                }
                if (n == 0) continue;
                ring.push_back(i);
                for (double s : sum) ring_values.push_back(s / n);
            }
        }
        if (ring.empty()) break;
        for (std::size_t k = 0; k < ring.size(); ++k) {
            for (int c = 0; c < 3; ++c) tex.set(ring[k], c, ring_values[k * 3 + c]);
            painted[ring[k]] = 1;
        }
    }
    tex.reset_invalid();
}

} // namespace texpaint
