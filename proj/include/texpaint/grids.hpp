#pragma once

#include "texpaint/common.hpp"

#include <cstdint>
#include <vector>

namespace texpaint {

class TexelTable;

/// Latent code z for one view at one timestep.
struct LatentGrid : Grid {
    LatentGrid() = default;
    LatentGrid(int height, int width, int channels, double fill = 0.0) : Grid(height, width, channels, fill) {}
    explicit LatentGrid(Grid g, int t = -1, int v = -1) : Grid(std::move(g)), timestep(t), view(v) {}

    int timestep = -1;
    int view = -1;
};

/// RGB image seen from one camera.
struct ImageView : Grid {
    ImageView() = default;
    ImageView(int height, int width, double fill = 0.0) : Grid(height, width, 3, fill) {}
    explicit ImageView(Grid g, int cam = -1) : Grid(std::move(g)), camera(cam) {}

    int camera = -1;
};

struct Rgb {
    double r = 0.5, g = 0.5, b = 0.5;
};

/// Color texture aligned with a TexelTable. `valid` mirrors the table;
/// `covered` marks texels painted from at least one camera.
struct Texture : Grid {
    Texture() = default;
    Texture(int width, int height, Rgb fill = {});
    /// Texture shaped like `table`, every texel set to `fill`.
    Texture(const TexelTable &table, Rgb fill = {});

    std::vector<std::uint8_t> valid;
    std::vector<std::uint8_t> covered;
    Rgb fill_color;

    void set(std::size_t texel, int c, double v) noexcept { (*this)[texel * 3 + c] = v; }
    double get(std::size_t texel, int c) const noexcept { return (*this)[texel * 3 + c]; }
    /// Resets every invalid texel to the fill color.
    void reset_invalid();
};

/// Fills texels not marked covered from painted neighbours, one ring per
/// pass (8-neighbourhood mean), then resets invalid texels to the fill color.
void dilate_uncovered(Texture &tex, int max_passes = -1);

} // namespace texpaint
