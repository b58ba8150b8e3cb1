#pragma once

#include "texpaint/grids.hpp"
#include "texpaint/render.hpp"

#include <filesystem>

namespace texpaint {

/// 8-bit RGB PNG, values clamped to [0, 1]. Grid row 0 is written at the top.
void write_png(const Grid &rgb, const std::filesystem::path &path);
Grid read_png(const std::filesystem::path &path);

/// Textures are stored with v = 0 at the bottom of the image.
void write_texture_png(const Texture &tex, const std::filesystem::path &path);
Texture read_texture_png(const std::filesystem::path &path);

/// 16-bit grayscale depth, hit range mapped to [1, 65535] and background to 0,
/// plus `<path>.range` holding the near and far depth.
void write_depth_png(const DepthMap &depth, const std::filesystem::path &path);

} // namespace texpaint
