#include "texpaint/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace texpaint {

namespace {

struct FileCloser {
    void operator()(std::FILE *f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path &path, const char *mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw Error("image_io", "cannot open '" + path.string() + "'");
    return f;
}

void write_rows(const std::filesystem::path &path, int width, int height, int bit_depth, int color_type,
                const std::vector<std::vector<png_byte>> &rows) {
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("image_io", "libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("image_io", "failed writing '" + path.string() + "'");
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (const auto &row : rows) png_write_row(png, row.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

png_byte to_byte(double v) { return static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

} // namespace

void write_png(const Grid &rgb, const std::filesystem::path &path) {
    if (rgb.channels() != 3) throw Error("image_io", "write_png expects 3 channels");
    std::vector<std::vector<png_byte>> rows(rgb.height(), std::vector<png_byte>(static_cast<std::size_t>(rgb.width()) * 3));
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x)
            for (int c = 0; c < 3; ++c) rows[y][x * 3 + c] = to_byte(rgb.at(y, x, c));
    write_rows(path, rgb.width(), rgb.height(), 8, PNG_COLOR_TYPE_RGB, rows);
}

Grid read_png(const std::filesystem::path &path) {
    FilePtr f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("image_io", "libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("image_io", "failed reading '" + path.string() + "'");
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY || png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    std::vector<png_byte> row(png_get_rowbytes(png, info));
    Grid out(height, width, 3);
    for (int y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = row[x * 3 + c] / 255.0;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_texture_png(const Texture &tex, const std::filesystem::path &path) {
    Grid flipped(tex.height(), tex.width(), 3);
    for (int y = 0; y < tex.height(); ++y)
        for (int x = 0; x < tex.width(); ++x)
            for (int c = 0; c < 3; ++c) flipped.at(tex.height() - 1 - y, x, c) = tex.at(y, x, c);
    write_png(flipped, path);
}

Texture read_texture_png(const std::filesystem::path &path) {
    const Grid img = read_png(path);
    Texture tex(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) tex.at(y, x, c) = img.at(img.height() - 1 - y, x, c);
    return tex;
}

void write_depth_png(const DepthMap &depth, const std::filesystem::path &path) {
    const auto [near, far] = depth.hit_range();
    const double span = far > near ? far - near : 1.0;
    std::vector<std::vector<png_byte>> rows(depth.height(), std::vector<png_byte>(static_cast<std::size_t>(depth.width()) * 2));
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            unsigned v = 0;
            if (depth.hit(x, y)) v = 1 + static_cast<unsigned>(std::lround((depth.at(x, y) - near) / span * 65534.0));
            rows[y][x * 2] = static_cast<png_byte>(v >> 8);
            rows[y][x * 2 + 1] = static_cast<png_byte>(v & 0xff);
        }
    }
    write_rows(path, depth.width(), depth.height(), 16, PNG_COLOR_TYPE_GRAY, rows);
    std::ofstream range(path.string() + ".range");
    range.precision(17);
    range << "near=" << near << "\nfar=" << far << '\n';
}

} // namespace texpaint
