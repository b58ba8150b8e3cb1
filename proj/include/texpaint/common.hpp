#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace texpaint {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Base error. Messages are prefixed with the module that raised them,
/// e.g. "geometry: line 12: bad face index".
class Error : public std::runtime_error {
public:
    Error(const std::string &module, const std::string &what)
        : std::runtime_error(module + ": " + what), module_(module) {}

    const std::string &module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Dense height x width x channels grid of doubles, row-major with channels
/// innermost. Shared storage type for latents, images and textures.
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, int channels, double fill = 0.0)
        : height_(height), width_(width), channels_(channels),
          data_(static_cast<std::size_t>(height) * width * channels, fill) {}

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }

    bool same_shape(const Grid &o) const noexcept {
        return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
    }

    std::size_t index(int y, int x, int c = 0) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }
    double &at(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
    double at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }

    double &operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::vector<double> &values() noexcept { return data_; }
    const std::vector<double> &values() const noexcept { return data_; }

    bool all_finite() const noexcept;

private:
    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Work items must
/// be independent; results are identical for any worker count.
void parallel_for(int count, int workers, const std::function<void(int)> &fn);

/// Default worker count: hardware concurrency, at least 1.
int default_workers();

} // namespace texpaint
