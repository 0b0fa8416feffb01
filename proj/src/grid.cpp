#include "plumeseek/grid.hpp"

#include "plumeseek/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace plumeseek {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

ScalarGrid::ScalarGrid(int width, int height, double cell_size)
    : ScalarGrid(width, height, cell_size,
                 std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                     static_cast<std::size_t>(std::max(height, 0))))
{
}

ScalarGrid::ScalarGrid(int width, int height, double cell_size, std::vector<double> values)
    : width_(width), height_(height), cell_size_(cell_size), values_(std::move(values))
{
    if (width < 4 || height < 4)
        throw Error("grid must be at least 4x4 cells");
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
        throw Error("cell size must be positive");
    if (values_.size() != static_cast<std::size_t>(width) * height)
        throw Error("grid value count does not match dimensions");
}

double ScalarGrid::sum() const
{
    double s = 0.0;
    for (double v : values_)
        s += v;
    return s;
}

double ScalarGrid::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool ScalarGrid::contains(Vec2 p) const
{
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= extent_x() && p.y <= extent_y();
}

double ScalarGrid::sample(Vec2 p) const
{
    const double cx = p.x / cell_size_ - 0.5;
    const double cy = p.y / cell_size_ - 0.5;
    double out = 0.0;
    simd::kernels().sample_points(values_.data(), width_, height_, &cx, &cy, &out, 1);
    return out;
}

bool ScalarGrid::same_shape(const ScalarGrid& other) const
{
    return width_ == other.width_ && height_ == other.height_ && cell_size_ == other.cell_size_;
}

VelocityGrid::VelocityGrid(int width, int height, double cell_size)
    : width_(width), height_(height), cell_size_(cell_size),
      u_(static_cast<std::size_t>(width) * height), v_(static_cast<std::size_t>(width) * height)
{
    if (width < 4 || height < 4)
        throw Error("grid must be at least 4x4 cells");
    if (!(cell_size > 0.0))
        throw Error("cell size must be positive");
}

double VelocityGrid::max_speed() const
{
    double m = 0.0;
    for (std::size_t k = 0; k < u_.size(); ++k)
        m = std::max(m, std::hypot(u_[k], v_[k]));
    return m;
}

}  // namespace plumeseek
