#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plumeseek {

/// Base for all errors raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A point or location fell outside the simulated domain.
class OutOfDomainError : public Error
{
public:
    using Error::Error;
};

struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
};

double norm(Vec2 v);
double dot(Vec2 a, Vec2 b);

/// Cell-centered scalar field, row-major (x fastest). Cell (i, j) has its
/// center at ((i + 0.5) * cell_size, (j + 0.5) * cell_size).
class ScalarGrid
{
public:
    ScalarGrid(int width, int height, double cell_size);
    ScalarGrid(int width, int height, double cell_size, std::vector<double> values);

    int width() const { return width_; }
    int height() const { return height_; }
    double cell_size() const { return cell_size_; }
    std::size_t size() const { return values_.size(); }

    double& at(int i, int j) { return values_[index(i, j)]; }
    double at(int i, int j) const { return values_[index(i, j)]; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * width_ + i; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double sum() const;
    double max() const;

    /// Physical extent along x / y in meters.
    double extent_x() const { return width_ * cell_size_; }
    double extent_y() const { return height_ * cell_size_; }
    bool contains(Vec2 p) const;

    /// Bilinear interpolation at a physical point; coordinates outside the
    /// cell-center hull are clamped to it.
    double sample(Vec2 p) const;

    bool same_shape(const ScalarGrid& other) const;

private:
    int width_;
    int height_;
    double cell_size_;
    std::vector<double> values_;
};

/// Collocated velocity field in m/s.
class VelocityGrid
{
public:
    VelocityGrid(int width, int height, double cell_size);

    int width() const { return width_; }
    int height() const { return height_; }
    double cell_size() const { return cell_size_; }
    std::size_t size() const { return u_.size(); }

    std::span<double> u() { return u_; }
    std::span<double> v() { return v_; }
    std::span<const double> u() const { return u_; }
    std::span<const double> v() const { return v_; }

    double max_speed() const;
    bool matches(const ScalarGrid& g) const
    {
        return g.width() == width_ && g.height() == height_;
    }

private:
    int width_;
    int height_;
    double cell_size_;
    std::vector<double> u_;
    std::vector<double> v_;
};

}  // namespace plumeseek
