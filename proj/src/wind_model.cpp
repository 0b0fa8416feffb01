#include "plumeseek/wind_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace plumeseek {

namespace {
constexpr double kTimeTol = 1e-9;
}

double normalize_angle(double a)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a < 0.0)
        a += two_pi;
    if (a >= two_pi)
        a = 0.0;
    return a;
}

Vec2 WindMeasurement::vector() const
{
    return {speed * std::cos(direction), speed * std::sin(direction)};
}

WindMeasurement WindMeasurement::from_vector(double time, Vec2 w)
{
    const double s = std::hypot(w.x, w.y);
    return {time, s, s > 0.0 ? normalize_angle(std::atan2(w.y, w.x)) : 0.0};
}

WindSeries::WindSeries(double step, std::vector<Vec2> samples) : step_(step), samples_(std::move(samples))
{
    if (!(step > 0.0))
        throw Error("wind series step must be positive");
    if (samples_.empty())
        throw Error("wind series needs at least one sample");
    for (const Vec2& w : samples_)
        if (!std::isfinite(w.x) || !std::isfinite(w.y))
            throw Error("wind series contains non-finite entries");
}

WindSeries WindSeries::constant(Vec2 w, double step, double horizon)
{
    const auto n = static_cast<std::size_t>(std::floor(horizon / step + kTimeTol)) + 1;
    return WindSeries(step, std::vector<Vec2>(n, w));
}

Vec2 WindSeries::at(double t) const
{
    if (t <= 0.0)
        return samples_.front();
    const auto k = static_cast<std::size_t>(std::floor(t / step_ + kTimeTol));
    return samples_[std::min(k, samples_.size() - 1)];
}

WindSeries reconstruct_wind(std::span<const WindMeasurement> measurements, double step,
                            double horizon)
{
    if (measurements.empty())
        throw Error("wind reconstruction needs at least one measurement");
    if (!(step > 0.0) || horizon < 0.0)
        throw Error("wind reconstruction needs step > 0 and horizon >= 0");

    std::vector<WindMeasurement> sorted(measurements.begin(), measurements.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const WindMeasurement& a, const WindMeasurement& b) { return a.time < b.time; });

    const auto n = static_cast<std::size_t>(std::floor(horizon / step + kTimeTol)) + 1;
    std::vector<Vec2> samples(n);
    std::size_t next = 0;
    Vec2 held = sorted.front().vector();
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * step;
        while (next < sorted.size() && sorted[next].time <= t + kTimeTol)
            held = sorted[next++].vector();
        samples[k] = held;
    }
    return WindSeries(step, std::move(samples));
}

TiltCalibration::TiltCalibration(std::vector<std::pair<double, double>> breakpoints)
    : points_(std::move(breakpoints))
{
    if (points_.size() < 2)
        throw Error("tilt calibration needs at least two breakpoints");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i].first > points_[i - 1].first))
            throw Error("tilt calibration angles must be strictly increasing");
        if (points_[i].second < points_[i - 1].second)
            throw Error("tilt calibration speeds must be non-decreasing");
    }
}

double TiltCalibration::speed_at(double tilt_deg) const
{
    if (tilt_deg <= points_.front().first)
        return points_.front().second;
    if (tilt_deg >= points_.back().first)
        return points_.back().second;
    auto hi = std::upper_bound(points_.begin(), points_.end(), tilt_deg,
                               [](double t, const auto& p) { return t < p.first; });
    auto lo = hi - 1;
    const double f = (tilt_deg - lo->first) / (hi->first - lo->first);
    return lo->second + f * (hi->second - lo->second);
}

double tilt_magnitude(double roll, double pitch)
{
    // Body z in world frame is (cos r sin p, -sin r, cos r cos p) for
    // R = Rz(yaw) Ry(pitch) Rx(roll); yaw does not change the vertical part.
    const double c = std::clamp(std::cos(roll) * std::cos(pitch), -1.0, 1.0);
    return std::acos(c);
}

WindMeasurement tilt_to_wind(double roll, double pitch, double yaw, const TiltCalibration& cal)
{
    const double tilt_deg = tilt_magnitude(roll, pitch) * 180.0 / std::numbers::pi;
    const double speed = cal.speed_at(tilt_deg);

    const double bx = std::cos(roll) * std::sin(pitch);
    const double by = -std::sin(roll);
    const double lx = std::cos(yaw) * bx - std::sin(yaw) * by;
    const double ly = std::sin(yaw) * bx + std::cos(yaw) * by;
    const double direction = (lx == 0.0 && ly == 0.0) ? 0.0 : normalize_angle(std::atan2(-ly, -lx));
    return {0.0, speed, direction};
}

}  // namespace plumeseek
