#pragma once

#include "plumeseek/grid.hpp"

#include <span>
#include <utility>
#include <vector>

namespace plumeseek {

/// A point wind reading. Direction is where the wind blows toward, measured
/// counterclockwise from +x, normalized to [0, 2*pi).
struct WindMeasurement
{
    double time = 0.0;
    double speed = 0.0;
    double direction = 0.0;

    Vec2 vector() const;
    static WindMeasurement from_vector(double time, Vec2 w);
};

double normalize_angle(double radians);

/// Spatially constant wind sampled densely in time at a fixed step.
class WindSeries
{
public:
    WindSeries(double step, std::vector<Vec2> samples);

    /// Constant wind over [0, horizon].
    static WindSeries constant(Vec2 w, double step, double horizon);

    double step() const { return step_; }
    double horizon() const { return step_ * static_cast<double>(samples_.size() - 1); }
    std::span<const Vec2> samples() const { return samples_; }

    /// Wind in effect at time t: the sample at floor(t / step), clamped to the
    /// series. A small tolerance absorbs rounding of t = k * step.
    Vec2 at(double t) const;

private:
    double step_;
    std::vector<Vec2> samples_;
};

/// Zero-order-hold reconstruction of a dense series from sparse readings.
/// Samples before the first reading take its value. Measurements need not be
/// sorted; ties in time resolve to the later entry.
WindSeries reconstruct_wind(std::span<const WindMeasurement> measurements, double step,
                            double horizon);

/// Piecewise-linear lookup from UAV tilt (degrees) to wind speed (m/s).
class TiltCalibration
{
public:
    explicit TiltCalibration(std::vector<std::pair<double, double>> breakpoints);

    double speed_at(double tilt_deg) const;
    const std::vector<std::pair<double, double>>& breakpoints() const { return points_; }

private:
    std::vector<std::pair<double, double>> points_;
};

/// Angle in radians between the body z-axis and world vertical.
double tilt_magnitude(double roll, double pitch);

/// Hovering multicopters lean into the wind, so the wind blows opposite to
/// the ground projection of the body z-axis. Time is left at zero.
WindMeasurement tilt_to_wind(double roll, double pitch, double yaw, const TiltCalibration& cal);

}  // namespace plumeseek
