#pragma once

#include "plumeseek/grid.hpp"
#include "plumeseek/wind_model.hpp"

#include <vector>

namespace plumeseek {

struct MeasurementRecord
{
    Vec2 location;   // m, inside [0, domain_side]^2
    double time = 0.0;
    double gas = 0.0;
    WindMeasurement wind;
};

/// Readings collected over a square survey area [0, domain_side]^2.
struct MeasurementLog
{
    double domain_side = 0.0;
    std::vector<MeasurementRecord> records;

    std::size_t size() const { return records.size(); }
    double last_time() const { return records.empty() ? 0.0 : records.back().time; }

    std::vector<double> readings() const;
    std::vector<WindMeasurement> winds() const;

    /// Throws Error unless times are non-decreasing, locations are in the
    /// domain, readings are finite and >= 0 and there are min_records entries.
    void validate(std::size_t min_records = 2) const;
};

}  // namespace plumeseek
