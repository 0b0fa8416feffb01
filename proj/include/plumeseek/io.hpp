#pragma once

#include "plumeseek/active_sensing.hpp"
#include "plumeseek/harness.hpp"
#include "plumeseek/measurement.hpp"
#include "plumeseek/wind_model.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace plumeseek {

/// Malformed input file. The message names the file, line and column when
/// they are known.
class ParseError : public Error
{
public:
    using Error::Error;
};

/// A row-major field on a regular lattice, as written to disk.
struct GridData
{
    int width = 0;
    int height = 0;
    double cell_size = 0.0;
    std::vector<double> values;

    static GridData from(const ScalarGrid& g);
    static GridData from(const LikelihoodMap& m, double pitch);
};

/// CSV layout:
///   width,height,cell_size
///   <w>,<h>,<cell>
///   then `height` rows of `width` values, row j = 0 first.
/// Values are written with 17 significant digits so reading is lossless.
void write_grid_csv(const std::filesystem::path& path, const GridData& g);
GridData read_grid_csv(const std::filesystem::path& path);

/// Binary 8-bit PGM (P5). Value v maps to round(255 * v / max) with max the
/// largest entry (all zeros when max <= 0); the top image row is j = h - 1.
void write_pgm(const std::filesystem::path& path, const GridData& g);
std::vector<unsigned char> pgm_bytes(const GridData& g);
/// Reads a P5 file back into 8-bit samples, top row first.
std::vector<unsigned char> read_pgm(const std::filesystem::path& path, int& width, int& height);

/// Flight log CSV with header t_s,x_m,y_m,gas_ppm,wind_speed_mps,wind_dir_rad
/// (any column order, extra columns ignored).
MeasurementLog parse_flight_log(std::istream& in, double domain_side, const std::string& name = "log");
MeasurementLog read_flight_log(const std::filesystem::path& path, double domain_side);
void write_flight_log(const std::filesystem::path& path, const MeasurementLog& log);

/// Calibration CSV with header tilt_deg,speed_mps; rows may come in any order.
TiltCalibration parse_calibration(std::istream& in, const std::string& name = "calibration");
TiltCalibration read_calibration(const std::filesystem::path& path);

/// Formats a double for reports: shortest text that reads back exactly.
std::string format_number(double v);

/// Collects the files a command writes and emits the manifest last.
class RunManifest
{
public:
    RunManifest(std::filesystem::path out_dir, std::string command, std::string config_hash,
                std::uint64_t seed);

    const std::filesystem::path& dir() const { return dir_; }
    /// Full path for `name` inside the output directory; records it.
    std::filesystem::path file(const std::string& name);
    /// Writes manifest.json. Throws if called twice.
    void write();

private:
    std::filesystem::path dir_;
    std::string command_;
    std::string hash_;
    std::uint64_t seed_;
    std::vector<std::string> files_;
    bool written_ = false;
};

std::string artifact_version();

/// One JSON object per line, one line per iteration.
void write_transcript(const std::filesystem::path& path, const MissionState& state);

// Reports with a fixed column order.
void write_sweep_report(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                        std::uint64_t seed);
void write_speed_report(const std::filesystem::path& path, const std::vector<SpeedRow>& rows);
void write_curve_report(const std::filesystem::path& path, const std::vector<CurvePoint>& points,
                        std::uint64_t seed);
void write_curve_runs(const std::filesystem::path& path, const std::vector<CurveRun>& runs);
void write_run_reports(const std::filesystem::path& path, const std::vector<RunReport>& rows);

}  // namespace plumeseek
