#include "plumeseek/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace plumeseek {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::out | mode);
    if (!out)
        throw Error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path.string());
    return in;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

bool blank(const std::string& line)
{
    return trim(line).empty();
}

// Strict number parse: the whole field must be consumed.
bool parse_double(const std::string& s, double& v)
{
    if (s.empty())
        return false;
    const char* first = s.data();
    if (*first == '+')
        ++first;
    const auto [p, ec] = std::from_chars(first, s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
}

double field(const std::vector<std::string>& cells, std::size_t col, const std::string& col_name,
             const std::string& name, std::size_t line)
{
    double v = 0.0;
    if (col >= cells.size() || !parse_double(cells[col], v))
        throw ParseError(name + ":" + std::to_string(line) + ": column '" + col_name +
                         "' is not a number");
    return v;
}

/// Reads lines, counting from 1 and skipping blank ones.
class LineReader
{
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::string& line)
    {
        while (std::getline(in_, line)) {
            ++number_;
            if (!blank(line))
                return true;
        }
        return false;
    }
    std::size_t number() const { return number_; }

private:
    std::istream& in_;
    std::size_t number_ = 0;
};

std::size_t require_column(const std::vector<std::string>& header, const std::string& col,
                           const std::string& name)
{
    const auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end())
        throw ParseError(name + ": missing column '" + col + "'");
    return static_cast<std::size_t>(it - header.begin());
}

bool file_is_empty(const fs::path& p)
{
    std::error_code ec;
    return !fs::exists(p, ec) || fs::file_size(p, ec) == 0;
}

// Opens a report for appending; the header goes in only once.
std::ofstream open_report(const fs::path& path, const std::string& header)
{
    const bool fresh = file_is_empty(path);
    std::ofstream out = open_out(path, std::ios::app);
    if (fresh)
        out << header << '\n';
    return out;
}

}  // namespace

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (v == 0.0)
        return "0";  // folds -0 so reruns cannot differ in sign of zero
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// ------------------------------------------------------------- grids ----

GridData GridData::from(const ScalarGrid& g)
{
    return {g.width(), g.height(), g.cell_size(), {g.values().begin(), g.values().end()}};
}

GridData GridData::from(const LikelihoodMap& m, double pitch)
{
    return {m.m, m.n, pitch, m.probability};
}

void write_grid_csv(const fs::path& path, const GridData& g)
{
    if (g.values.size() != static_cast<std::size_t>(g.width) * g.height)
        throw Error("grid value count does not match its shape");
    std::ofstream out = open_out(path);
    out << "width,height,cell_size\n"
        << g.width << ',' << g.height << ',' << format_number(g.cell_size) << '\n';
    for (int j = 0; j < g.height; ++j) {
        for (int i = 0; i < g.width; ++i) {
            if (i)
                out << ',';
            out << format_number(g.values[static_cast<std::size_t>(j) * g.width + i]);
        }
        out << '\n';
    }
}

GridData read_grid_csv(const fs::path& path)
{
    std::ifstream in = open_in(path);
    const std::string name = path.string();
    LineReader lines(in);
    std::string line;
    if (!lines.next(line) || split_csv(line) != std::vector<std::string>{"width", "height", "cell_size"})
        throw ParseError(name + ":" + std::to_string(lines.number()) +
                         ": expected header width,height,cell_size");
    if (!lines.next(line))
        throw ParseError(name + ": missing grid dimensions");
    auto cells = split_csv(line);
    if (cells.size() != 3)
        throw ParseError(name + ":" + std::to_string(lines.number()) + ": expected 3 fields");
    GridData g;
    const double w = field(cells, 0, "width", name, lines.number());
    const double h = field(cells, 1, "height", name, lines.number());
    g.cell_size = field(cells, 2, "cell_size", name, lines.number());
    if (w < 1 || h < 1 || w != std::floor(w) || h != std::floor(h) || !(g.cell_size > 0.0))
        throw ParseError(name + ":" + std::to_string(lines.number()) + ": invalid grid dimensions");
    g.width = static_cast<int>(w);
    g.height = static_cast<int>(h);
    g.values.reserve(static_cast<std::size_t>(g.width) * g.height);
    for (int j = 0; j < g.height; ++j) {
        if (!lines.next(line))
            throw ParseError(name + ": expected " + std::to_string(g.height) + " rows, found " +
                             std::to_string(j));
        cells = split_csv(line);
        if (cells.size() != static_cast<std::size_t>(g.width))
            throw ParseError(name + ":" + std::to_string(lines.number()) + ": expected " +
                             std::to_string(g.width) + " values");
        for (int i = 0; i < g.width; ++i) {
            double v = 0.0;
            if (!parse_double(cells[i], v))
                throw ParseError(name + ":" + std::to_string(lines.number()) + ": bad value '" +
                                 cells[i] + "'");
            g.values.push_back(v);
        }
    }
    if (lines.next(line))
        throw ParseError(name + ":" + std::to_string(lines.number()) + ": unexpected extra row");
    return g;
}

std::vector<unsigned char> pgm_bytes(const GridData& g)
{
    double top = 0.0;
    for (double v : g.values)
        if (std::isfinite(v))
            top = std::max(top, v);
    std::vector<unsigned char> px(g.values.size(), 0);
    if (top > 0.0) {
        for (int r = 0; r < g.height; ++r) {
            const int j = g.height - 1 - r;
            for (int i = 0; i < g.width; ++i) {
                const double v = g.values[static_cast<std::size_t>(j) * g.width + i];
                const double s = std::isfinite(v) ? std::clamp(v / top, 0.0, 1.0) : 0.0;
                px[static_cast<std::size_t>(r) * g.width + i] =
                    static_cast<unsigned char>(std::lround(255.0 * s));
            }
        }
    }
    return px;
}

void write_pgm(const fs::path& path, const GridData& g)
{
    const auto px = pgm_bytes(g);
    std::ofstream out = open_out(path);
    out << "P5\n" << g.width << ' ' << g.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

std::vector<unsigned char> read_pgm(const fs::path& path, int& width, int& height)
{
    std::ifstream in = open_in(path);
    std::string magic;
    int maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (!in || magic != "P5" || width < 1 || height < 1 || maxval != 255)
        throw ParseError(path.string() + ": not an 8-bit P5 image");
    in.get();  // single whitespace before the raster
    std::vector<unsigned char> px(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (in.gcount() != static_cast<std::streamsize>(px.size()))
        throw ParseError(path.string() + ": truncated raster");
    return px;
}

// -------------------------------------------------------- flight log ----

namespace {
const std::vector<std::string> kLogColumns = {"t_s", "x_m", "y_m", "gas_ppm", "wind_speed_mps",
                                              "wind_dir_rad"};
}

MeasurementLog parse_flight_log(std::istream& in, double domain_side, const std::string& name)
{
    LineReader lines(in);
    std::string line;
    if (!lines.next(line))
        throw ParseError(name + ": empty file, header required");
    const auto header = split_csv(line);
    std::vector<std::size_t> col;
    for (const auto& c : kLogColumns)
        col.push_back(require_column(header, c, name));

    MeasurementLog log;
    log.domain_side = domain_side;
    while (lines.next(line)) {
        const auto cells = split_csv(line);
        const std::size_t ln = lines.number();
        if (cells.size() != header.size())
            throw ParseError(name + ":" + std::to_string(ln) + ": expected " +
                             std::to_string(header.size()) + " fields, found " +
                             std::to_string(cells.size()));
        double v[6];
        for (std::size_t k = 0; k < 6; ++k)
            v[k] = field(cells, col[k], kLogColumns[k], name, ln);
        for (std::size_t k = 0; k < 6; ++k)
            if (!std::isfinite(v[k]))
                throw ParseError(name + ":" + std::to_string(ln) + ": column '" + kLogColumns[k] +
                                 "' is not finite");
        if (v[3] < 0.0)
            throw ParseError(name + ":" + std::to_string(ln) + ": negative gas reading");
        if (v[4] < 0.0)
            throw ParseError(name + ":" + std::to_string(ln) + ": negative wind speed");
        if (!log.records.empty() && v[0] < log.records.back().time)
            throw ParseError(name + ":" + std::to_string(ln) + ": time goes backward");
        if (v[1] < 0.0 || v[1] > domain_side || v[2] < 0.0 || v[2] > domain_side)
            throw ParseError(name + ":" + std::to_string(ln) + ": location outside the survey area");
        MeasurementRecord r;
        r.time = v[0];
        r.location = {v[1], v[2]};
        r.gas = v[3];
        r.wind = {v[0], v[4], normalize_angle(v[5])};
        log.records.push_back(r);
    }
    if (log.records.empty())
        throw ParseError(name + ": no measurements");
    return log;
}

MeasurementLog read_flight_log(const fs::path& path, double domain_side)
{
    std::ifstream in = open_in(path);
    return parse_flight_log(in, domain_side, path.string());
}

void write_flight_log(const fs::path& path, const MeasurementLog& log)
{
    std::ofstream out = open_out(path);
    out << "t_s,x_m,y_m,gas_ppm,wind_speed_mps,wind_dir_rad\n";
    for (const auto& r : log.records)
        out << format_number(r.time) << ',' << format_number(r.location.x) << ','
            << format_number(r.location.y) << ',' << format_number(r.gas) << ','
            << format_number(r.wind.speed) << ',' << format_number(r.wind.direction) << '\n';
}

TiltCalibration parse_calibration(std::istream& in, const std::string& name)
{
    LineReader lines(in);
    std::string line;
    if (!lines.next(line))
        throw ParseError(name + ": empty file, header required");
    const auto header = split_csv(line);
    const std::size_t ct = require_column(header, "tilt_deg", name);
    const std::size_t cs = require_column(header, "speed_mps", name);
    std::vector<std::pair<double, double>> points;
    while (lines.next(line)) {
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw ParseError(name + ":" + std::to_string(lines.number()) + ": expected " +
                             std::to_string(header.size()) + " fields");
        points.emplace_back(field(cells, ct, "tilt_deg", name, lines.number()),
                            field(cells, cs, "speed_mps", name, lines.number()));
    }
    std::stable_sort(points.begin(), points.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    try {
        return TiltCalibration(std::move(points));
    } catch (const Error& e) {
        throw ParseError(name + ": " + e.what());
    }
}

TiltCalibration read_calibration(const fs::path& path)
{
    std::ifstream in = open_in(path);
    return parse_calibration(in, path.string());
}

// ---------------------------------------------------------- manifest ----

std::string artifact_version()
{
    return "0.1.0";
}

RunManifest::RunManifest(fs::path out_dir, std::string command, std::string config_hash,
                         std::uint64_t seed)
    : dir_(std::move(out_dir)), command_(std::move(command)), hash_(std::move(config_hash)), seed_(seed)
{
    fs::create_directories(dir_);
}

fs::path RunManifest::file(const std::string& name)
{
    if (std::find(files_.begin(), files_.end(), name) == files_.end())
        files_.push_back(name);
    return dir_ / name;
}

void RunManifest::write()
{
    if (written_)
        throw Error("manifest already written");
    nlohmann::ordered_json j;
    j["command"] = command_;
    j["config_hash"] = hash_;
    j["seed"] = seed_;
    j["version"] = artifact_version();
    j["outputs"] = files_;
    std::ofstream out = open_out(dir_ / "manifest.json");
    out << j.dump(2) << '\n';
    written_ = true;
}

// -------------------------------------------------------- transcript ----

void write_transcript(const fs::path& path, const MissionState& state)
{
    std::ofstream out = open_out(path);
    for (std::size_t k = 0; k < state.history.size(); ++k) {
        const MissionIteration& it = state.history[k];
        const MeasurementRecord& m = it.measurement;
        nlohmann::ordered_json j;
        j["iteration"] = it.iteration;
        j["t_s"] = m.time;
        j["waypoint"] = {m.location.x, m.location.y};
        j["gas_ppm"] = m.gas;
        j["wind_speed_mps"] = m.wind.speed;
        j["wind_dir_rad"] = m.wind.direction;
        j["estimate"] = {it.estimate.x, it.estimate.y};
        j["candidate"] = it.suggestion;
        j["steps"] = it.steps;
        j["converged"] = it.converged;
        out << j.dump() << '\n';
    }
}

// ----------------------------------------------------------- reports ----

void write_sweep_report(const fs::path& path, const std::vector<SweepRow>& rows, std::uint64_t seed)
{
    std::ofstream out =
        open_report(path, "param,value,runs,mean_error_m,var_error_m2,median_error_m,seed");
    for (const auto& r : rows)
        out << r.param << ',' << format_number(r.value) << ',' << r.runs << ','
            << format_number(r.mean_error) << ',' << format_number(r.var_error) << ','
            << format_number(r.median_error) << ',' << seed << '\n';
}

void write_speed_report(const fs::path& path, const std::vector<SpeedRow>& rows)
{
    std::ofstream out = open_report(
        path, "resolution,seed,algorithm,error_m,simulations,steps,wall_s");
    for (const auto& r : rows) {
        out << r.resolution << ',' << r.seed << ",ogs," << format_number(r.ogs_error) << ",1,"
            << r.ogs_steps << ',' << format_number(r.ogs_seconds) << '\n';
        for (const auto& b : r.bo)
            out << r.resolution << ',' << r.seed << ',' << b.algorithm << ','
                << format_number(b.error) << ',' << b.simulations << ',' << b.steps << ','
                << format_number(b.wall_seconds) << '\n';
    }
}

void write_curve_report(const fs::path& path, const std::vector<CurvePoint>& points, std::uint64_t seed)
{
    std::ofstream out =
        open_report(path, "algorithm,wind,samples,runs,mean_error_m,sd_error_m,seed");
    for (const auto& p : points)
        out << p.algorithm << ',' << to_string(p.wind) << ',' << p.samples << ',' << p.runs << ','
            << format_number(p.mean_error) << ',' << format_number(p.sd_error) << ',' << seed << '\n';
}

void write_curve_runs(const fs::path& path, const std::vector<CurveRun>& runs)
{
    std::ofstream out = open_report(path, "algorithm,wind,seed,samples,error_m,converged_samples");
    for (const auto& r : runs)
        for (std::size_t k = 0; k < r.errors.size(); ++k)
            out << r.algorithm << ',' << to_string(r.wind) << ',' << r.seed << ',' << k + 1 << ','
                << format_number(r.errors[k]) << ',' << r.converged_samples << '\n';
}

void write_run_reports(const fs::path& path, const std::vector<RunReport>& rows)
{
    std::ofstream out = open_report(
        path, "algorithm,seed,estimate_x_m,estimate_y_m,truth_x_m,truth_y_m,error_m,simulations,steps,wall_s");
    for (const auto& r : rows)
        out << r.algorithm << ',' << r.seed << ',' << format_number(r.estimate.x) << ','
            << format_number(r.estimate.y) << ',' << format_number(r.truth.x) << ','
            << format_number(r.truth.y) << ',' << format_number(r.error) << ',' << r.simulations
            << ',' << r.steps << ',' << format_number(r.wall_seconds) << '\n';
}

}  // namespace plumeseek
