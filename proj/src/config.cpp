#include "plumeseek/config.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace plumeseek {

using nlohmann::json;

namespace {

bool check_type(const json& j, int*) { return j.is_number_integer(); }
bool check_type(const json& j, std::uint64_t*) { return j.is_number_unsigned(); }
bool check_type(const json& j, double*) { return j.is_number(); }
bool check_type(const json& j, std::string*) { return j.is_string(); }
template <class T>
bool check_type(const json& j, std::vector<T>*)
{
    if (!j.is_array())
        return false;
    for (const auto& e : j)
        if (!check_type(e, static_cast<T*>(nullptr)))
            return false;
    return true;
}

const char* type_name(int*) { return "an integer"; }
const char* type_name(std::uint64_t*) { return "a non-negative integer"; }
const char* type_name(double*) { return "a number"; }
const char* type_name(std::string*) { return "a string"; }
const char* type_name(std::vector<double>*) { return "an array of numbers"; }
const char* type_name(std::vector<int>*) { return "an array of integers"; }
const char* type_name(std::vector<std::string>*) { return "an array of strings"; }

struct Key
{
    std::string name;
    std::function<void(Config&, const json&, const std::string&)> read;
    std::function<void(const Config&, json&)> write;
};

template <class T>
Key key_of(std::string name, T Config::*member)
{
    Key k;
    k.name = name;
    k.read = [name, member](Config& c, const json& j, const std::string& file) {
        if (!check_type(j, static_cast<T*>(nullptr)))
            throw Error(file + ": key '" + name + "' must be " + type_name(static_cast<T*>(nullptr)));
        c.*member = j.get<T>();
    };
    k.write = [name, member](const Config& c, json& out) { out[name] = c.*member; };
    return k;
}

const std::vector<Key>& keys()
{
    static const std::vector<Key> k = {
        key_of("seed", &Config::seed),
        key_of("cells", &Config::cells),
        key_of("domain_side", &Config::domain_side),
        key_of("diffusion", &Config::diffusion),
        key_of("dt", &Config::dt),
        key_of("solver_iterations", &Config::solver_iterations),
        key_of("emission_rate", &Config::emission_rate),
        key_of("wind_coupling", &Config::wind_coupling),
        key_of("boundary", &Config::boundary),
        key_of("env_emission_rate", &Config::env_emission_rate),
        key_of("env_diffusion", &Config::env_diffusion),
        key_of("padding_cells", &Config::padding_cells),
        key_of("source_x", &Config::source_x),
        key_of("source_y", &Config::source_y),
        key_of("wind_mode", &Config::wind_mode),
        key_of("wind_speed", &Config::wind_speed),
        key_of("wind_direction", &Config::wind_direction),
        key_of("wind_jitter", &Config::wind_jitter),
        key_of("wind_period", &Config::wind_period),
        key_of("wind_first_change", &Config::wind_first_change),
        key_of("noise", &Config::noise),
        key_of("candidates", &Config::candidates),
        key_of("temperature", &Config::temperature),
        key_of("samples", &Config::samples),
        key_of("sample_period", &Config::sample_period),
        key_of("probes_x", &Config::probes_x),
        key_of("probes_y", &Config::probes_y),
        key_of("horizon", &Config::horizon),
        key_of("snapshot_every", &Config::snapshot_every),
        key_of("init_waypoints", &Config::init_waypoints),
        key_of("max_iters", &Config::max_iters),
        key_of("replay_log", &Config::replay_log),
        key_of("snapshot_every_iter", &Config::snapshot_every_iter),
        key_of("gp_kernel", &Config::gp_kernel),
        key_of("gp_variance", &Config::gp_variance),
        key_of("gp_lengthscale", &Config::gp_lengthscale),
        key_of("gp_noise", &Config::gp_noise),
        key_of("dmvw_cell_size", &Config::dmvw_cell_size),
        key_of("dmvw_kernel_size", &Config::dmvw_kernel_size),
        key_of("dmvw_radius", &Config::dmvw_radius),
        key_of("dmvw_time_scale", &Config::dmvw_time_scale),
        key_of("dmvw_wind_scale", &Config::dmvw_wind_scale),
        key_of("bo_budget", &Config::bo_budget),
        key_of("bo_acquisition", &Config::bo_acquisition),
        key_of("bench_seeds", &Config::bench_seeds),
        key_of("bench_sweeps", &Config::bench_sweeps),
        key_of("bench_resolutions", &Config::bench_resolutions),
        key_of("bench_acquisitions", &Config::bench_acquisitions),
        key_of("bench_curves", &Config::bench_curves),
        key_of("bench_curve_samples", &Config::bench_curve_samples),
    };
    return k;
}

void require(bool ok, const std::string& key, const std::string& what)
{
    if (!ok)
        throw Error("config key '" + key + "' " + what);
}

}  // namespace

Config parse_config(const std::string& text, const std::string& name)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(name + ": invalid JSON: " + e.what());
    }
    if (!j.is_object())
        throw Error(name + ": top level must be an object");
    Config c;
    for (const auto& [k, v] : j.items()) {
        const Key* found = nullptr;
        for (const Key& key : keys())
            if (key.name == k)
                found = &key;
        if (!found)
            throw Error(name + ": unknown key '" + k + "'");
        found->read(c, v, name);
    }
    c.validate();
    return c;
}

Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

void Config::validate() const
{
    require(cells >= 2, "cells", "must be >= 2");
    require(domain_side > 0.0, "domain_side", "must be positive");
    require(padding_cells >= 0, "padding_cells", "must be >= 0");
    require(candidates >= 1, "candidates", "must be >= 1");
    require(samples >= 1, "samples", "must be >= 1");
    require(sample_period > 0.0, "sample_period", "must be positive");
    require(probes_x.size() == probes_y.size(), "probes_y", "must have as many entries as probes_x");
    require(init_waypoints.size() == 4, "init_waypoints", "must hold x1,y1,x2,y2");
    for (double v : init_waypoints)
        require(v >= 0.0 && v <= domain_side, "init_waypoints", "must lie in the survey area");
    require(source_x >= 0.0 && source_x <= domain_side, "source_x", "must lie in the survey area");
    require(source_y >= 0.0 && source_y <= domain_side, "source_y", "must lie in the survey area");
    require(max_iters >= 1, "max_iters", "must be >= 1");
    require(snapshot_every_iter >= 0, "snapshot_every_iter", "must be >= 0");
    require(bench_seeds >= 1, "bench_seeds", "must be >= 1");
    require(bench_curve_samples >= 2, "bench_curve_samples", "must be >= 2");
    for (int r : bench_resolutions)
        require(r >= 2, "bench_resolutions", "entries must be >= 2");
    require(boundary == "open" || boundary == "closed", "boundary", "must be 'open' or 'closed'");
    require(gp_kernel == "rbf" || gp_kernel == "matern52", "gp_kernel", "must be 'rbf' or 'matern52'");
    try {
        parse_wind_mode(wind_mode);
        Acquisition::parse(bo_acquisition);
        for (const auto& a : bench_acquisitions)
            Acquisition::parse(a);
        model().validate();
        env();
        gp().validate();
        dmvw().validate();
    } catch (const Error& e) {
        throw Error(std::string("invalid config: ") + e.what());
    }
    for (const auto& p : bench_sweeps) {
        const auto& known = sweep_parameters();
        require(std::find(known.begin(), known.end(), p) != known.end(), "bench_sweeps",
                "names unknown parameter '" + p + "'");
    }
    for (const auto& a : bench_curves)
        require(a == "ogs" || a == "gp-lcb3" || a == "dmvw-lcb3", "bench_curves",
                "names unknown algorithm '" + a + "'");
}

SimParams Config::model() const
{
    SimParams p;
    p.grid_cells_per_side = cells;
    p.domain_side = domain_side;
    p.diffusion = diffusion;
    p.dt = dt;
    p.solver_iterations = solver_iterations;
    p.emission_rate = emission_rate;
    p.wind_coupling = wind_coupling;
    p.boundary = boundary == "closed" ? BoundaryMode::closed : BoundaryMode::open;
    return p;
}

EnvSpec Config::env() const
{
    EnvSpec e;
    e.world = model();
    if (env_emission_rate >= 0.0)
        e.world.emission_rate = env_emission_rate;
    if (env_diffusion >= 0.0)
        e.world.diffusion = env_diffusion;
    e.padding_cells = padding_cells;
    e.source = {source_x, source_y};
    e.wind.mode = parse_wind_mode(wind_mode);
    e.wind.speed = wind_speed;
    e.wind.base_direction = wind_direction;
    e.wind.jitter = wind_jitter;
    e.wind.change_period = wind_period;
    e.wind.first_change = wind_first_change;
    e.noise = noise;
    e.seed = seed;
    if (!(noise >= 0.0 && noise <= 1.0))
        throw Error("noise must lie in [0, 1]");
    return e;
}

Scenario Config::scenario() const
{
    Scenario s;
    s.env = env();
    s.model = model();
    s.candidates = candidates;
    s.samples = samples;
    s.sample_period = sample_period;
    return s;
}

GpHyper Config::gp() const
{
    GpHyper h;
    h.kernel = gp_kernel == "matern52" ? KernelKind::matern52 : KernelKind::rbf;
    h.variance = gp_variance;
    h.lengthscale = gp_lengthscale;
    h.noise = gp_noise;
    return h;
}

DmvwParams Config::dmvw() const
{
    DmvwParams p;
    p.cell_size = dmvw_cell_size;
    p.kernel_size = dmvw_kernel_size;
    p.evaluation_radius = dmvw_radius;
    p.time_scale = dmvw_time_scale;
    p.wind_scale = dmvw_wind_scale;
    return p;
}

CandidateGrid Config::grid() const
{
    return CandidateGrid(candidates, candidates, domain_side);
}

MissionConfig Config::mission() const
{
    MissionConfig m;
    m.init_waypoints = {Vec2{init_waypoints[0], init_waypoints[1]},
                        Vec2{init_waypoints[2], init_waypoints[3]}};
    m.max_iters = max_iters;
    m.sample_period = sample_period;
    return m;
}

std::string Config::canonical() const
{
    json out = json::object();  // keys sorted by nlohmann's default map
    for (const Key& k : keys())
        k.write(*this, out);
    return out.dump();
}

std::string Config::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace plumeseek
