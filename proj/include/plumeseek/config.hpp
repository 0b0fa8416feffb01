#pragma once

#include "plumeseek/baselines.hpp"
#include "plumeseek/harness.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace plumeseek {

/// Flat run configuration. Every key is optional; unknown keys and wrong
/// types are rejected. Units: meters, seconds, m/s, radians.
struct Config
{
    std::uint64_t seed = 0;

    // model (and, unless overridden, hidden world) physics
    int cells = 80;
    double domain_side = 80.0;
    double diffusion = 0.64;          // m^2/s
    double dt = 1.0;
    int solver_iterations = 20;
    double emission_rate = 50.0;
    double wind_coupling = 0.01;
    std::string boundary = "open";

    // hidden world
    double env_emission_rate = -1.0;  // < 0: same as emission_rate
    double env_diffusion = -1.0;      // < 0: same as diffusion
    int padding_cells = 40;
    double source_x = 62.5;
    double source_y = 42.5;
    std::string wind_mode = "variable";
    double wind_speed = 25.0;
    double wind_direction = 3.14159265358979323846;
    double wind_jitter = 1.57079632679489661923;
    double wind_period = 30.0;
    double wind_first_change = 30.0;
    double noise = 0.0;

    // localization
    int candidates = 16;
    double temperature = 0.0;         // <= 0: automatic

    // sampling: simulate probes and offline scenes
    int samples = 12;
    double sample_period = 20.0;
    std::vector<double> probes_x;     // explicit probe locations; random when empty
    std::vector<double> probes_y;
    double horizon = 0.0;             // simulate: <= 0 means the last probe time
    double snapshot_every = 60.0;

    // active sensing
    std::vector<double> init_waypoints = {40.0, 40.0, 30.0, 45.0};  // x1,y1,x2,y2
    int max_iters = 20;
    std::string replay_log;           // replay a recorded flight instead of the synthetic world
    int snapshot_every_iter = 1;

    // baselines
    std::string gp_kernel = "rbf";
    double gp_variance = 15.0;
    double gp_lengthscale = 7.0;
    double gp_noise = 0.01;
    double dmvw_cell_size = 0.2;
    double dmvw_kernel_size = 10.0;
    double dmvw_radius = 10.0;
    double dmvw_time_scale = 600.0;
    double dmvw_wind_scale = 0.04;
    int bo_budget = 50;
    std::string bo_acquisition = "lcb3";

    // bench
    int bench_seeds = 20;
    std::vector<std::string> bench_sweeps = {"gas_release", "diffusion", "wind_speed_scale",
                                             "wind_direction_offset", "fidelity"};
    std::vector<int> bench_resolutions = {64};
    std::vector<std::string> bench_acquisitions = {"lcb3", "ei", "mpi"};
    std::vector<std::string> bench_curves = {"ogs", "gp-lcb3", "dmvw-lcb3"};
    int bench_curve_samples = 20;

    /// Checks cross-field invariants; throws Error naming the key.
    void validate() const;

    SimParams model() const;
    EnvSpec env() const;
    Scenario scenario() const;
    GpHyper gp() const;
    DmvwParams dmvw() const;
    CandidateGrid grid() const;
    MissionConfig mission() const;

    /// Canonical JSON of every key with its effective value.
    std::string canonical() const;
    /// FNV-1a 64 of canonical(), as 16 hex digits.
    std::string hash() const;
};

Config parse_config(const std::string& text, const std::string& name = "config");
Config load_config(const std::filesystem::path& path);

}  // namespace plumeseek
