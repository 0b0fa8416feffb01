#pragma once

#include "plumeseek/active_sensing.hpp"
#include "plumeseek/baselines.hpp"
#include "plumeseek/fluid_sim.hpp"
#include "plumeseek/ogs.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace plumeseek {

enum class WindMode
{
    none,
    constant,
    variable,
};

WindMode parse_wind_mode(const std::string& s);
std::string to_string(WindMode m);

/// Spatially constant synthetic wind. Variable wind redraws its direction
/// uniformly in base +- jitter at first_change and every change_period after.
struct WindProtocol
{
    WindMode mode = WindMode::variable;
    double speed = 25.0;             // as reported by the wind sensor
    double base_direction = 3.14159265358979323846;
    double jitter = 1.57079632679489661923;
    double change_period = 30.0;
    double first_change = 30.0;
};

struct EnvSpec
{
    SimParams world;         // hidden physics over the survey area
    int padding_cells = 0;   // world grid extends this far past every edge
    Vec2 source;             // survey coordinates
    WindProtocol wind;
    double noise = 0.0;      // multiplicative reading noise bound
    std::uint64_t seed = 0;
};

/// Hidden simulation queried at increasing times. Readings are the bilinear
/// density times (1 + u), u ~ U[-noise, noise].
class SyntheticEnv : public Environment
{
public:
    explicit SyntheticEnv(EnvSpec spec);
    SyntheticEnv(const SyntheticEnv&) = delete;
    SyntheticEnv& operator=(const SyntheticEnv&) = delete;

    double domain_side() const override { return spec_.world.domain_side; }
    MeasurementRecord sample(Vec2 location, double time) override;
    std::optional<Vec2> true_source() const override { return spec_.source; }

    /// Reported wind at time t (what the UAV's sensor reads).
    Vec2 wind_at(double t);
    /// Hidden field over the survey area after advancing to `time`.
    ScalarGrid density_at(double time);
    const EnvSpec& spec() const { return spec_; }
    std::uint64_t steps() const { return sim_.state().steps; }

private:
    EnvSpec spec_;
    Vec2 offset_;
    std::mt19937_64 wind_rng_;
    std::mt19937_64 noise_rng_;
    std::vector<double> directions_;
    double last_time_ = 0.0;
    Simulator sim_;
};

/// Replays a recorded flight: each query returns the logged reading nearest
/// to the requested location (first on ties), stamped with the query time.
class ReplayEnv : public Environment
{
public:
    explicit ReplayEnv(MeasurementLog log);

    double domain_side() const override { return log_.domain_side; }
    MeasurementRecord sample(Vec2 location, double time) override;

private:
    MeasurementLog log_;
    double last_time_ = 0.0;
};

double localization_error(Vec2 estimate, Vec2 truth);

/// Derives an independent stream seed from a run seed and a purpose tag.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// A synthetic survey: hidden world, model parameters and candidate grid.
struct Scenario
{
    std::string name = "default";
    EnvSpec env;             // source and seed are drawn per run
    SimParams model;         // what the localizer believes
    int candidates = 16;     // m = n
    int samples = 12;        // offline log length
    double sample_period = 20.0;
    double source_margin = 0.25;  // sources drawn in [margin, 1 - margin] * side
};

/// Offline scene: environment and a log sampled at random points.
struct Scene
{
    std::uint64_t seed = 0;
    Vec2 truth;
    MeasurementLog log;
};

/// Draws the source at a candidate center and samples `samples` uniformly
/// random locations at t = k * sample_period.
Scene make_scene(const Scenario& sc, std::uint64_t seed);

/// Error and cost of one localizer call.
struct RunReport
{
    std::string algorithm;
    std::uint64_t seed = 0;
    Vec2 estimate;
    Vec2 truth;
    double error = 0.0;
    double wall_seconds = 0.0;
    std::uint64_t simulations = 0;
    std::uint64_t steps = 0;
};

/// Runs one named algorithm on a log: ogs, gp, dmvw or bo-<acquisition>.
RunReport run_algorithm(const std::string& algo, const Scene& scene, const Scenario& sc,
                        int bo_budget = 50);

// ---------------------------------------------------------- sweeps ----

struct SweepRow
{
    std::string param;
    double value = 0.0;
    std::size_t runs = 0;
    double mean_error = 0.0;
    double var_error = 0.0;
    double median_error = 0.0;
    std::vector<double> errors;  // per scene, dataset order
};

/// Valid parameter names, in report order.
const std::vector<std::string>& sweep_parameters();

/// Default sweep values per parameter.
std::vector<double> default_sweep_values(const std::string& param, const SimParams& model);

/// Applies one model-side perturbation. fidelity is cells per meter.
SimParams perturb_model(const SimParams& base, const std::string& param, double value);
MeasurementLog perturb_log(const MeasurementLog& log, const std::string& param, double value);

/// Localizes every scene with only `param` changed in the model.
std::vector<SweepRow> sensitivity_sweep(const Scenario& sc, const std::string& param,
                                        const std::vector<double>& values,
                                        const std::vector<Scene>& dataset, int threads = 1);

// ------------------------------------------------------- benchmark ----

struct SpeedRow
{
    int resolution = 0;  // model cells per side
    std::uint64_t seed = 0;
    double ogs_seconds = 0.0;
    double ogs_error = 0.0;
    std::uint64_t ogs_steps = 0;
    std::string best_acquisition;
    double bo_seconds = 0.0;       // mean over acquisitions
    double bo_best_error = 0.0;
    std::vector<RunReport> bo;     // one per acquisition
    double speedup() const { return ogs_seconds > 0.0 ? bo_seconds / ogs_seconds : 0.0; }
};

/// For each resolution and seed: time OGS (4x cells, one simulation) against
/// BO with `bo_budget` survey-sized simulations per acquisition.
std::vector<SpeedRow> benchmark_speed(const Scenario& sc, const std::vector<int>& resolutions,
                                      const std::vector<std::string>& acquisitions, int bo_budget,
                                      const std::vector<std::uint64_t>& seeds);

// ------------------------------------------------------ convergence ----

/// Online policies for the convergence comparison: ogs, gp-lcb3, dmvw-lcb3.
Policy make_policy(const std::string& algo, const Scenario& sc, const CandidateGrid& grid,
                   const GpHyper& gp = {}, const DmvwParams& dmvw = {});

struct CurveRun
{
    std::string algorithm;
    WindMode wind = WindMode::variable;
    std::uint64_t seed = 0;
    std::vector<double> errors;  // index = samples - 1; entry 0 is the first sample
    int converged_samples = -1;  // log size at the first repeat, -1 if never
};

struct CurvePoint
{
    std::string algorithm;
    WindMode wind = WindMode::variable;
    std::size_t samples = 0;
    std::size_t runs = 0;
    double mean_error = 0.0;
    double sd_error = 0.0;
};

/// Initial waypoints for a seed: two random points in the survey area.
std::array<Vec2, 2> initial_waypoints(const Scenario& sc, std::uint64_t seed);

/// Runs each algorithm's loop for max_samples samples on the same worlds.
/// Before any inference the estimate is the survey center.
std::vector<CurveRun> convergence_runs(const Scenario& sc, const std::vector<std::string>& algorithms,
                                       WindMode wind, const std::vector<std::uint64_t>& seeds,
                                       int max_samples, int threads = 1);

std::vector<CurvePoint> summarize_curves(const std::vector<CurveRun>& runs);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots so the merge order is fixed.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace plumeseek
