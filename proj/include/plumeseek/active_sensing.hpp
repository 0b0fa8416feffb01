#pragma once

#include "plumeseek/measurement.hpp"
#include "plumeseek/ogs.hpp"

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace plumeseek {

/// Something that can be measured: a synthetic world or a replayed flight.
class Environment
{
public:
    virtual ~Environment() = default;

    virtual double domain_side() const = 0;

    /// Gas reading and wind at `location` and `time`. Times never go backward.
    virtual MeasurementRecord sample(Vec2 location, double time) = 0;

    /// Ground truth when the environment knows it.
    virtual std::optional<Vec2> true_source() const { return std::nullopt; }
};

/// One pass of the loop: what the localizer concluded after the newest
/// sample.
struct MissionIteration
{
    int iteration = 0;            // 1-based
    std::size_t samples = 0;      // log size the estimate was built from
    MeasurementRecord measurement; // newest sample
    std::size_t suggestion = 0;   // candidate index
    Vec2 estimate;
    LikelihoodMap likelihood;
    std::uint64_t steps = 0;      // solver steps spent on this iteration
    double wall_seconds = 0.0;
    bool converged = false;
};

struct MissionState
{
    MeasurementLog log;
    std::vector<Vec2> waypoints;  // one per log record
    LikelihoodMap likelihood;
    std::optional<std::size_t> last_suggestion;
    Vec2 estimate;
    int iterations = 0;
    bool converged = false;
    std::vector<MissionIteration> history;
};

struct MissionConfig
{
    std::array<Vec2, 2> init_waypoints{};
    int max_iters = 20;
    double sample_period = 20.0;  // s; also the modelled travel time
    /// Stop at the first repeated suggestion. When false the loop always
    /// runs max_iters iterations (used for convergence curves); the
    /// converged flag still records the first repeat.
    bool stop_on_convergence = true;
};

/// Result of one inference pass: the suggested candidate, where to fly next,
/// the likelihood over candidates and the cost spent.
struct PolicyStep
{
    std::size_t suggestion = 0;
    Vec2 estimate;
    Vec2 next;
    LikelihoodMap likelihood;
    std::uint64_t steps = 0;
};

using Policy = std::function<PolicyStep(const MeasurementLog&)>;

/// OGS on the full log, flying to the most likely source.
Policy ogs_policy(const SimParams& params, const CandidateGrid& grid);

/// Argmax of the likelihood map (first index on ties).
Vec2 next_waypoint(const MissionState& state, const CandidateGrid& grid);

/// Measure, infer, move, until the suggestion repeats or max_iters passes.
/// The first sample is taken at t = sample_period.
MissionState run_mission(Environment& env, const MissionConfig& config, const Policy& policy);

MissionState run_online(Environment& env, const MissionConfig& config, const SimParams& params,
                        const CandidateGrid& grid);

}  // namespace plumeseek
