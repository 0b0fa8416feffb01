#pragma once

#include "plumeseek/grid.hpp"
#include "plumeseek/wind_model.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace plumeseek {

enum class BoundaryMode
{
    closed,
    open,
};

/// Solver configuration and the hidden physical parameters of the plume.
/// Units: meters, seconds, m/s. The solver itself works in cells and steps;
/// conversions happen here and nowhere else.
struct SimParams
{
    int grid_cells_per_side = 80;
    double domain_side = 80.0;
    double diffusion = 1e-4;       // m^2/s
    double dt = 1.0;               // s
    int solver_iterations = 20;
    double emission_rate = 50.0;   // concentration * cells / s
    double wind_coupling = 1.0;    // measured wind (m/s) -> solver velocity (m/s)
    BoundaryMode boundary = BoundaryMode::open;

    double cell_size() const { return domain_side / grid_cells_per_side; }

    /// Throws Error on any violated invariant.
    void validate() const;

    /// Same cell size, twice the side: the one-shot localization domain.
    SimParams enlarged() const;
};

struct SimState
{
    ScalarGrid density;
    VelocityGrid velocity;
    double sim_time = 0.0;
    std::uint64_t steps = 0;

    static SimState empty(const SimParams& params);
};

struct SimStats
{
    std::uint64_t simulations = 0;
    std::uint64_t steps = 0;

    SimStats& operator+=(const SimStats& o)
    {
        simulations += o.simulations;
        steps += o.steps;
        return *this;
    }
};

struct Probe
{
    Vec2 location;
    double time = 0.0;
};

/// Emits rate * dt units at `location`, split bilinearly over the four
/// surrounding cell centers. Throws OutOfDomainError outside the domain.
void add_source(SimState& state, Vec2 location, double rate, double dt);

/// Implicit diffusion (I - a L) x = x0 with a = dt * diffusion / h^2 and a
/// zero-flux boundary, relaxed by lexicographic Gauss-Seidel sweeps.
ScalarGrid diffuse(const ScalarGrid& field, double diffusion, double dt, int iterations);

/// Semi-Lagrangian transport with backtrace x - dt * velocity(x), clamped to
/// the cell-center hull.
ScalarGrid advect(const ScalarGrid& field, const VelocityGrid& velocity, double dt);

/// Discrete central-difference divergence in 1/s, one value per cell.
std::vector<double> divergence(const VelocityGrid& velocity, BoundaryMode mode);

/// Orthogonal projection onto the kernel of the discrete divergence.
/// Solves D D^T p = D u by preconditioned conjugate gradients with at most
/// `iterations` iterations and returns u - D^T p.
VelocityGrid project(const VelocityGrid& velocity, int iterations, BoundaryMode mode);

/// Replaces the velocity with the spatially constant coupling * wind.
void apply_wind(VelocityGrid& velocity, Vec2 wind, double coupling);

/// One solver step: wind, project, self-advect, project, emit, diffuse,
/// advect density. Advances sim_time by dt.
void step(SimState& state, const SimParams& params, Vec2 wind, Vec2 source, bool emit);

/// Number of completed steps whose end time is at or before t.
std::uint64_t steps_until(double t, double dt);

using WindFn = std::function<Vec2(double)>;

/// A running simulation with a fixed source, advanced on demand.
class Simulator
{
public:
    Simulator(SimParams params, WindFn wind, Vec2 source, bool emit = true);

    const SimParams& params() const { return params_; }
    const SimState& state() const { return state_; }
    Vec2 source() const { return source_; }

    /// Runs steps until `steps` have been completed. Never goes backward.
    void advance_to(std::uint64_t steps);

    SimStats stats() const { return {1, state_.steps}; }

private:
    SimParams params_;
    WindFn wind_;
    Vec2 source_;
    bool emit_;
    SimState state_;
};

/// Concentration at each probe. Probe times must be non-decreasing and
/// within the wind horizon; each probe reads the field after the last step
/// completed at its time.
std::vector<double> simulate(const SimParams& params, const WindSeries& wind, Vec2 source,
                             const std::vector<Probe>& probes, SimStats* stats = nullptr);

}  // namespace plumeseek
