#include "plumeseek/fluid_sim.hpp"

#include "plumeseek/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace plumeseek {

namespace {

constexpr double kTimeTol = 1e-9;

std::string fmt_point(Vec2 p)
{
    std::ostringstream os;
    os << "(" << p.x << ", " << p.y << ")";
    return os.str();
}

// One Gauss-Seidel update of an edge cell; missing neighbors drop out of both
// the sum and the diagonal, which keeps the implicit system mass conserving.
inline double edge_update(const double* x, const double* x0, int w, int h, int i, int j, double a)
{
    const std::size_t k = static_cast<std::size_t>(j) * w + i;
    double s = 0.0;
    int n = 0;
    if (i > 0) { s += x[k - 1]; ++n; }
    if (i < w - 1) { s += x[k + 1]; ++n; }
    if (j > 0) { s += x[k - w]; ++n; }
    if (j < h - 1) { s += x[k + w]; ++n; }
    return (x0[k] + a * s) / (1.0 + a * n);
}

}  // namespace

void SimParams::validate() const
{
    if (grid_cells_per_side < 4)
        throw Error("grid_cells_per_side must be >= 4");
    if (!(domain_side > 0.0))
        throw Error("domain_side must be positive");
    if (!(diffusion >= 0.0))
        throw Error("diffusion must be >= 0");
    if (!(dt > 0.0))
        throw Error("dt must be positive");
    if (solver_iterations < 1)
        throw Error("solver_iterations must be >= 1");
    if (!(emission_rate >= 0.0))
        throw Error("emission_rate must be >= 0");
    if (!std::isfinite(wind_coupling))
        throw Error("wind_coupling must be finite");
}

SimParams SimParams::enlarged() const
{
    SimParams p = *this;
    p.grid_cells_per_side = 2 * grid_cells_per_side;
    p.domain_side = 2.0 * domain_side;
    return p;
}

SimState SimState::empty(const SimParams& params)
{
    params.validate();
    const int n = params.grid_cells_per_side;
    const double h = params.cell_size();
    return SimState{ScalarGrid(n, n, h), VelocityGrid(n, n, h), 0.0, 0};
}

void add_source(SimState& state, Vec2 location, double rate, double dt)
{
    ScalarGrid& d = state.density;
    if (!d.contains(location))
        throw OutOfDomainError("source location " + fmt_point(location) + " is outside the domain");
    if (rate == 0.0)
        return;
    const int w = d.width();
    const int h = d.height();
    const double cx = std::clamp(location.x / d.cell_size() - 0.5, 0.0, static_cast<double>(w - 1));
    const double cy = std::clamp(location.y / d.cell_size() - 0.5, 0.0, static_cast<double>(h - 1));
    const int i0 = std::min(static_cast<int>(std::floor(cx)), w - 2);
    const int j0 = std::min(static_cast<int>(std::floor(cy)), h - 2);
    const double tx = cx - i0;
    const double ty = cy - j0;
    const double mass = rate * dt;
    d.at(i0, j0) += mass * (1.0 - tx) * (1.0 - ty);
    d.at(i0 + 1, j0) += mass * tx * (1.0 - ty);
    d.at(i0, j0 + 1) += mass * (1.0 - tx) * ty;
    d.at(i0 + 1, j0 + 1) += mass * tx * ty;
}

ScalarGrid diffuse(const ScalarGrid& field, double diffusion, double dt, int iterations)
{
    if (iterations < 1)
        throw Error("diffuse needs at least one iteration");
    ScalarGrid out = field;
    const double h = field.cell_size();
    const double a = dt * diffusion / (h * h);
    if (a == 0.0)
        return out;

    const int w = field.width();
    const int ht = field.height();
    const double* x0 = field.values().data();
    double* x = out.values().data();
    const double inv4 = 1.0 / (1.0 + 4.0 * a);
    const auto& k = simd::kernels();
    std::vector<double> s(static_cast<std::size_t>(w));

    for (int it = 0; it < iterations; ++it) {
        for (int i = 0; i < w; ++i)
            x[i] = edge_update(x, x0, w, ht, i, 0, a);
        for (int j = 1; j < ht - 1; ++j) {
            double* row = x + static_cast<std::size_t>(j) * w;
            const double* row0 = x0 + static_cast<std::size_t>(j) * w;
            row[0] = edge_update(x, x0, w, ht, 0, j, a);
            // Right (old), up (new) and down (old) neighbors do not depend on
            // the row being updated, so they can be summed ahead of the
            // left-to-right recurrence.
            k.sum3(row + 2, row - w + 1, row + w + 1, s.data(), static_cast<std::size_t>(w - 2));
            for (int i = 1; i < w - 1; ++i)
                row[i] = (row0[i] + a * (s[i - 1] + row[i - 1])) * inv4;
            row[w - 1] = edge_update(x, x0, w, ht, w - 1, j, a);
        }
        for (int i = 0; i < w; ++i)
            x[static_cast<std::size_t>(ht - 1) * w + i] = edge_update(x, x0, w, ht, i, ht - 1, a);
    }
    for (double& v : out.values())
        v = std::max(v, 0.0);
    return out;
}

ScalarGrid advect(const ScalarGrid& field, const VelocityGrid& velocity, double dt)
{
    if (!velocity.matches(field))
        throw Error("advect: velocity and field dimensions differ");
    ScalarGrid out(field.width(), field.height(), field.cell_size());
    simd::kernels().advect(out.values().data(), field.values().data(), velocity.u().data(),
                           velocity.v().data(), field.width(), field.height(),
                           dt / field.cell_size());
    return out;
}

std::vector<double> divergence(const VelocityGrid& velocity, BoundaryMode mode)
{
    std::vector<double> out(velocity.size());
    simd::kernels().divergence(velocity.u().data(), velocity.v().data(), velocity.width(),
                               velocity.height(),
                               mode == BoundaryMode::open ? simd::Boundary::open : simd::Boundary::closed,
                               out.data());
    const double inv_h = 1.0 / velocity.cell_size();
    for (double& d : out)
        d *= inv_h;
    return out;
}

void apply_wind(VelocityGrid& velocity, Vec2 wind, double coupling)
{
    if (!std::isfinite(wind.x) || !std::isfinite(wind.y))
        throw Error("apply_wind: wind must be finite");
    std::fill(velocity.u().begin(), velocity.u().end(), coupling * wind.x);
    std::fill(velocity.v().begin(), velocity.v().end(), coupling * wind.y);
}

void step(SimState& state, const SimParams& params, Vec2 wind, Vec2 source, bool emit)
{
    VelocityGrid& vel = state.velocity;
    apply_wind(vel, wind, params.wind_coupling);
    vel = project(vel, params.solver_iterations, params.boundary);

    {
        const auto& k = simd::kernels();
        std::vector<double> u1(vel.size());
        std::vector<double> v1(vel.size());
        const double scale = params.dt / vel.cell_size();
        k.advect(u1.data(), vel.u().data(), vel.u().data(), vel.v().data(), vel.width(), vel.height(), scale);
        k.advect(v1.data(), vel.v().data(), vel.u().data(), vel.v().data(), vel.width(), vel.height(), scale);
        std::copy(u1.begin(), u1.end(), vel.u().begin());
        std::copy(v1.begin(), v1.end(), vel.v().begin());
    }
    vel = project(vel, params.solver_iterations, params.boundary);

    if (emit)
        add_source(state, source, params.emission_rate, params.dt);
    state.density = diffuse(state.density, params.diffusion, params.dt, params.solver_iterations);
    state.density = advect(state.density, vel, params.dt);

    state.sim_time += params.dt;
    ++state.steps;
}

std::uint64_t steps_until(double t, double dt)
{
    if (t <= 0.0)
        return 0;
    return static_cast<std::uint64_t>(std::floor(t / dt + kTimeTol));
}

Simulator::Simulator(SimParams params, WindFn wind, Vec2 source, bool emit)
    : params_(params), wind_(std::move(wind)), source_(source), emit_(emit),
      state_(SimState::empty(params_))
{
    if (!state_.density.contains(source_))
        throw OutOfDomainError("source location " + fmt_point(source_) + " is outside the domain");
}

void Simulator::advance_to(std::uint64_t steps)
{
    while (state_.steps < steps) {
        const double t = static_cast<double>(state_.steps) * params_.dt;
        step(state_, params_, wind_(t), source_, emit_);
    }
}

std::vector<double> simulate(const SimParams& params, const WindSeries& wind, Vec2 source,
                             const std::vector<Probe>& probes, SimStats* stats)
{
    params.validate();
    const SimState probe_domain = SimState::empty(params);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        if (!probe_domain.density.contains(probes[i].location))
            throw OutOfDomainError("probe " + std::to_string(i) + " at " + fmt_point(probes[i].location) +
                                   " is outside the domain");
        if (i > 0 && probes[i].time < probes[i - 1].time)
            throw Error("probe times must be non-decreasing");
        if (probes[i].time > wind.horizon() + kTimeTol)
            throw Error("probe time beyond the wind horizon");
    }

    Simulator sim(params, [&wind](double t) { return wind.at(t); }, source);
    std::vector<double> out;
    out.reserve(probes.size());
    for (const Probe& p : probes) {
        sim.advance_to(steps_until(p.time, params.dt));
        out.push_back(sim.state().density.sample(p.location));
    }
    if (stats)
        *stats += sim.stats();
    return out;
}

}  // namespace plumeseek
