#include "plumeseek/active_sensing.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace plumeseek {

Policy ogs_policy(const SimParams& params, const CandidateGrid& grid)
{
    return [params, grid](const MeasurementLog& log) {
        const ConcentrationMatrix m = build_matrix(log, params, grid);
        Localization loc = localize(m, log.readings(), grid);
        PolicyStep s;
        s.suggestion = loc.estimate.index;
        s.estimate = loc.estimate.location;
        s.next = s.estimate;
        s.likelihood = std::move(loc.likelihood);
        s.steps = m.stats.steps;
        return s;
    };
}

Vec2 next_waypoint(const MissionState& state, const CandidateGrid& grid)
{
    if (state.likelihood.probability.size() != grid.size())
        throw Error("next_waypoint: no likelihood computed yet");
    return grid.center(state.likelihood.argmax());
}

namespace {

void check_inside(Vec2 p, double side, const char* what)
{
    if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= side && p.y <= side))
        throw OutOfDomainError(std::string(what) + " lies outside the survey area");
}

}  // namespace

MissionState run_mission(Environment& env, const MissionConfig& config, const Policy& policy)
{
    using clock = std::chrono::steady_clock;
    if (config.max_iters < 1)
        throw Error("mission needs max_iters >= 1");
    if (!(config.sample_period > 0.0))
        throw Error("mission needs a positive sample period");
    const double side = env.domain_side();
    for (Vec2 w : config.init_waypoints)
        check_inside(w, side, "initial waypoint");

    MissionState st;
    st.log.domain_side = side;
    double t = 0.0;
    auto measure = [&](Vec2 at) {
        t += config.sample_period;
        MeasurementRecord r = env.sample(at, t);
        r.location = at;
        r.time = t;
        r.wind.time = t;
        st.log.records.push_back(r);
        st.waypoints.push_back(at);
    };
    measure(config.init_waypoints[0]);
    measure(config.init_waypoints[1]);

    for (int it = 1; it <= config.max_iters; ++it) {
        const auto t0 = clock::now();
        PolicyStep step = policy(st.log);
        MissionIteration rec;
        rec.iteration = it;
        rec.samples = st.log.size();
        rec.measurement = st.log.records.back();
        rec.suggestion = step.suggestion;
        rec.estimate = step.estimate;
        rec.steps = step.steps;
        rec.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        const bool repeat = st.last_suggestion && *st.last_suggestion == step.suggestion;
        rec.converged = repeat;

        st.iterations = it;
        st.estimate = step.estimate;
        st.last_suggestion = step.suggestion;
        st.likelihood = step.likelihood;
        rec.likelihood = std::move(step.likelihood);
        st.history.push_back(std::move(rec));

        if (repeat && !st.converged) {
            st.converged = true;
            if (config.stop_on_convergence)
                break;
        }
        if (it == config.max_iters)
            break;
        check_inside(step.next, side, "waypoint");
        measure(step.next);
    }
    return st;
}

MissionState run_online(Environment& env, const MissionConfig& config, const SimParams& params,
                        const CandidateGrid& grid)
{
    if (std::abs(grid.domain_side() - env.domain_side()) > 1e-9)
        throw Error("candidate grid and environment cover different areas");
    return run_mission(env, config, ogs_policy(params, grid));
}

}  // namespace plumeseek
