#include "plumeseek/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

namespace plumeseek {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

SimParams padded(const SimParams& p, int pad)
{
    SimParams w = p;
    w.grid_cells_per_side = p.grid_cells_per_side + 2 * pad;
    w.domain_side = p.domain_side + 2.0 * pad * p.cell_size();
    return w;
}

double median_of(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

WindMode parse_wind_mode(const std::string& s)
{
    if (s == "none")
        return WindMode::none;
    if (s == "constant")
        return WindMode::constant;
    if (s == "variable")
        return WindMode::variable;
    throw Error("unknown wind mode '" + s + "'");
}

std::string to_string(WindMode m)
{
    switch (m) {
    case WindMode::none:
        return "none";
    case WindMode::constant:
        return "constant";
    case WindMode::variable:
        return "variable";
    }
    return "?";
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    // splitmix64 finalizer over the combined value
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// ------------------------------------------------------------ env ----

SyntheticEnv::SyntheticEnv(EnvSpec spec)
    : spec_(std::move(spec)),
      offset_{spec_.padding_cells * spec_.world.cell_size(), spec_.padding_cells * spec_.world.cell_size()},
      wind_rng_(derive_seed(spec_.seed, 11)),
      noise_rng_(derive_seed(spec_.seed, 12)),
      sim_(padded(spec_.world, spec_.padding_cells), [this](double t) { return wind_at(t); },
           spec_.source + offset_)
{
    if (!(spec_.noise >= 0.0 && spec_.noise <= 1.0))
        throw Error("noise level must lie in [0, 1]");
    if (spec_.padding_cells < 0)
        throw Error("padding must be >= 0");
    if (spec_.wind.mode == WindMode::variable && !(spec_.wind.change_period > 0.0))
        throw Error("variable wind needs a positive change period");
    const double side = spec_.world.domain_side;
    if (!(spec_.source.x >= 0.0 && spec_.source.y >= 0.0 && spec_.source.x <= side && spec_.source.y <= side))
        throw OutOfDomainError("environment source lies outside the survey area");
}

Vec2 SyntheticEnv::wind_at(double t)
{
    const WindProtocol& w = spec_.wind;
    double dir = w.base_direction;
    switch (w.mode) {
    case WindMode::none:
        return {0.0, 0.0};
    case WindMode::constant:
        break;
    case WindMode::variable: {
        std::size_t idx = 0;
        if (t >= w.first_change - 1e-9)
            idx = 1 + static_cast<std::size_t>(std::floor((t - w.first_change) / w.change_period + 1e-9));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        while (directions_.size() <= idx)
            directions_.push_back(w.base_direction + w.jitter * u(wind_rng_));
        dir = directions_[idx];
        break;
    }
    }
    return {w.speed * std::cos(dir), w.speed * std::sin(dir)};
}

MeasurementRecord SyntheticEnv::sample(Vec2 location, double time)
{
    if (time < last_time_)
        throw Error("environment queried backward in time");
    const double side = domain_side();
    if (!(location.x >= 0.0 && location.y >= 0.0 && location.x <= side && location.y <= side))
        throw OutOfDomainError("sample location outside the survey area");
    last_time_ = time;
    sim_.advance_to(steps_until(time, spec_.world.dt));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double factor = 1.0 + spec_.noise * u(noise_rng_);
    MeasurementRecord r;
    r.location = location;
    r.time = time;
    r.gas = sim_.state().density.sample(location + offset_) * factor;
    r.wind = WindMeasurement::from_vector(time, wind_at(time));
    return r;
}

ScalarGrid SyntheticEnv::density_at(double time)
{
    if (time < last_time_)
        throw Error("environment queried backward in time");
    last_time_ = time;
    sim_.advance_to(steps_until(time, spec_.world.dt));
    const int n = spec_.world.grid_cells_per_side, pad = spec_.padding_cells;
    const ScalarGrid& full = sim_.state().density;
    ScalarGrid out(n, n, spec_.world.cell_size());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            out.at(i, j) = full.at(i + pad, j + pad);
    return out;
}

ReplayEnv::ReplayEnv(MeasurementLog log) : log_(std::move(log))
{
    log_.validate(1);
}

MeasurementRecord ReplayEnv::sample(Vec2 location, double time)
{
    if (time < last_time_)
        throw Error("environment queried backward in time");
    last_time_ = time;
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t k = 0; k < log_.size(); ++k) {
        const double d = norm(log_.records[k].location - location);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    MeasurementRecord r = log_.records[best];
    r.time = time;
    r.wind.time = time;
    return r;
}

double localization_error(Vec2 estimate, Vec2 truth)
{
    return norm(estimate - truth);
}

// ---------------------------------------------------------- scenes ----

Scene make_scene(const Scenario& sc, std::uint64_t seed)
{
    const CandidateGrid grid(sc.candidates, sc.candidates, sc.env.world.domain_side);
    const double side = grid.domain_side();
    std::mt19937_64 rng(derive_seed(seed, 1));

    std::vector<std::size_t> eligible;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const Vec2 c = grid.center(j);
        const double lo = sc.source_margin * side, hi = (1.0 - sc.source_margin) * side;
        if (c.x >= lo && c.x <= hi && c.y >= lo && c.y <= hi)
            eligible.push_back(j);
    }
    if (eligible.empty())
        throw Error("scenario margin leaves no candidate for the source");
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);

    Scene s;
    s.seed = seed;
    s.truth = grid.center(eligible[pick(rng)]);
    EnvSpec spec = sc.env;
    spec.source = s.truth;
    spec.seed = derive_seed(seed, 2);
    SyntheticEnv env(spec);

    std::uniform_real_distribution<double> pos(0.0, side);
    s.log.domain_side = side;
    for (int k = 1; k <= sc.samples; ++k) {
        const Vec2 at{pos(rng), pos(rng)};
        s.log.records.push_back(env.sample(at, k * sc.sample_period));
    }
    return s;
}

RunReport run_algorithm(const std::string& algo, const Scene& scene, const Scenario& sc, int bo_budget)
{
    const CandidateGrid grid(sc.candidates, sc.candidates, scene.log.domain_side);
    RunReport r;
    r.algorithm = algo;
    r.seed = scene.seed;
    r.truth = scene.truth;
    const auto t0 = clock_type::now();
    if (algo == "ogs") {
        const ConcentrationMatrix m = build_matrix(scene.log, sc.model, grid);
        r.estimate = localize(m, scene.log.readings(), grid).estimate.location;
        r.simulations = m.stats.simulations;
        r.steps = m.stats.steps;
    } else if (algo == "gp") {
        r.estimate = gp_peak(gp_fit(scene.log, GpHyper{}), grid);
    } else if (algo == "dmvw") {
        const DmvwMaps maps = dmvw_map(scene.log, DmvwParams{});
        r.estimate = maps.center(maps.peak());
    } else if (algo.rfind("bo-", 0) == 0) {
        const Acquisition acq = Acquisition::parse(algo.substr(3));
        const BoResult b = bo_localize(scene.log, sc.model, grid, acq, bo_budget, derive_seed(scene.seed, 3));
        r.estimate = b.estimate.location;
        r.simulations = b.stats.simulations;
        r.steps = b.stats.steps;
    } else {
        throw Error("unknown algorithm '" + algo + "'");
    }
    r.wall_seconds = seconds_since(t0);
    r.error = localization_error(r.estimate, r.truth);
    return r;
}

// ---------------------------------------------------------- sweeps ----

const std::vector<std::string>& sweep_parameters()
{
    static const std::vector<std::string> names{"gas_release", "diffusion", "wind_speed_scale",
                                                "wind_direction_offset", "fidelity"};
    return names;
}

std::vector<double> default_sweep_values(const std::string& param, const SimParams& model)
{
    using std::numbers::pi;
    if (param == "gas_release")
        return {5.0, 20.0, 50.0, 100.0, 200.0};
    if (param == "diffusion") {
        std::vector<double> v;
        for (double f : {0.25, 0.5, 1.0, 2.0, 4.0})
            v.push_back(f * model.diffusion);
        return v;
    }
    if (param == "wind_speed_scale")
        return {0.25, 0.5, 1.0, 2.0, 4.0};
    if (param == "wind_direction_offset")
        return {0.0, pi / 12, pi / 6, pi / 4, pi / 2, pi};
    if (param == "fidelity") {
        const double base = model.grid_cells_per_side / model.domain_side;
        return {0.25 * base, 0.5 * base, base};
    }
    throw Error("unknown sweep parameter '" + param + "'");
}

SimParams perturb_model(const SimParams& base, const std::string& param, double value)
{
    SimParams p = base;
    if (param == "gas_release")
        p.emission_rate = value;
    else if (param == "diffusion")
        p.diffusion = value;
    else if (param == "wind_speed_scale")
        p.wind_coupling = base.wind_coupling * value;
    else if (param == "wind_direction_offset")
        ;  // applied to the log's wind
    else if (param == "fidelity")
        p.grid_cells_per_side = std::max(4, static_cast<int>(std::lround(base.domain_side * value)));
    else
        throw Error("unknown sweep parameter '" + param + "'");
    p.validate();
    return p;
}

MeasurementLog perturb_log(const MeasurementLog& log, const std::string& param, double value)
{
    MeasurementLog out = log;
    if (param == "wind_direction_offset")
        for (auto& r : out.records)
            r.wind.direction = normalize_angle(r.wind.direction + value);
    return out;
}

std::vector<SweepRow> sensitivity_sweep(const Scenario& sc, const std::string& param,
                                        const std::vector<double>& values,
                                        const std::vector<Scene>& dataset, int threads)
{
    const auto& names = sweep_parameters();
    if (std::find(names.begin(), names.end(), param) == names.end())
        throw Error("unknown sweep parameter '" + param + "'");
    std::vector<SweepRow> rows;
    for (double v : values) {
        Scenario perturbed = sc;
        perturbed.model = perturb_model(sc.model, param, v);
        SweepRow row;
        row.param = param;
        row.value = v;
        row.runs = dataset.size();
        row.errors.assign(dataset.size(), 0.0);
        parallel_for(dataset.size(), threads, [&](std::size_t i) {
            Scene s = dataset[i];
            s.log = perturb_log(s.log, param, v);
            row.errors[i] = run_algorithm("ogs", s, perturbed).error;
        });
        double sum = 0.0;
        for (double e : row.errors)
            sum += e;
        row.mean_error = dataset.empty() ? 0.0 : sum / static_cast<double>(dataset.size());
        double ss = 0.0;
        for (double e : row.errors)
            ss += (e - row.mean_error) * (e - row.mean_error);
        row.var_error = dataset.empty() ? 0.0 : ss / static_cast<double>(dataset.size());
        row.median_error = median_of(row.errors);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ------------------------------------------------------- benchmark ----

std::vector<SpeedRow> benchmark_speed(const Scenario& sc, const std::vector<int>& resolutions,
                                      const std::vector<std::string>& acquisitions, int bo_budget,
                                      const std::vector<std::uint64_t>& seeds)
{
    std::vector<SpeedRow> rows;
    for (int n : resolutions) {
        Scenario at = sc;
        at.model.grid_cells_per_side = n;
        at.env.world.grid_cells_per_side = n;
        for (std::uint64_t seed : seeds) {
            const Scene scene = make_scene(at, seed);
            SpeedRow row;
            row.resolution = n;
            row.seed = seed;
            const RunReport ogs = run_algorithm("ogs", scene, at);
            row.ogs_seconds = ogs.wall_seconds;
            row.ogs_error = ogs.error;
            row.ogs_steps = ogs.steps;
            double total = 0.0;
            row.bo_best_error = INFINITY;
            for (const auto& a : acquisitions) {
                RunReport b = run_algorithm("bo-" + a, scene, at, bo_budget);
                total += b.wall_seconds;
                if (b.error < row.bo_best_error) {
                    row.bo_best_error = b.error;
                    row.best_acquisition = a;
                }
                row.bo.push_back(std::move(b));
            }
            row.bo_seconds = acquisitions.empty() ? 0.0 : total / static_cast<double>(acquisitions.size());
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// ------------------------------------------------------ convergence ----

Policy make_policy(const std::string& algo, const Scenario& sc, const CandidateGrid& grid,
                   const GpHyper& gp, const DmvwParams& dmvw)
{
    if (algo == "ogs")
        return ogs_policy(sc.model, grid);
    if (algo == "gp-lcb3") {
        return [grid, gp](const MeasurementLog& log) {
            const GpModel m = gp_fit(log, gp);
            PolicyStep s;
            s.suggestion = gp_peak_index(m, grid);
            s.estimate = grid.center(s.suggestion);
            double best = -INFINITY;
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const GpPrediction p = m.predict(grid.center(j));
                const double ucb = p.mean + 3.0 * std::sqrt(p.variance);
                if (ucb > best) {
                    best = ucb;
                    s.next = grid.center(j);
                }
            }
            return s;
        };
    }
    if (algo == "dmvw-lcb3") {
        return [grid, dmvw](const MeasurementLog& log) {
            const DmvwMaps maps = dmvw_map(log, dmvw);
            PolicyStep s;
            s.estimate = maps.center(maps.peak());
            s.suggestion = grid.nearest(s.estimate);
            double best = -INFINITY;
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const std::size_t c = maps.cell_at(grid.center(j));
                const double ucb = maps.mean[c] + 3.0 * std::sqrt(maps.variance[c]);
                if (ucb > best) {
                    best = ucb;
                    s.next = grid.center(j);
                }
            }
            return s;
        };
    }
    throw Error("unknown online algorithm '" + algo + "'");
}

std::array<Vec2, 2> initial_waypoints(const Scenario& sc, std::uint64_t seed)
{
    std::mt19937_64 rng(derive_seed(seed, 4));
    std::uniform_real_distribution<double> pos(0.0, sc.env.world.domain_side);
    std::array<Vec2, 2> w;
    for (Vec2& p : w)
        p = {pos(rng), pos(rng)};
    return w;
}

std::vector<CurveRun> convergence_runs(const Scenario& sc, const std::vector<std::string>& algorithms,
                                       WindMode wind, const std::vector<std::uint64_t>& seeds,
                                       int max_samples, int threads)
{
    if (max_samples < 2)
        throw Error("convergence curves need at least two samples");
    const CandidateGrid grid(sc.candidates, sc.candidates, sc.env.world.domain_side);
    const double side = grid.domain_side();
    const Vec2 center{0.5 * side, 0.5 * side};

    std::vector<CurveRun> runs(algorithms.size() * seeds.size());
    parallel_for(runs.size(), threads, [&](std::size_t k) {
        const std::string& algo = algorithms[k % algorithms.size()];
        const std::uint64_t seed = seeds[k / algorithms.size()];
        const Scene where = [&] {
            Scenario quick = sc;
            quick.samples = 0;
            return make_scene(quick, seed);
        }();
        EnvSpec spec = sc.env;
        spec.source = where.truth;
        spec.seed = derive_seed(seed, 2);
        spec.wind.mode = wind;
        SyntheticEnv env(spec);

        MissionConfig cfg;
        cfg.init_waypoints = initial_waypoints(sc, seed);
        cfg.max_iters = max_samples - 1;
        cfg.sample_period = sc.sample_period;
        cfg.stop_on_convergence = false;
        const MissionState st = run_mission(env, cfg, make_policy(algo, sc, grid));

        CurveRun& run = runs[k];
        run.algorithm = algo;
        run.wind = wind;
        run.seed = seed;
        run.errors.push_back(localization_error(center, where.truth));
        for (const auto& it : st.history) {
            run.errors.push_back(localization_error(it.estimate, where.truth));
            if (it.converged && run.converged_samples < 0)
                run.converged_samples = static_cast<int>(it.samples);
        }
    });
    return runs;
}

std::vector<CurvePoint> summarize_curves(const std::vector<CurveRun>& runs)
{
    std::vector<CurvePoint> out;
    std::vector<std::pair<std::string, WindMode>> keys;
    for (const auto& r : runs)
        if (std::find(keys.begin(), keys.end(), std::pair{r.algorithm, r.wind}) == keys.end())
            keys.emplace_back(r.algorithm, r.wind);
    for (const auto& [algo, wind] : keys) {
        std::size_t longest = 0;
        for (const auto& r : runs)
            if (r.algorithm == algo && r.wind == wind)
                longest = std::max(longest, r.errors.size());
        for (std::size_t s = 0; s < longest; ++s) {
            CurvePoint p;
            p.algorithm = algo;
            p.wind = wind;
            p.samples = s + 1;
            std::vector<double> e;
            for (const auto& r : runs)
                if (r.algorithm == algo && r.wind == wind && s < r.errors.size())
                    e.push_back(r.errors[s]);
            p.runs = e.size();
            for (double x : e)
                p.mean_error += x;
            p.mean_error /= static_cast<double>(e.size());
            for (double x : e)
                p.sd_error += (x - p.mean_error) * (x - p.mean_error);
            p.sd_error = e.size() > 1 ? std::sqrt(p.sd_error / static_cast<double>(e.size() - 1)) : 0.0;
            out.push_back(p);
        }
    }
    return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn)
{
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_at = n;
    std::exception_ptr failure;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (i < failed_at) {
                        failed_at = i;
                        failure = std::current_exception();
                    }
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

}  // namespace plumeseek
