#include "plumeseek/commands.hpp"

#include "plumeseek/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace plumeseek {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string numbered(const std::string& stem, std::size_t k, const std::string& ext)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%04zu", k);
    return stem + buf + ext;
}

void write_json(const fs::path& path, const ordered_json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

/// Timing lives in its own file so every other output is reproducible.
class Timings
{
public:
    void add(std::string what, double seconds) { rows_.emplace_back(std::move(what), seconds); }
    void write(RunManifest& manifest) const
    {
        std::ofstream out(manifest.file("timing.csv"), std::ios::binary);
        out << "stage,wall_s\n";
        for (const auto& [what, s] : rows_)
            out << what << ',' << format_number(s) << '\n';
    }

private:
    std::vector<std::pair<std::string, double>> rows_;
};

template <class... A>
void say(const CommandOptions& opt, const char* fmt, A... args)
{
    if (!opt.msg)
        return;
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    *opt.msg << buf << '\n';
}

ordered_json point(Vec2 p)
{
    return ordered_json::array({p.x, p.y});
}

void write_map(RunManifest& manifest, const std::string& stem, const GridData& g)
{
    write_grid_csv(manifest.file(stem + ".csv"), g);
    write_pgm(manifest.file(stem + ".pgm"), g);
}

GridData candidate_map(const CandidateGrid& grid, const std::vector<double>& values)
{
    return {grid.m(), grid.n(), grid.pitch_x(), values};
}

}  // namespace

Vec2 parse_point(const std::string& text)
{
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw Error("expected \"x,y\", got '" + text + "'");
    try {
        std::size_t a = 0, b = 0;
        const std::string xs = text.substr(0, comma), ys = text.substr(comma + 1);
        const double x = std::stod(xs, &a), y = std::stod(ys, &b);
        if (a != xs.size() || b != ys.size() || !std::isfinite(x) || !std::isfinite(y))
            throw std::invalid_argument("trailing");
        return {x, y};
    } catch (const std::exception&) {
        throw Error("expected \"x,y\", got '" + text + "'");
    }
}

int default_threads()
{
    int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* cap = std::getenv("PLUMESEEK_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(cap, &end, 10);
        if (end == cap || *end != '\0' || v < 1)
            throw Error("PLUMESEEK_THREADS must be a positive integer");
        n = std::min<long>(n, v);
    }
    return n;
}

// ---------------------------------------------------------- simulate ----

int cmd_simulate(const CommandOptions& opt)
{
    const Config& cfg = opt.config;
    RunManifest manifest(opt.out, "simulate", cfg.hash(), cfg.seed);
    Timings timings;
    const auto t0 = clock_type::now();

    // probe plan: explicit locations or seeded random ones, one per period
    std::vector<Vec2> where;
    if (!cfg.probes_x.empty()) {
        for (std::size_t k = 0; k < cfg.probes_x.size(); ++k)
            where.push_back({cfg.probes_x[k], cfg.probes_y[k]});
    } else {
        std::mt19937_64 rng(derive_seed(cfg.seed, 1));
        std::uniform_real_distribution<double> pos(0.0, cfg.domain_side);
        for (int k = 0; k < cfg.samples; ++k) {
            const double x = pos(rng);
            where.push_back({x, pos(rng)});
        }
    }
    const double last_probe = static_cast<double>(where.size()) * cfg.sample_period;
    const double horizon = std::max(cfg.horizon, last_probe);

    std::vector<double> snaps;
    if (cfg.snapshot_every > 0.0)
        for (int k = 1; k * cfg.snapshot_every <= horizon + 1e-9; ++k)
            snaps.push_back(k * cfg.snapshot_every);

    SyntheticEnv env(cfg.env());
    MeasurementLog log;
    log.domain_side = cfg.domain_side;
    std::size_t next_probe = 0, next_snap = 0;
    ordered_json snap_index = ordered_json::array();
    while (next_probe < where.size() || next_snap < snaps.size()) {
        const double tp = next_probe < where.size() ? (next_probe + 1) * cfg.sample_period : INFINITY;
        const double ts = next_snap < snaps.size() ? snaps[next_snap] : INFINITY;
        if (tp <= ts) {
            log.records.push_back(env.sample(where[next_probe], tp));
            ++next_probe;
        } else {
            const std::string stem = numbered("density", next_snap + 1, "");
            write_map(manifest, stem, GridData::from(env.density_at(ts)));
            snap_index.push_back({{"file", stem + ".csv"}, {"t_s", ts}});
            ++next_snap;
        }
    }
    timings.add("simulate", seconds_since(t0));

    write_flight_log(manifest.file("flight_log.csv"), log);
    {
        std::ofstream out(manifest.file("probes.csv"), std::ios::binary);
        out << "t_s,x_m,y_m,gas_ppm\n";
        for (const auto& r : log.records)
            out << format_number(r.time) << ',' << format_number(r.location.x) << ','
                << format_number(r.location.y) << ',' << format_number(r.gas) << '\n';
    }
    ordered_json info;
    info["source"] = point(env.spec().source);
    info["cells"] = cfg.cells;
    info["cell_size_m"] = cfg.model().cell_size();
    info["horizon_s"] = horizon;
    info["steps"] = env.steps();
    info["snapshots"] = snap_index;
    write_json(manifest.file("simulation.json"), info);
    timings.write(manifest);
    manifest.write();
    say(opt, "simulated %zu probes and %zu snapshots into %s", log.size(), snaps.size(),
        opt.out.string().c_str());
    return 0;
}

// ---------------------------------------------------------- localize ----

int cmd_localize(const CommandOptions& opt)
{
    const Config& cfg = opt.config;
    if (opt.log.empty())
        throw Error("localize needs a flight log path");
    const MeasurementLog log = read_flight_log(opt.log, cfg.domain_side);
    log.validate(1);
    std::string algo = opt.algo.empty() ? "ogs" : opt.algo;
    if (algo == "bo")
        algo = "bo-" + cfg.bo_acquisition;

    RunManifest manifest(opt.out, "localize", cfg.hash(), cfg.seed);
    Timings timings;
    const CandidateGrid grid = cfg.grid();
    const SimParams model = cfg.model();

    ordered_json est;
    est["algorithm"] = algo;
    Vec2 at;
    const auto t0 = clock_type::now();
    if (algo == "ogs") {
        const ConcentrationMatrix m = build_matrix(log, model, grid);
        std::optional<double> tau;
        if (cfg.temperature > 0.0)
            tau = cfg.temperature;
        const Localization loc = localize(m, log.readings(), grid, tau);
        timings.add("ogs", seconds_since(t0));
        at = loc.estimate.location;
        est["candidate"] = loc.estimate.index;
        est["temperature"] = loc.likelihood.temperature;
        est["steps"] = m.stats.steps;
        write_map(manifest, "likelihood", GridData::from(loc.likelihood, grid.pitch_x()));
        std::ofstream out(manifest.file("distances.csv"), std::ios::binary);
        out << "candidate,x_m,y_m,q\n";
        for (std::size_t j = 0; j < grid.size(); ++j)
            out << j << ',' << format_number(grid.center(j).x) << ',' << format_number(grid.center(j).y)
                << ',' << format_number(loc.estimate.q[j]) << '\n';
    } else if (algo == "gp") {
        const GpModel gp = gp_fit(log, cfg.gp());
        const std::size_t idx = gp_peak_index(gp, grid);
        timings.add("gp", seconds_since(t0));
        at = grid.center(idx);
        est["candidate"] = idx;
        std::vector<double> mean(grid.size()), var(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const GpPrediction p = gp.predict(grid.center(j));
            mean[j] = p.mean;
            var[j] = p.variance;
        }
        write_map(manifest, "gp_mean", candidate_map(grid, mean));
        write_map(manifest, "gp_variance", candidate_map(grid, var));
    } else if (algo == "dmvw") {
        const DmvwMaps maps = dmvw_map(log, cfg.dmvw());
        timings.add("dmvw", seconds_since(t0));
        at = maps.center(maps.peak());
        est["candidate"] = grid.nearest(at);
        write_map(manifest, "dmvw_mean", {maps.width, maps.height, maps.cell_size, maps.mean});
        write_map(manifest, "dmvw_variance", {maps.width, maps.height, maps.cell_size, maps.variance});
    } else if (algo.rfind("bo-", 0) == 0) {
        const Acquisition acq = Acquisition::parse(algo.substr(3));
        const BoResult b = bo_localize(log, model, grid, acq, cfg.bo_budget, derive_seed(cfg.seed, 3));
        timings.add(algo, b.wall_seconds);
        at = b.estimate.location;
        est["candidate"] = b.estimate.index;
        est["simulations"] = b.stats.simulations;
        est["steps"] = b.stats.steps;
        std::ofstream out(manifest.file("bo_trace.csv"), std::ios::binary);
        out << "evaluation,candidate,x_m,y_m,objective,best_objective,steps\n";
        for (std::size_t k = 0; k < b.trace.size(); ++k) {
            const BoEvaluation& e = b.trace[k];
            out << k + 1 << ',' << e.index << ',' << format_number(e.location.x) << ','
                << format_number(e.location.y) << ',' << format_number(e.objective) << ','
                << format_number(e.best_objective) << ',' << e.steps << '\n';
        }
    } else {
        throw Error("unknown algorithm '" + algo + "' (expected ogs, gp, dmvw, bo or bo-<acquisition>)");
    }
    est["estimate"] = point(at);
    if (opt.truth) {
        est["truth"] = point(*opt.truth);
        est["error_m"] = localization_error(at, *opt.truth);
    }
    write_json(manifest.file("estimate.json"), est);
    timings.write(manifest);
    manifest.write();
    if (opt.truth)
        say(opt, "%s estimate (%g, %g), error %g m", algo.c_str(), at.x, at.y,
            localization_error(at, *opt.truth));
    else
        say(opt, "%s estimate (%g, %g)", algo.c_str(), at.x, at.y);
    return 0;
}

// ------------------------------------------------------------ active ----

int cmd_active(const CommandOptions& opt)
{
    const Config& cfg = opt.config;
    const std::string algo = opt.algo.empty() ? "ogs" : opt.algo;
    if (algo != "ogs" && algo != "gp-lcb3" && algo != "dmvw-lcb3")
        throw Error("unknown algorithm '" + algo + "' (expected ogs, gp-lcb3 or dmvw-lcb3)");

    std::unique_ptr<Environment> env;
    if (!cfg.replay_log.empty())
        env = std::make_unique<ReplayEnv>(read_flight_log(cfg.replay_log, cfg.domain_side));
    else
        env = std::make_unique<SyntheticEnv>(cfg.env());

    RunManifest manifest(opt.out, "active", cfg.hash(), cfg.seed);
    Timings timings;
    const CandidateGrid grid = cfg.grid();
    const Scenario sc = cfg.scenario();
    const MissionState state = run_mission(*env, cfg.mission(), make_policy(algo, sc, grid, cfg.gp(), cfg.dmvw()));

    write_transcript(manifest.file("transcript.jsonl"), state);
    for (const MissionIteration& it : state.history) {
        timings.add(numbered("iteration", static_cast<std::size_t>(it.iteration), ""), it.wall_seconds);
        if (cfg.snapshot_every_iter > 0 && it.iteration % cfg.snapshot_every_iter == 0 &&
            !it.likelihood.probability.empty())
            write_map(manifest, numbered("likelihood", static_cast<std::size_t>(it.iteration), ""),
                      GridData::from(it.likelihood, grid.pitch_x()));
    }
    write_flight_log(manifest.file("flight_log.csv"), state.log);

    ordered_json summary;
    summary["algorithm"] = algo;
    summary["converged"] = state.converged;
    summary["iterations"] = state.iterations;
    summary["samples"] = state.log.size();
    summary["estimate"] = point(state.estimate);
    std::optional<Vec2> truth = opt.truth ? opt.truth : env->true_source();
    if (truth) {
        summary["truth"] = point(*truth);
        summary["error_m"] = localization_error(state.estimate, *truth);
    }
    write_json(manifest.file("mission.json"), summary);
    timings.write(manifest);
    manifest.write();
    say(opt, "%s after %d iterations, estimate (%g, %g)", state.converged ? "converged" : "not converged",
        state.iterations, state.estimate.x, state.estimate.y);
    return state.converged ? 0 : kExitUnconverged;
}

// ------------------------------------------------------------- bench ----

int cmd_bench(const CommandOptions& opt)
{
    const Config& cfg = opt.config;
    std::vector<std::string> curves = cfg.bench_curves;
    std::vector<std::string> acquisitions = cfg.bench_acquisitions;
    if (!opt.algo.empty()) {
        curves.clear();
        acquisitions.clear();
        std::stringstream ss(opt.algo);
        std::string a;
        while (std::getline(ss, a, ',')) {
            if (a == "ogs" || a == "gp-lcb3" || a == "dmvw-lcb3")
                curves.push_back(a);
            else if (a.rfind("bo-", 0) == 0)
                acquisitions.push_back(Acquisition::parse(a.substr(3)).name());
            else
                throw Error("unknown algorithm '" + a + "' (expected ogs, gp-lcb3, dmvw-lcb3 or bo-<acquisition>)");
        }
    }

    RunManifest manifest(opt.out, "bench", cfg.hash(), cfg.seed);
    Timings timings;
    const Scenario sc = cfg.scenario();
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < cfg.bench_seeds; ++s)
        seeds.push_back(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(s)));

    if (!cfg.bench_sweeps.empty()) {
        auto t0 = clock_type::now();
        std::vector<Scene> data(seeds.size());
        parallel_for(seeds.size(), opt.threads, [&](std::size_t k) { data[k] = make_scene(sc, seeds[k]); });
        timings.add("scenes", seconds_since(t0));
        const fs::path report = manifest.file("sweep.csv");
        for (const auto& param : cfg.bench_sweeps) {
            t0 = clock_type::now();
            const auto rows = sensitivity_sweep(sc, param, default_sweep_values(param, sc.model), data,
                                                opt.threads);
            timings.add("sweep_" + param, seconds_since(t0));
            write_sweep_report(report, rows, cfg.seed);
            say(opt, "sweep %s: %zu values", param.c_str(), rows.size());
        }
    }
    if (!cfg.bench_resolutions.empty() && !acquisitions.empty()) {
        const auto t0 = clock_type::now();
        const auto rows = benchmark_speed(sc, cfg.bench_resolutions, acquisitions, cfg.bo_budget, seeds);
        timings.add("speed", seconds_since(t0));
        write_speed_report(manifest.file("speed.csv"), rows);
        for (int n : cfg.bench_resolutions) {
            double ogs = 0.0, bo = 0.0;
            for (const auto& r : rows)
                if (r.resolution == n) {
                    ogs += r.ogs_seconds;
                    bo += r.bo_seconds;
                }
            say(opt, "resolution %d: speedup %.1fx", n, ogs > 0.0 ? bo / ogs : 0.0);
        }
    }
    if (!curves.empty()) {
        const auto t0 = clock_type::now();
        const fs::path runs = manifest.file("curve_runs.csv"), summary = manifest.file("curves.csv");
        for (WindMode w : {WindMode::none, WindMode::constant, WindMode::variable}) {
            const auto r = convergence_runs(sc, curves, w, seeds, cfg.bench_curve_samples, opt.threads);
            write_curve_runs(runs, r);
            write_curve_report(summary, summarize_curves(r), cfg.seed);
        }
        timings.add("curves", seconds_since(t0));
        say(opt, "convergence curves for %zu algorithms", curves.size());
    }
    timings.write(manifest);
    manifest.write();
    return 0;
}

}  // namespace plumeseek
