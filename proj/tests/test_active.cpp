#include "plumeseek/active_sensing.hpp"
#include "plumeseek/harness.hpp"

#include "doctest.h"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <set>

using namespace plumeseek;
using std::numbers::pi;

namespace {

// A 24 m survey where world and model agree exactly.
Scenario small_scenario()
{
    Scenario sc;
    SimParams p;
    p.grid_cells_per_side = 24;
    p.domain_side = 24.0;
    p.diffusion = 1e-4 * 24 * 24;
    p.emission_rate = 50.0;
    p.wind_coupling = 0.01;
    sc.model = p;
    sc.env.world = p;
    sc.env.padding_cells = 12;
    sc.env.wind.change_period = 20.0;
    sc.env.wind.first_change = 40.0;
    sc.candidates = 6;
    sc.samples = 8;
    sc.sample_period = 20.0;
    return sc;
}

EnvSpec small_env(Vec2 source, std::uint64_t seed = 1)
{
    EnvSpec e = small_scenario().env;
    e.source = source;
    e.seed = seed;
    return e;
}

// Records every query and answers with a reading that depends on position.
class ScriptedEnv : public Environment
{
public:
    double domain_side() const override { return 10.0; }
    MeasurementRecord sample(Vec2 at, double t) override
    {
        queries.push_back({at, t});
        MeasurementRecord r;
        r.location = at;
        r.time = t;
        r.gas = at.x + 2.0 * at.y;
        r.wind = {t, 1.0, 0.5};
        return r;
    }
    std::vector<Probe> queries;
};

Policy fixed_policy(std::vector<std::size_t> answers, const CandidateGrid& grid)
{
    auto calls = std::make_shared<std::size_t>(0);
    return [answers, grid, calls](const MeasurementLog&) {
        const std::size_t j = answers[std::min(*calls, answers.size() - 1)];
        ++*calls;
        PolicyStep s;
        s.suggestion = j;
        s.estimate = grid.center(j);
        s.next = grid.center(j);
        s.steps = *calls;
        return s;
    };
}

}  // namespace

TEST_CASE("mission loop bookkeeping")
{
    const CandidateGrid grid(5, 5, 10.0);
    MissionConfig cfg;
    cfg.init_waypoints = {Vec2{1.0, 1.0}, Vec2{9.0, 2.0}};
    cfg.sample_period = 7.0;

    SUBCASE("a repeated suggestion converges on the second iteration")
    {
        ScriptedEnv env;
        const MissionState st = run_mission(env, cfg, fixed_policy({12}, grid));
        CHECK(st.converged);
        CHECK(st.iterations == 2);
        REQUIRE(st.history.size() == 2);
        CHECK_FALSE(st.history[0].converged);
        CHECK(st.history[1].converged);
        CHECK(st.history[0].samples == 2);
        CHECK(st.history[1].samples == 3);
        REQUIRE(env.queries.size() == 3);
        CHECK(env.queries[0].location == Vec2{1.0, 1.0});
        CHECK(env.queries[1].location == Vec2{9.0, 2.0});
        CHECK(env.queries[2].location == grid.center(12));
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(env.queries[k].time == 7.0 * static_cast<double>(k + 1));
        CHECK(st.estimate == grid.center(12));
        CHECK(st.waypoints.size() == st.log.size());
    }
    SUBCASE("max_iters = 1 never converges")
    {
        ScriptedEnv env;
        cfg.max_iters = 1;
        const MissionState st = run_mission(env, cfg, fixed_policy({3}, grid));
        CHECK_FALSE(st.converged);
        CHECK(st.iterations == 1);
        CHECK(st.log.size() == 2);
    }
    SUBCASE("alternating suggestions run out of iterations")
    {
        ScriptedEnv env;
        cfg.max_iters = 6;
        const MissionState st = run_mission(env, cfg, fixed_policy({1, 2, 1, 2, 1, 2}, grid));
        CHECK_FALSE(st.converged);
        CHECK(st.iterations == 6);
        CHECK(st.log.size() == 7);
    }
    SUBCASE("without early stop the loop runs to max_iters and keeps the first repeat")
    {
        ScriptedEnv env;
        cfg.max_iters = 5;
        cfg.stop_on_convergence = false;
        const MissionState st = run_mission(env, cfg, fixed_policy({4, 7, 7, 8, 8}, grid));
        CHECK(st.converged);
        CHECK(st.iterations == 5);
        CHECK(st.history[2].converged);
        CHECK_FALSE(st.history[3].converged);
    }
    SUBCASE("start points outside the area are rejected")
    {
        ScriptedEnv env;
        cfg.init_waypoints[1] = {11.0, 2.0};
        CHECK_THROWS_AS(run_mission(env, cfg, fixed_policy({1}, grid)), OutOfDomainError);
    }
}

TEST_CASE("online localization on a synthetic world")
{
    const Scenario sc = small_scenario();
    const CandidateGrid grid(sc.candidates, sc.candidates, 24.0);
    const Vec2 truth = grid.center(grid.index(3, 2));
    MissionConfig cfg;
    cfg.init_waypoints = {Vec2{6.0, 10.0}, Vec2{4.0, 14.0}};
    cfg.max_iters = 12;

    SyntheticEnv env(small_env(truth));
    const MissionState st = run_online(env, cfg, sc.model, grid);

    SUBCASE("converges on the source")
    {
        CHECK(st.converged);
        CHECK(st.estimate == truth);
    }
    SUBCASE("each rebuild simulates up to the newest sample")
    {
        std::uint64_t prev = 0;
        for (const auto& it : st.history) {
            CHECK(it.steps >= prev);
            CHECK(it.steps == steps_until(it.measurement.time, sc.model.dt));
            prev = it.steps;
        }
    }
    SUBCASE("likelihood maps are distributions")
    {
        for (const auto& it : st.history) {
            double s = 0.0;
            for (double p : it.likelihood.probability)
                s += p;
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(it.likelihood.argmax() == it.suggestion);
        }
    }
    SUBCASE("same seed, same mission")
    {
        SyntheticEnv again(small_env(truth));
        const MissionState b = run_online(again, cfg, sc.model, grid);
        REQUIRE(b.history.size() == st.history.size());
        for (std::size_t k = 0; k < b.history.size(); ++k) {
            CHECK(b.history[k].measurement.gas == st.history[k].measurement.gas);
            CHECK(b.history[k].suggestion == st.history[k].suggestion);
            CHECK(b.history[k].likelihood.probability == st.history[k].likelihood.probability);
        }
    }
    SUBCASE("suggestions ignore the release rate of the world")
    {
        for (double c : {0.1, 10.0}) {
            EnvSpec spec = small_env(truth);
            spec.world.emission_rate *= c;
            SyntheticEnv scaled(spec);
            const MissionState b = run_online(scaled, cfg, sc.model, grid);
            REQUIRE(b.history.size() == st.history.size());
            for (std::size_t k = 0; k < b.history.size(); ++k) {
                CHECK(b.history[k].suggestion == st.history[k].suggestion);
                const auto& pa = st.history[k].likelihood.probability;
                const auto& pb = b.history[k].likelihood.probability;
                for (std::size_t j = 0; j < pa.size(); ++j)
                    CHECK(std::abs(pa[j] - pb[j]) <= 1e-9);
            }
        }
    }
    SUBCASE("odorless world and model give a uniform likelihood and stop at candidate 0")
    {
        EnvSpec spec = small_env(truth);
        spec.world.emission_rate = 0.0;
        SimParams model = sc.model;
        model.emission_rate = 0.0;
        SyntheticEnv calm(spec);
        const MissionState b = run_online(calm, cfg, model, grid);
        CHECK(b.converged);
        CHECK(b.iterations == 2);
        CHECK(b.history[0].suggestion == 0);
        for (double p : b.history[0].likelihood.probability)
            CHECK(p == doctest::Approx(1.0 / 36.0));
    }
    SUBCASE("grid and world must cover the same area")
    {
        SyntheticEnv other(small_env(truth));
        CHECK_THROWS(run_online(other, cfg, sc.model, CandidateGrid(6, 6, 30.0)));
    }
}

TEST_CASE("synthetic environment")
{
    const Vec2 src{10.0, 14.0};

    SUBCASE("noise-free readings are the hidden simulator's probes")
    {
        SyntheticEnv env(small_env(src));
        const EnvSpec& spec = env.spec();
        SimParams world = spec.world;
        world.grid_cells_per_side += 2 * spec.padding_cells;
        world.domain_side += 2.0 * spec.padding_cells * spec.world.cell_size();
        const Vec2 off{12.0, 12.0};
        SyntheticEnv shadow(small_env(src));
        Simulator sim(world, [&](double t) { return shadow.wind_at(t); }, src + off);
        const std::vector<Vec2> at = {{3.0, 4.0}, {11.0, 14.5}, {20.0, 2.0}, {23.9, 23.9}};
        for (std::size_t k = 0; k < at.size(); ++k) {
            const double t = 15.0 * static_cast<double>(k + 1);
            const MeasurementRecord r = env.sample(at[k], t);
            sim.advance_to(steps_until(t, world.dt));
            CHECK(r.gas == sim.state().density.sample(at[k] + off));
            CHECK(r.time == t);
            const Vec2 w = r.wind.vector(), expect = shadow.wind_at(t);
            CHECK(w.x == doctest::Approx(expect.x).epsilon(1e-12));
            CHECK(w.y == doctest::Approx(expect.y).epsilon(1e-12));
        }
    }
    SUBCASE("multiplicative noise stays within its bound")
    {
        EnvSpec noisy = small_env(src, 5);
        noisy.noise = 0.1;
        SyntheticEnv a(small_env(src, 5)), b(noisy);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 24.0);
        int varied = 0;
        for (int k = 1; k <= 40; ++k) {
            const Vec2 p{u(rng), u(rng)};
            const double clean = a.sample(p, 5.0 * k).gas, reading = b.sample(p, 5.0 * k).gas;
            if (clean > 1e-12) {
                CHECK(std::abs(reading / clean - 1.0) <= 0.1 + 1e-12);
                varied += reading != clean;
            }
        }
        CHECK(varied > 10);
    }
    SUBCASE("fixed seed gives the same readings")
    {
        EnvSpec spec = small_env(src, 8);
        spec.noise = 0.2;
        SyntheticEnv a(spec), b(spec);
        for (int k = 1; k <= 10; ++k) {
            const Vec2 p{2.0 * k, 24.0 - 2.0 * k};
            CHECK(a.sample(p, 10.0 * k).gas == b.sample(p, 10.0 * k).gas);
        }
    }
    SUBCASE("time never goes backward")
    {
        SyntheticEnv env(small_env(src));
        env.sample({1.0, 1.0}, 30.0);
        CHECK_NOTHROW(env.sample({1.0, 1.0}, 30.0));
        CHECK_THROWS(env.sample({1.0, 1.0}, 29.0));
        CHECK_THROWS(env.density_at(10.0));
    }
    SUBCASE("queries and setup are checked")
    {
        SyntheticEnv env(small_env(src));
        CHECK_THROWS_AS(env.sample({-0.1, 1.0}, 1.0), OutOfDomainError);
        EnvSpec bad = small_env(src);
        bad.noise = 1.5;
        CHECK_THROWS(SyntheticEnv{bad});
        bad = small_env({30.0, 1.0});
        CHECK_THROWS_AS(SyntheticEnv{bad}, OutOfDomainError);
    }
    SUBCASE("wind protocol")
    {
        EnvSpec spec = small_env(src, 21);
        spec.wind.mode = WindMode::none;
        CHECK(SyntheticEnv(spec).wind_at(50.0) == Vec2{0.0, 0.0});

        spec.wind.mode = WindMode::constant;
        spec.wind.base_direction = pi / 2;
        const Vec2 w = SyntheticEnv(spec).wind_at(123.0);
        CHECK(w.x == doctest::Approx(0.0).epsilon(1e-12).scale(25.0));
        CHECK(w.y == doctest::Approx(25.0));

        spec.wind.mode = WindMode::variable;
        spec.wind.base_direction = pi;
        spec.wind.jitter = pi / 2;
        spec.wind.change_period = 30.0;
        spec.wind.first_change = 30.0;
        SyntheticEnv env(spec);
        std::set<double> seen;
        for (int k = 0; k < 60; ++k) {
            const double t = 5.0 * k;
            const Vec2 v = env.wind_at(t);
            CHECK(norm(v) == doctest::Approx(25.0));
            const double dir = std::atan2(v.y, v.x);
            const double from_base = std::abs(std::remainder(dir - pi, 2 * pi));
            CHECK(from_base <= pi / 2 + 1e-12);
            seen.insert(v.x);
            // held for a whole period
            CHECK(env.wind_at(std::floor(t / 30.0) * 30.0) == v);
        }
        CHECK(seen.size() == 10);
    }
    SUBCASE("survey window of the hidden field")
    {
        SyntheticEnv env(small_env(src));
        const ScalarGrid d = env.density_at(40.0);
        CHECK(d.width() == 24);
        CHECK(d.height() == 24);
        CHECK(env.sample({10.0, 14.0}, 40.0).gas == d.sample({10.0, 14.0}));
    }
}

TEST_CASE("replayed flight answers with the nearest recorded reading")
{
    MeasurementLog log;
    log.domain_side = 10.0;
    log.records.push_back({{1.0, 1.0}, 0.0, 3.0, {0.0, 1.0, 0.0}});
    log.records.push_back({{8.0, 8.0}, 5.0, 7.0, {5.0, 2.0, 1.0}});
    ReplayEnv env(log);
    const MeasurementRecord r = env.sample({7.0, 6.0}, 40.0);
    CHECK(r.gas == 7.0);
    CHECK(r.location == Vec2{8.0, 8.0});
    CHECK(r.time == 40.0);
    CHECK(env.sample({2.0, 2.0}, 60.0).gas == 3.0);
    CHECK_THROWS(env.sample({2.0, 2.0}, 50.0));
}

TEST_CASE("localization error")
{
    CHECK(localization_error({4.0, 5.0}, {4.0, 5.0}) == 0.0);
    CHECK(localization_error({0.0, 0.0}, {3.0, 4.0}) == 5.0);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 80.0);
    for (int k = 0; k < 100; ++k) {
        const Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
        CHECK(localization_error(a, b) == doctest::Approx(std::hypot(a.x - b.x, a.y - b.y)).epsilon(1e-14));
    }
}

TEST_CASE("seeds and scenes")
{
    std::set<std::uint64_t> s;
    for (std::uint64_t stream = 0; stream < 50; ++stream)
        s.insert(derive_seed(7, stream));
    CHECK(s.size() == 50);
    CHECK(derive_seed(7, 1) == derive_seed(7, 1));
    CHECK(derive_seed(7, 1) != derive_seed(8, 1));

    const Scenario sc = small_scenario();
    const CandidateGrid grid(6, 6, 24.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Scene a = make_scene(sc, seed), b = make_scene(sc, seed);
        CHECK(a.truth == b.truth);
        CHECK(a.truth == grid.center(grid.nearest(a.truth)));
        CHECK(a.truth.x >= 6.0);
        CHECK(a.truth.x <= 18.0);
        REQUIRE(a.log.size() == 8);
        for (std::size_t k = 0; k < 8; ++k) {
            CHECK(a.log.records[k].time == 20.0 * static_cast<double>(k + 1));
            CHECK(a.log.records[k].gas == b.log.records[k].gas);
        }
    }
}

TEST_CASE("sensitivity sweeps")
{
    const Scenario sc = small_scenario();
    std::vector<Scene> data;
    for (std::uint64_t s = 0; s < 4; ++s)
        data.push_back(make_scene(sc, s));

    SUBCASE("unknown parameters are rejected")
    {
        CHECK_THROWS(sensitivity_sweep(sc, "wind", {1.0}, data));
        CHECK_THROWS(default_sweep_values("wind", sc.model));
        CHECK_THROWS(perturb_model(sc.model, "wind", 1.0));
    }
    SUBCASE("perturbations touch one knob")
    {
        CHECK(perturb_model(sc.model, "gas_release", 7.0).emission_rate == 7.0);
        CHECK(perturb_model(sc.model, "diffusion", 0.3).diffusion == 0.3);
        CHECK(perturb_model(sc.model, "wind_speed_scale", 2.0).wind_coupling == 0.02);
        CHECK(perturb_model(sc.model, "fidelity", 0.5).grid_cells_per_side == 12);
        const SimParams same = perturb_model(sc.model, "wind_direction_offset", 1.0);
        CHECK(same.wind_coupling == sc.model.wind_coupling);
        const MeasurementLog rotated = perturb_log(data[0].log, "wind_direction_offset", pi / 2);
        for (std::size_t k = 0; k < rotated.size(); ++k)
            CHECK(rotated.records[k].wind.direction ==
                  doctest::Approx(normalize_angle(data[0].log.records[k].wind.direction + pi / 2)));
        CHECK(perturb_log(data[0].log, "diffusion", 3.0).records[0].wind.direction ==
              data[0].log.records[0].wind.direction);
    }
    SUBCASE("one row per value, release rate has no effect")
    {
        const auto rows = sensitivity_sweep(sc, "gas_release", default_sweep_values("gas_release", sc.model), data);
        REQUIRE(rows.size() == 5);
        for (const auto& r : rows) {
            CHECK(r.runs == 4);
            CHECK(r.errors == rows[0].errors);
        }
        const auto fid = sensitivity_sweep(sc, "fidelity", {0.5, 1.0}, data);
        CHECK(fid.size() == 2);
        CHECK(fid[1].mean_error == 0.0);  // the model matches the world
    }
    SUBCASE("results do not depend on the worker count")
    {
        const auto a = sensitivity_sweep(sc, "wind_direction_offset", {0.0, pi / 2}, data, 1);
        const auto b = sensitivity_sweep(sc, "wind_direction_offset", {0.0, pi / 2}, data, 3);
        for (std::size_t k = 0; k < a.size(); ++k)
            CHECK(a[k].errors == b[k].errors);
        CHECK(a[1].median_error >= a[0].median_error);
    }
}

TEST_CASE("speed benchmark bookkeeping")
{
    Scenario sc = small_scenario();
    sc.samples = 4;
    const auto rows = benchmark_speed(sc, {16}, {"lcb3", "ei"}, 3, {1, 2});
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.resolution == 16);
        CHECK(r.ogs_steps == steps_until(80.0, 1.0));
        REQUIRE(r.bo.size() == 2);
        for (const auto& b : r.bo) {
            CHECK(b.simulations == 3);
            CHECK(b.steps == 3 * r.ogs_steps);
        }
        CHECK(r.bo_best_error == std::min(r.bo[0].error, r.bo[1].error));
    }
}

TEST_CASE("convergence curves")
{
    Scenario sc = small_scenario();
    const std::vector<std::string> algos = {"ogs", "gp-lcb3", "dmvw-lcb3"};
    const auto a = convergence_runs(sc, algos, WindMode::constant, {3, 4}, 5, 1);
    const auto b = convergence_runs(sc, algos, WindMode::constant, {3, 4}, 5, 3);
    REQUIRE(a.size() == 6);
    const Vec2 center{12.0, 12.0};
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].errors == b[k].errors);
        CHECK(a[k].errors.size() == 5);
        const Scene s = make_scene(sc, a[k].seed);
        CHECK(a[k].errors[0] == localization_error(center, s.truth));
    }
    const auto pts = summarize_curves(a);
    CHECK(pts.size() == 15);
    CHECK(pts[0].runs == 2);
    CHECK(pts[0].mean_error == doctest::Approx(0.5 * (a[0].errors[0] + a[3].errors[0])));
    CHECK_THROWS(make_policy("bo", sc, CandidateGrid(6, 6, 24.0)));
}

TEST_CASE("parallel_for")
{
    for (int threads : {1, 2, 7}) {
        std::vector<int> hits(100, 0);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += static_cast<int>(i); });
        for (std::size_t i = 0; i < hits.size(); ++i)
            CHECK(hits[i] == static_cast<int>(i));
    }
    for (int threads : {1, 4}) {
        try {
            parallel_for(50, threads, [](std::size_t i) {
                if (i == 13 || i == 31)
                    throw Error("fail " + std::to_string(i));
            });
            FAIL("expected an exception");
        } catch (const Error& e) {
            CHECK(std::string(e.what()) == "fail 13");
        }
    }
}
