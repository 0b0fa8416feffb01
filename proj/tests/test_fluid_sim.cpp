#include <doctest.h>

#include "oracles.hpp"
#include "plumeseek/fluid_sim.hpp"
#include "plumeseek/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace plumeseek;

namespace {

SimParams small_params(int cells = 21)
{
    SimParams p;
    p.grid_cells_per_side = cells;
    p.domain_side = cells;  // 1 m cells
    p.diffusion = 0.05;
    p.dt = 1.0;
    p.solver_iterations = 20;
    p.emission_rate = 50.0;
    return p;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

// Implicit diffusion system with zero-flux edges, assembled densely.
std::vector<double> dense_diffusion(const ScalarGrid& g, double a)
{
    const int w = g.width(), h = g.height();
    const std::size_t n = g.size();
    oracle::Matrix m(n, std::vector<double>(n, 0.0));
    std::vector<double> b(g.values().begin(), g.values().end());
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            const std::size_t k = g.index(i, j);
            auto link = [&](int ii, int jj) {
                if (ii < 0 || jj < 0 || ii >= w || jj >= h)
                    return;
                m[k][k] += a;
                m[k][g.index(ii, jj)] -= a;
            };
            m[k][k] += 1.0;
            link(i - 1, j);
            link(i + 1, j);
            link(i, j - 1);
            link(i, j + 1);
        }
    return oracle::dense_solve(m, b);
}

double rotation_asymmetry(const ScalarGrid& g)
{
    const int n = g.width();
    double worst = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double v = g.at(i, j);
            const double r = g.at(n - 1 - j, i);  // 90 degree rotation
            worst = std::max(worst, std::abs(v - r));
        }
    return worst / g.max();
}

}  // namespace

TEST_CASE("add_source splits mass bilinearly")
{
    const SimParams p = small_params(8);
    SUBCASE("zero rate is the identity")
    {
        SimState s = SimState::empty(p);
        add_source(s, {3.3, 4.1}, 0.0, 0.1);
        CHECK(s.density.sum() == 0.0);
    }
    SUBCASE("cell center receives everything")
    {
        SimState s = SimState::empty(p);
        add_source(s, {2.5, 3.5}, 50.0, 0.1);
        CHECK(s.density.at(2, 3) == doctest::Approx(5.0).epsilon(1e-15));
        CHECK(s.density.sum() == doctest::Approx(5.0).epsilon(1e-15));
    }
    SUBCASE("midpoint of four cells splits evenly")
    {
        SimState s = SimState::empty(p);
        add_source(s, {3.0, 3.0}, 50.0, 0.1);
        for (auto [i, j] : {std::pair{2, 2}, {3, 2}, {2, 3}, {3, 3}})
            CHECK(s.density.at(i, j) == doctest::Approx(1.25).epsilon(1e-15));
    }
    SUBCASE("outside the domain is rejected")
    {
        SimState s = SimState::empty(p);
        CHECK_THROWS_AS(add_source(s, {-0.1, 2.0}, 1.0, 1.0), OutOfDomainError);
        CHECK_THROWS_AS(add_source(s, {2.0, 8.01}, 1.0, 1.0), OutOfDomainError);
    }
}

TEST_CASE("diffuse")
{
    SUBCASE("uniform field is a fixed point")
    {
        ScalarGrid g(10, 10, 1.0, std::vector<double>(100, 3.25));
        const ScalarGrid d = diffuse(g, 0.7, 1.0, 20);
        for (double v : d.values())
            CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
    }
    SUBCASE("zero diffusion is the identity")
    {
        ScalarGrid g(6, 6, 1.0);
        g.at(2, 3) = 1.0;
        const ScalarGrid d = diffuse(g, 0.0, 1.0, 20);
        CHECK(std::equal(d.values().begin(), d.values().end(), g.values().begin()));
    }
    SUBCASE("spike matches a dense solve of the implicit system")
    {
        ScalarGrid g(9, 9, 1.0);
        g.at(4, 4) = 1.0;
        const double a = 1e-4;  // diffusion 1e-4, dt 1, 1 m cells
        const ScalarGrid d = diffuse(g, 1e-4, 1.0, 20);
        const auto ref = dense_diffusion(g, a);
        CHECK(d.at(4, 4) == doctest::Approx(ref[g.index(4, 4)]).epsilon(1e-12));
        CHECK(d.at(3, 4) == doctest::Approx(d.at(5, 4)).epsilon(1e-12));
        CHECK(d.at(4, 3) == doctest::Approx(d.at(4, 5)).epsilon(1e-12));
        CHECK(d.at(3, 4) == doctest::Approx(d.at(4, 3)).epsilon(1e-12));
    }
    SUBCASE("strong diffusion converges to the dense solution")
    {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> v(7 * 6);
        for (double& x : v)
            x = u(rng);
        ScalarGrid g(7, 6, 0.5, v);
        const double a = 2.0 * 0.3 / (0.5 * 0.5);
        const ScalarGrid d = diffuse(g, 0.3, 2.0, 400);
        const auto ref = dense_diffusion(g, a);
        for (std::size_t k = 0; k < ref.size(); ++k)
            CHECK(d.values()[k] == doctest::Approx(ref[k]).epsilon(1e-10));
    }
    SUBCASE("mass is conserved by the zero-flux boundary")
    {
        ScalarGrid g(16, 16, 1.0);
        g.at(0, 0) = 2.0;
        g.at(15, 7) = 1.0;
        g.at(8, 8) = 4.0;
        const ScalarGrid d = diffuse(g, 1e-4, 1.0, 20);
        CHECK(std::abs(d.sum() - g.sum()) / g.sum() <= 1e-9);
    }
}

TEST_CASE("advect")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    ScalarGrid f(12, 10, 0.5);
    for (double& v : f.values())
        v = u01(rng);

    SUBCASE("zero velocity is the identity")
    {
        VelocityGrid vel(12, 10, 0.5);
        const ScalarGrid out = advect(f, vel, 0.3);
        for (std::size_t k = 0; k < f.size(); ++k)
            CHECK(out.values()[k] == f.values()[k]);
    }
    SUBCASE("one cell per step shifts interior cells")
    {
        VelocityGrid vel(12, 10, 0.5);
        apply_wind(vel, {0.5 / 0.2, 0.0}, 1.0);  // 2.5 m/s * 0.2 s = one 0.5 m cell
        const ScalarGrid out = advect(f, vel, 0.2);
        for (int j = 0; j < 10; ++j)
            for (int i = 1; i < 12; ++i)
                CHECK(out.at(i, j) == doctest::Approx(f.at(i - 1, j)).epsilon(1e-12));
    }
    SUBCASE("rotational flow matches a brute-force backtrace")
    {
        const int n = 24;
        const double h = 0.25;
        ScalarGrid spike(n, n, h);
        spike.at(16, 12) = 1.0;
        spike.at(17, 12) = 0.5;
        VelocityGrid vel(n, n, h);
        const double omega = 0.4;
        const double c = 0.5 * n * h;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double x = (i + 0.5) * h, y = (j + 0.5) * h;
                vel.u()[spike.index(i, j)] = -omega * (y - c);
                vel.v()[spike.index(i, j)] = omega * (x - c);
            }
        const double dt = 0.7;
        const ScalarGrid out = advect(spike, vel, dt);
        std::vector<double> src(spike.values().begin(), spike.values().end());
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const std::size_t k = spike.index(i, j);
                const double bx = i - dt * vel.u()[k] / h;
                const double by = j - dt * vel.v()[k] / h;
                CHECK(out.at(i, j) == doctest::Approx(oracle::bilinear(src, n, n, bx, by)).epsilon(1e-12));
            }
        // The spike moved counterclockwise: mass now sits above its start row.
        double above = 0.0;
        for (int j = 13; j < n; ++j)
            for (int i = 0; i < n; ++i)
                above += out.at(i, j);
        CHECK(above > 0.0);
    }
    SUBCASE("interior transport conserves mass")
    {
        ScalarGrid blob(32, 32, 1.0);
        for (int j = 12; j < 20; ++j)
            for (int i = 12; i < 20; ++i)
                blob.at(i, j) = u01(rng);
        VelocityGrid vel(32, 32, 1.0);
        apply_wind(vel, {0.37, -0.81}, 1.0);
        const ScalarGrid out = advect(blob, vel, 1.5);
        CHECK(out.sum() == doctest::Approx(blob.sum()).epsilon(1e-12));
    }
}

TEST_CASE("apply_wind fills a constant field")
{
    VelocityGrid vel(5, 5, 1.0);
    apply_wind(vel, {0.0, 0.0}, 1.0);
    CHECK(vel.max_speed() == 0.0);
    apply_wind(vel, {2.0, 0.0}, 1.0);
    CHECK(std::all_of(vel.u().begin(), vel.u().end(), [](double x) { return x == 2.0; }));
    CHECK(std::all_of(vel.v().begin(), vel.v().end(), [](double x) { return x == 0.0; }));
    apply_wind(vel, {1.0, 1.0}, 0.5);
    CHECK(std::all_of(vel.u().begin(), vel.u().end(), [](double x) { return x == 0.5; }));
    CHECK(std::all_of(vel.v().begin(), vel.v().end(), [](double x) { return x == 0.5; }));
    CHECK_THROWS(apply_wind(vel, {NAN, 0.0}, 1.0));
}

TEST_CASE("project")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    SUBCASE("uniform flow is left alone in open mode")
    {
        VelocityGrid vel(16, 16, 1.0);
        apply_wind(vel, {1.3, -0.4}, 1.0);
        const VelocityGrid out = project(vel, 40, BoundaryMode::open);
        for (std::size_t k = 0; k < vel.size(); ++k) {
            CHECK(std::abs(out.u()[k] - 1.3) <= 1e-9);
            CHECK(std::abs(out.v()[k] + 0.4) <= 1e-9);
        }
    }
    SUBCASE("discrete gradients are annihilated")
    {
        for (BoundaryMode mode : {BoundaryMode::open, BoundaryMode::closed}) {
            const int n = 20;
            std::vector<double> pot(n * n);
            for (double& x : pot)
                x = u(rng);
            VelocityGrid vel(n, n, 1.0);
            simd::scalar_kernels().divergence_adjoint(
                pot.data(), n, n, mode == BoundaryMode::open ? simd::Boundary::open : simd::Boundary::closed,
                vel.u().data(), vel.v().data());
            const double before = vel.max_speed();
            const VelocityGrid out = project(vel, 40, mode);
            CHECK(out.max_speed() <= 1e-8 * before);
        }
    }
    SUBCASE("random field loses three orders of divergence in 80 iterations")
    {
        for (BoundaryMode mode : {BoundaryMode::open, BoundaryMode::closed}) {
            VelocityGrid vel(64, 64, 1.0);
            for (double& x : vel.u()) x = u(rng);
            for (double& x : vel.v()) x = u(rng);
            const double d0 = max_abs(divergence(vel, mode));
            const VelocityGrid out = project(vel, 80, mode);
            const double d1 = max_abs(divergence(out, mode));
            CHECK(d1 * 1e3 <= d0);
        }
    }
    SUBCASE("divergence bound at 128 squared with 40 iterations")
    {
        VelocityGrid vel(128, 128, 0.5);
        for (double& x : vel.u()) x = 2.0 * u(rng);
        for (double& x : vel.v()) x = 2.0 * u(rng);
        const VelocityGrid out = project(vel, 40, BoundaryMode::open);
        const double bound = 1e-4 * out.max_speed() / out.cell_size();
        CHECK(max_abs(divergence(out, BoundaryMode::open)) <= bound);
    }
    SUBCASE("projection is idempotent")
    {
        VelocityGrid vel(24, 18, 1.0);
        for (double& x : vel.u()) x = u(rng);
        for (double& x : vel.v()) x = u(rng);
        const VelocityGrid once = project(vel, 80, BoundaryMode::closed);
        const VelocityGrid twice = project(once, 80, BoundaryMode::closed);
        for (std::size_t k = 0; k < vel.size(); ++k)
            CHECK(std::abs(once.u()[k] - twice.u()[k]) <= 1e-9);
    }
}

TEST_CASE("step")
{
    SUBCASE("no emission keeps an empty field empty")
    {
        SimParams p = small_params();
        p.emission_rate = 0.0;
        SimState s = SimState::empty(p);
        for (int i = 0; i < 5; ++i)
            step(s, p, {0.3, 0.1}, {10.5, 10.5}, true);
        CHECK(s.density.max() == 0.0);
        CHECK(s.sim_time == doctest::Approx(5.0));
    }
    SUBCASE("zero wind and a centered source give a 4-fold symmetric field")
    {
        const SimParams p = small_params(21);
        SimState s = SimState::empty(p);
        for (int i = 0; i < 12; ++i)
            step(s, p, {0.0, 0.0}, {10.5, 10.5}, true);
        CHECK(rotation_asymmetry(s.density) <= 1e-6);
    }
    SUBCASE("east wind pushes the centroid east")
    {
        const SimParams p = small_params(21);
        SimState s = SimState::empty(p);
        for (int i = 0; i < 8; ++i)
            step(s, p, {0.6, 0.0}, {10.5, 10.5}, true);
        double m = 0.0, mx = 0.0;
        for (int j = 0; j < 21; ++j)
            for (int i = 0; i < 21; ++i) {
                m += s.density.at(i, j);
                mx += s.density.at(i, j) * (i + 0.5);
            }
        CHECK(mx / m > 10.5);
    }
    SUBCASE("closed boundaries with no emission conserve diffused mass")
    {
        SimParams p = small_params(16);
        p.boundary = BoundaryMode::closed;
        p.diffusion = 1e-4;
        p.emission_rate = 0.0;
        SimState s = SimState::empty(p);
        s.density.at(7, 7) = 3.0;
        const double before = s.density.sum();
        const ScalarGrid d = diffuse(s.density, p.diffusion, p.dt, p.solver_iterations);
        CHECK(std::abs(d.sum() - before) / before <= 1e-9);
    }
}

TEST_CASE("simulate")
{
    SimParams p = small_params(21);
    const WindSeries calm = WindSeries::constant({0.0, 0.0}, p.dt, 30.0);

    SUBCASE("probe before any emission reads zero")
    {
        const auto v = simulate(p, calm, {10.5, 10.5}, {{{10.5, 10.5}, 0.0}});
        CHECK(v.at(0) == 0.0);
    }
    SUBCASE("one step at the source matches a hand-unrolled sweep")
    {
        p.solver_iterations = 1;
        p.diffusion = 0.2;
        const auto v = simulate(p, calm, {10.5, 10.5}, {{{10.5, 10.5}, 1.0}});
        // Single lexicographic sweep from x = x0 with mass m at the center:
        // the up and left neighbors are updated first and each picks up a*m.
        const double m = p.emission_rate * p.dt;
        const double a = p.dt * p.diffusion;
        const double inv = 1.0 / (1.0 + 4.0 * a);
        const double expected = (m + a * (2.0 * a * m * inv)) * inv;
        CHECK(v.at(0) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("identical probes read identical values and runs are deterministic")
    {
        const WindSeries w = WindSeries::constant({0.4, -0.2}, p.dt, 30.0);
        const std::vector<Probe> probes{{{12.0, 9.0}, 7.0}, {{12.0, 9.0}, 7.0}, {{3.0, 3.0}, 20.0}};
        const auto a = simulate(p, w, {10.5, 10.5}, probes);
        const auto b = simulate(p, w, {10.5, 10.5}, probes);
        CHECK(a[0] == a[1]);
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
    SUBCASE("bad probes are rejected")
    {
        CHECK_THROWS_AS(simulate(p, calm, {10.5, 10.5}, {{{22.0, 1.0}, 1.0}}), OutOfDomainError);
        CHECK_THROWS(simulate(p, calm, {10.5, 10.5}, {{{2.0, 1.0}, 5.0}, {{2.0, 1.0}, 4.0}}));
        CHECK_THROWS(simulate(p, calm, {10.5, 10.5}, {{{2.0, 1.0}, 31.0}}));
    }
    SUBCASE("step counter reflects the last probe time")
    {
        SimStats stats;
        simulate(p, calm, {10.5, 10.5}, {{{2.0, 1.0}, 4.5}, {{2.0, 1.0}, 9.0}}, &stats);
        CHECK(stats.simulations == 1);
        CHECK(stats.steps == 9);
    }
}

TEST_CASE("invariants under random winds")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> wd(-0.8, 0.8);
    SimParams p = small_params(40);
    p.diffusion = 0.3;
    std::vector<Vec2> ws(16);
    for (Vec2& w : ws)
        w = {wd(rng), wd(rng)};
    const WindSeries wind(p.dt, ws);

    SUBCASE("density stays non-negative")
    {
        SimState s = SimState::empty(p);
        for (int i = 0; i < 15; ++i)
            step(s, p, wind.at(i), {20.5, 19.5}, true);
        CHECK(*std::min_element(s.density.values().begin(), s.density.values().end()) >= 0.0);
    }
    SUBCASE("integer-cell source shifts translate the field")
    {
        SimState a = SimState::empty(p);
        SimState b = SimState::empty(p);
        for (int i = 0; i < 6; ++i) {
            step(a, p, wind.at(i), {18.5, 20.5}, true);
            step(b, p, wind.at(i), {21.5, 18.5}, true);  // +3, -2 cells
        }
        const double scale = a.density.max();
        double worst = 0.0;
        for (int j = 8; j < 30; ++j)
            for (int i = 8; i < 30; ++i)
                worst = std::max(worst, std::abs(a.density.at(i, j) - b.density.at(i + 3, j - 2)));
        CHECK(worst <= 1e-13 * scale);
    }
}
