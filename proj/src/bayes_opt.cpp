#include "plumeseek/baselines.hpp"

#include <chrono>
#include <cstdio>
#include <numbers>
#include <cmath>
#include <random>

namespace plumeseek {

void Acquisition::validate() const
{
    if (kind == Kind::lcb && !(alpha > 0.0))
        throw Error("LCB acquisition needs alpha > 0");
}

std::string Acquisition::name() const
{
    switch (kind) {
    case Kind::ei:
        return "ei";
    case Kind::mpi:
        return "mpi";
    case Kind::lcb:
        break;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "lcb%g", alpha);
    return buf;
}

Acquisition Acquisition::parse(const std::string& text)
{
    if (text == "ei")
        return {Kind::ei, 0.0};
    if (text == "mpi")
        return {Kind::mpi, 0.0};
    if (text.rfind("lcb", 0) == 0) {
        Acquisition a{Kind::lcb, 3.0};
        if (text.size() > 3) {
            std::size_t used = 0;
            try {
                a.alpha = std::stod(text.substr(3), &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != text.size() - 3)
                throw Error("unknown acquisition '" + text + "'");
        }
        a.validate();
        return a;
    }
    throw Error("unknown acquisition '" + text + "'");
}

double acquisition_score(const Acquisition& acq, GpPrediction p, double best)
{
    const double sd = std::sqrt(p.variance);
    if (acq.kind == Acquisition::Kind::lcb)
        return p.mean - acq.alpha * sd;
    const double gain = best - p.mean;
    if (sd <= 0.0)
        return acq.kind == Acquisition::Kind::ei ? -std::max(gain, 0.0) : (gain > 0.0 ? -1.0 : 0.0);
    const double z = gain / sd;
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    if (acq.kind == Acquisition::Kind::mpi)
        return -cdf;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return -(gain * cdf + sd * pdf);
}

double bo_objective(const MeasurementLog& log, const SimParams& params, Vec2 source, SimStats* stats)
{
    std::vector<Probe> probes;
    probes.reserve(log.size());
    for (const auto& r : log.records)
        probes.push_back({r.location, r.time});
    const auto predicted = simulate(params, model_wind(log, params), source, probes, stats);
    return distance(log.readings(), predicted);
}

BoResult bo_localize(const MeasurementLog& log, const SimParams& params, const CandidateGrid& grid,
                     const Acquisition& acq, int budget, std::uint64_t seed)
{
    using clock = std::chrono::steady_clock;
    acq.validate();
    log.validate(2);
    if (budget < 1 || static_cast<std::size_t>(budget) > grid.size())
        throw Error("BO budget must be between 1 and the candidate count");

    const auto start = clock::now();
    BoResult out;
    std::vector<bool> used(grid.size(), false);
    std::vector<Vec2> xs;
    std::vector<double> ys;

    auto evaluate = [&](std::size_t j) {
        const auto t0 = clock::now();
        SimStats s;
        const Vec2 l = grid.center(j);
        double f;
        try {
            f = bo_objective(log, params, l, &s);
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " (source at " + std::to_string(l.x) + "," +
                        std::to_string(l.y) + ")");
        }
        used[j] = true;
        xs.push_back(l);
        ys.push_back(f);
        out.stats += s;
        BoEvaluation ev{j, l, f, f, std::chrono::duration<double>(clock::now() - t0).count(), s.steps};
        if (!out.trace.empty())
            ev.best_objective = std::min(f, out.trace.back().best_objective);
        out.trace.push_back(ev);
    };

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    for (int s = 0; s < std::min(budget, 2); ++s) {
        std::size_t j = pick(rng);
        while (used[j])
            j = pick(rng);
        evaluate(j);
    }

    GpHyper hyper;
    hyper.kernel = KernelKind::matern52;
    hyper.variance = 1.0;
    hyper.lengthscale = 0.25 * grid.domain_side();
    hyper.noise = 1e-6;
    while (static_cast<int>(out.trace.size()) < budget) {
        double mu = 0.0;
        for (double y : ys)
            mu += y;
        mu /= static_cast<double>(ys.size());
        double var = 0.0;
        for (double y : ys)
            var += (y - mu) * (y - mu);
        const double sd = var > 0.0 ? std::sqrt(var / static_cast<double>(ys.size())) : 1.0;
        std::vector<double> z(ys.size());
        for (std::size_t i = 0; i < ys.size(); ++i)
            z[i] = (ys[i] - mu) / sd;
        const double best = (out.trace.back().best_objective - mu) / sd;

        const GpModel model(xs, z, hyper);
        std::size_t next = grid.size();
        double next_score = INFINITY;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            if (used[j])
                continue;
            const double a = acquisition_score(acq, model.predict(grid.center(j)), best);
            if (a < next_score || next == grid.size()) {
                next_score = a;
                next = j;
            }
        }
        evaluate(next);
    }

    std::size_t best_i = 0;
    for (std::size_t i = 1; i < out.trace.size(); ++i)
        if (out.trace[i].objective < out.trace[best_i].objective)
            best_i = i;
    out.estimate.index = out.trace[best_i].index;
    out.estimate.location = out.trace[best_i].location;
    out.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    return out;
}

}  // namespace plumeseek
