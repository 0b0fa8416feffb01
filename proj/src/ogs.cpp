#include "plumeseek/ogs.hpp"

#include "plumeseek/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace plumeseek {

std::vector<double> MeasurementLog::readings() const
{
    std::vector<double> g;
    g.reserve(records.size());
    for (const auto& r : records)
        g.push_back(r.gas);
    return g;
}

std::vector<WindMeasurement> MeasurementLog::winds() const
{
    std::vector<WindMeasurement> w;
    w.reserve(records.size());
    for (const auto& r : records) {
        WindMeasurement m = r.wind;
        m.time = r.time;
        w.push_back(m);
    }
    return w;
}

void MeasurementLog::validate(std::size_t min_records) const
{
    if (!(domain_side > 0.0))
        throw Error("measurement log: domain_side must be positive");
    if (records.size() < min_records)
        throw Error("measurement log: need at least " + std::to_string(min_records) + " records");
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (i > 0 && r.time < records[i - 1].time)
            throw Error("measurement log: times must be non-decreasing (record " + std::to_string(i) + ")");
        if (!(r.location.x >= 0.0 && r.location.x <= domain_side && r.location.y >= 0.0 &&
              r.location.y <= domain_side))
            throw OutOfDomainError("measurement log: record " + std::to_string(i) + " outside the domain");
        if (!std::isfinite(r.gas) || r.gas < 0.0)
            throw Error("measurement log: record " + std::to_string(i) + " has an invalid gas reading");
    }
}

CandidateGrid::CandidateGrid(int m, int n, double domain_side) : m_(m), n_(n), side_(domain_side)
{
    if (m < 1 || n < 1)
        throw Error("candidate grid needs m, n >= 1");
    if (!(domain_side > 0.0))
        throw Error("candidate grid needs a positive domain side");
}

Vec2 CandidateGrid::center(std::size_t j) const
{
    const int col = static_cast<int>(j % m_);
    const int row = static_cast<int>(j / m_);
    return {(col + 0.5) * pitch_x(), (row + 0.5) * pitch_y()};
}

std::size_t CandidateGrid::nearest(Vec2 p) const
{
    const int col = std::clamp(static_cast<int>(std::floor(p.x / pitch_x())), 0, m_ - 1);
    const int row = std::clamp(static_cast<int>(std::floor(p.y / pitch_y())), 0, n_ - 1);
    return index(col, row);
}

std::vector<double> ConcentrationMatrix::column(std::size_t j) const
{
    std::vector<double> c(rows);
    for (std::size_t i = 0; i < rows; ++i)
        c[i] = at(i, j);
    return c;
}

double ConcentrationMatrix::max() const
{
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

std::size_t LikelihoodMap::argmax() const
{
    return static_cast<std::size_t>(std::max_element(probability.begin(), probability.end()) -
                                    probability.begin());
}

// The floor is added after dividing by the total, so the result depends on
// the shape of v only and an all-zero vector maps to uniform.
std::vector<double> normalize(std::span<const double> v)
{
    double total = 0.0;
    for (double x : v)
        total += x;
    const double inv = total > 0.0 ? 1.0 / total : 0.0;
    std::vector<double> out(v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] * inv + kNormalizeEpsilon;
        s += out[i];
    }
    for (double& x : out)
        x /= s;
    return out;
}

namespace {

// Distances of g to every column, all through the same kernel so a single
// pair and a full matrix agree to the bit.
std::vector<double> kl_to_columns(std::span<const double> g, std::span<const double> m,
                                  std::size_t rows, std::size_t cols)
{
    const auto& k = simd::kernels();
    std::vector<double> p = normalize(g);
    std::vector<double> log_p(rows);
    for (std::size_t i = 0; i < rows; ++i)
        log_p[i] = std::log(p[i]);

    std::vector<double> colsum(cols);
    k.column_sums(m.data(), rows, cols, colsum.data());
    for (double& c : colsum)
        c = c > 0.0 ? 1.0 / c : 0.0;

    std::vector<double> smoothed(m.size());
    std::vector<double> log_m(m.size());
    for (std::size_t e = 0; e < m.size(); ++e) {
        smoothed[e] = m[e] * colsum[e % cols] + kNormalizeEpsilon;
        log_m[e] = std::log(smoothed[e]);
    }
    k.column_sums(smoothed.data(), rows, cols, colsum.data());
    for (double& c : colsum)
        c = std::log(c);

    std::vector<double> q(cols);
    k.kl_columns(p.data(), log_p.data(), log_m.data(), colsum.data(), rows, cols, q.data());
    for (double& x : q)
        if (x < 0.0)
            x = 0.0;  // rounding below the KL lower bound
    return q;
}

}  // namespace

double distance(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw Error("distance: length mismatch (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
    if (a.size() < 2)
        throw Error("distance: vectors need at least two entries");
    return kl_to_columns(a, b, b.size(), 1).front();
}

double default_temperature(std::span<const double> q)
{
    if (q.empty())
        return 1e-6;
    std::vector<double> s(q.begin(), q.end());
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    const double median = n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
    return std::max(median - s.front(), 1e-6);
}

Localization localize(const ConcentrationMatrix& m, std::span<const double> g,
                      const CandidateGrid& grid, std::optional<double> temperature)
{
    if (g.size() != m.rows)
        throw Error("localize: reading count does not match matrix rows");
    if (m.cols != grid.size())
        throw Error("localize: matrix columns do not match candidate grid");
    if (m.rows < 1)
        throw Error("localize: empty matrix");
    if (temperature && !(*temperature > 0.0))
        throw Error("localize: temperature must be positive");

    Localization out;
    SourceEstimate& est = out.estimate;
    est.q = kl_to_columns(g, m.values, m.rows, m.cols);
    for (std::size_t j = 0; j < est.q.size(); ++j)
        if (!std::isfinite(est.q[j]))
            throw Error("localize: non-finite distance for column " + std::to_string(j));

    est.index = static_cast<std::size_t>(std::min_element(est.q.begin(), est.q.end()) - est.q.begin());
    est.location = grid.center(est.index);

    LikelihoodMap& lm = out.likelihood;
    lm.m = grid.m();
    lm.n = grid.n();
    lm.temperature = temperature.value_or(default_temperature(est.q));
    const double q_min = est.q[est.index];
    lm.probability.resize(est.q.size());
    double s = 0.0;
    for (std::size_t j = 0; j < est.q.size(); ++j) {
        lm.probability[j] = std::exp(-(est.q[j] - q_min) / lm.temperature);
        s += lm.probability[j];
    }
    for (double& p : lm.probability)
        p /= s;
    return out;
}

OgsGeometry OgsGeometry::make(const SimParams& survey_params, const CandidateGrid& grid)
{
    survey_params.validate();
    OgsGeometry g;
    g.enlarged = survey_params.enlarged();
    const double h = survey_params.cell_size();
    const double off = std::floor(survey_params.grid_cells_per_side / 2.0) * h;
    g.offset = {off, off};
    const double half = 0.5 * survey_params.domain_side;
    g.source = grid.center(grid.nearest({half, half})) + g.offset;
    return g;
}

WindSeries model_wind(const MeasurementLog& log, const SimParams& params)
{
    const auto winds = log.winds();
    return reconstruct_wind(winds, params.dt, std::max(log.last_time(), 0.0));
}

ConcentrationMatrix build_matrix(const MeasurementLog& log, const SimParams& params,
                                 const CandidateGrid& grid)
{
    log.validate(1);
    const OgsGeometry geo = OgsGeometry::make(params, grid);
    const WindSeries wind = model_wind(log, params);
    const double h = params.cell_size();
    const double side = geo.enlarged.domain_side;

    Simulator sim(geo.enlarged, [&wind](double t) { return wind.at(t); }, geo.source);

    ConcentrationMatrix out;
    out.rows = log.size();
    out.cols = grid.size();
    out.values.assign(out.rows * out.cols, 0.0);

    std::vector<Vec2> centers(out.cols);
    for (std::size_t j = 0; j < out.cols; ++j)
        centers[j] = grid.center(j);

    std::vector<double> cx(out.cols), cy(out.cols);
    for (std::size_t i = 0; i < out.rows; ++i) {
        const MeasurementRecord& rec = log.records[i];
        for (std::size_t j = 0; j < out.cols; ++j) {
            const Vec2 p = geo.source + rec.location - centers[j];
            if (p.x < -h || p.y < -h || p.x > side + h || p.y > side + h)
                throw Error("build_matrix: shifted probe left the enlarged domain");
            cx[j] = p.x / h - 0.5;
            cy[j] = p.y / h - 0.5;
        }
        sim.advance_to(steps_until(rec.time, params.dt));
        const ScalarGrid& d = sim.state().density;
        simd::kernels().sample_points(d.values().data(), d.width(), d.height(), cx.data(), cy.data(),
                                      out.values.data() + i * out.cols, out.cols);
    }
    out.stats = sim.stats();
    return out;
}

ConcentrationMatrix naive_matrix(const MeasurementLog& log, const SimParams& params,
                                 const CandidateGrid& grid)
{
    log.validate(1);
    const OgsGeometry geo = OgsGeometry::make(params, grid);
    const WindSeries wind = model_wind(log, params);

    std::vector<Probe> probes;
    probes.reserve(log.size());
    for (const auto& r : log.records)
        probes.push_back({r.location + geo.offset, r.time});

    ConcentrationMatrix out;
    out.rows = log.size();
    out.cols = grid.size();
    out.values.assign(out.rows * out.cols, 0.0);
    for (std::size_t j = 0; j < out.cols; ++j) {
        const std::vector<double> col =
            simulate(geo.enlarged, wind, grid.center(j) + geo.offset, probes, &out.stats);
        for (std::size_t i = 0; i < out.rows; ++i)
            out.values[i * out.cols + j] = col[i];
    }
    return out;
}

SourceEstimate naive_localize(const MeasurementLog& log, const SimParams& params,
                              const CandidateGrid& grid)
{
    const ConcentrationMatrix m = naive_matrix(log, params, grid);
    return localize(m, log.readings(), grid).estimate;
}

}  // namespace plumeseek
