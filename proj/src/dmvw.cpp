#include "plumeseek/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace plumeseek {

void DmvwParams::validate() const
{
    if (!(cell_size > 0.0) || !(kernel_size > 0.0) || !(evaluation_radius > 0.0) ||
        !(time_scale > 0.0) || wind_scale < 0.0)
        throw Error("DM+V/W parameters must be positive");
}

Vec2 DmvwMaps::center(std::size_t k) const
{
    const auto i = static_cast<double>(k % width);
    const auto j = static_cast<double>(k / width);
    return {(i + 0.5) * cell_size, (j + 0.5) * cell_size};
}

std::size_t DmvwMaps::cell_at(Vec2 p) const
{
    const int i = std::clamp(static_cast<int>(std::floor(p.x / cell_size)), 0, width - 1);
    const int j = std::clamp(static_cast<int>(std::floor(p.y / cell_size)), 0, height - 1);
    return static_cast<std::size_t>(j) * width + i;
}

std::size_t DmvwMaps::peak() const
{
    return static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
}

namespace {

struct SampleKernel
{
    Vec2 center;
    Vec2 along;  // unit vector, +x when calm
    double inv_a2 = 0.0;
    double inv_b2 = 0.0;
    double weight = 1.0;
    double gas = 0.0;

    double at(Vec2 x) const
    {
        const Vec2 d = x - center;
        const double a = dot(d, along);
        const double b = along.x * d.y - along.y * d.x;
        return weight * std::exp(-0.5 * (a * a * inv_a2 + b * b * inv_b2));
    }
};

// Visits the cells whose centers lie within `radius` of `c`.
template <class F>
void for_cells_near(const DmvwMaps& m, Vec2 c, double radius, F&& f)
{
    const double h = m.cell_size;
    const int i0 = std::max(0, static_cast<int>(std::floor((c.x - radius) / h - 0.5)));
    const int i1 = std::min(m.width - 1, static_cast<int>(std::ceil((c.x + radius) / h - 0.5)));
    const int j0 = std::max(0, static_cast<int>(std::floor((c.y - radius) / h - 0.5)));
    const int j1 = std::min(m.height - 1, static_cast<int>(std::ceil((c.y + radius) / h - 0.5)));
    const double r2 = radius * radius;
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
            const Vec2 x{(i + 0.5) * h, (j + 0.5) * h};
            const Vec2 d = x - c;
            if (dot(d, d) <= r2)
                f(static_cast<std::size_t>(j) * m.width + i, x);
        }
}

}  // namespace

DmvwMaps dmvw_map(const MeasurementLog& log, const DmvwParams& p)
{
    p.validate();
    log.validate(1);

    DmvwMaps m;
    m.cell_size = p.cell_size;
    m.width = std::max(1, static_cast<int>(std::ceil(log.domain_side / p.cell_size - 1e-9)));
    m.height = m.width;
    const std::size_t n = static_cast<std::size_t>(m.width) * m.height;

    const double t_now = log.last_time();
    const double sigma = p.kernel_size;
    std::vector<SampleKernel> kernels;
    double mean_gas = 0.0;
    for (const auto& r : log.records) {
        const Vec2 w = r.wind.vector();
        const double speed = norm(w);
        const double f = 1.0 + p.wind_scale * speed;
        SampleKernel k;
        k.along = f > 1.0 ? (1.0 / speed) * w : Vec2{1.0, 0.0};
        k.center = r.location + (sigma * (f - 1.0)) * k.along;
        k.inv_a2 = 1.0 / (sigma * f * sigma * f);
        k.inv_b2 = (f * f) / (sigma * sigma);
        k.weight = std::exp(-(t_now - r.time) / p.time_scale);
        k.gas = r.gas;
        kernels.push_back(k);
        mean_gas += r.gas;
    }
    // Background: no gas where nothing was measured, with the spread of all
    // readings as the prior variance.
    mean_gas /= static_cast<double>(log.size());
    const double r0 = 0.0;
    double v0 = 0.0;
    for (const auto& r : log.records)
        v0 += (r.gas - mean_gas) * (r.gas - mean_gas);
    v0 /= static_cast<double>(log.size());

    std::vector<double> omega(n, 0.0), weighted(n, 0.0), spread(n, 0.0);
    for (const auto& k : kernels)
        for_cells_near(m, k.center, p.evaluation_radius, [&](std::size_t c, Vec2 x) {
            const double w = k.at(x);
            omega[c] += w;
            weighted[c] += w * k.gas;
        });

    m.mean.assign(n, r0);
    m.confidence.assign(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        if (omega[c] <= 0.0)
            continue;
        const double alpha = 1.0 - std::exp(-omega[c] * omega[c]);
        m.confidence[c] = alpha;
        m.mean[c] = alpha * (weighted[c] / omega[c]) + (1.0 - alpha) * r0;
    }

    for (const auto& k : kernels)
        for_cells_near(m, k.center, p.evaluation_radius, [&](std::size_t c, Vec2 x) {
            const double d = k.gas - m.mean[c];
            spread[c] += k.at(x) * d * d;
        });
    m.variance.assign(n, v0);
    for (std::size_t c = 0; c < n; ++c)
        if (omega[c] > 0.0)
            m.variance[c] = m.confidence[c] * (spread[c] / omega[c]) + (1.0 - m.confidence[c]) * v0;
    return m;
}

}  // namespace plumeseek
