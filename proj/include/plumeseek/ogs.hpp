#pragma once

#include "plumeseek/fluid_sim.hpp"
#include "plumeseek/measurement.hpp"

#include <optional>
#include <span>
#include <vector>

namespace plumeseek {

/// Floor added to every entry of a sum-normalized vector.
inline constexpr double kNormalizeEpsilon = 1e-9;

/// Regular m x n lattice of hypothesized source locations over the survey
/// area. Index j = row * m + col; centers sit in the middle of each lattice
/// cell.
class CandidateGrid
{
public:
    CandidateGrid(int m, int n, double domain_side);

    int m() const { return m_; }
    int n() const { return n_; }
    std::size_t size() const { return static_cast<std::size_t>(m_) * n_; }
    double domain_side() const { return side_; }
    double pitch_x() const { return side_ / m_; }
    double pitch_y() const { return side_ / n_; }

    Vec2 center(std::size_t j) const;
    std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * m_ + col; }
    std::size_t nearest(Vec2 p) const;

private:
    int m_;
    int n_;
    double side_;
};

/// k x mn predictions, row i = measurement i, column j = candidate j.
struct ConcentrationMatrix
{
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    SimStats stats;

    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    std::vector<double> column(std::size_t j) const;
    double max() const;
};

struct LikelihoodMap
{
    int m = 0;
    int n = 0;
    std::vector<double> probability;  // row-major, index as CandidateGrid
    double temperature = 0.0;

    /// First index of the largest entry.
    std::size_t argmax() const;
};

struct SourceEstimate
{
    Vec2 location;
    std::vector<double> q;
    std::size_t index = 0;
};

struct Localization
{
    SourceEstimate estimate;
    LikelihoodMap likelihood;
};

/// (v / sum(v) + eps) / (1 + k * eps); uniform for an all-zero vector.
std::vector<double> normalize(std::span<const double> v);

/// KL(normalize(a) || normalize(b)). Throws on length mismatch or fewer than
/// two entries.
double distance(std::span<const double> a, std::span<const double> b);

/// median(q) - min(q), floored at 1e-6.
double default_temperature(std::span<const double> q);

/// q_j = distance(g, column j), p = first argmin, likelihood softmax(-q / tau).
Localization localize(const ConcentrationMatrix& m, std::span<const double> g,
                      const CandidateGrid& grid, std::optional<double> temperature = std::nullopt);

/// Geometry of the one-shot run: the survey area sits inside a grid of twice
/// the side with the same cell size.
struct OgsGeometry
{
    SimParams enlarged;
    Vec2 offset;  // survey-area origin in enlarged coordinates
    Vec2 source;  // one-shot source position, enlarged coordinates

    static OgsGeometry make(const SimParams& survey_params, const CandidateGrid& grid);
};

/// Wind series driving the model: hold reconstruction of the log's wind at
/// the solver step.
WindSeries model_wind(const MeasurementLog& log, const SimParams& params);

/// One enlarged simulation, every candidate read off by translation.
/// `params` describes the survey area; enlargement happens here.
ConcentrationMatrix build_matrix(const MeasurementLog& log, const SimParams& params,
                                 const CandidateGrid& grid);

/// Reference matrix built the slow way: one enlarged simulation per
/// candidate with the source placed at the candidate itself.
ConcentrationMatrix naive_matrix(const MeasurementLog& log, const SimParams& params,
                                 const CandidateGrid& grid);

SourceEstimate naive_localize(const MeasurementLog& log, const SimParams& params,
                              const CandidateGrid& grid);

}  // namespace plumeseek
