#pragma once

#include "plumeseek/fluid_sim.hpp"
#include "plumeseek/measurement.hpp"
#include "plumeseek/ogs.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace plumeseek {

// ---------------------------------------------------------------- GP ----

enum class KernelKind
{
    rbf,
    matern52,
};

struct GpHyper
{
    KernelKind kernel = KernelKind::rbf;
    double variance = 15.0;
    double lengthscale = 7.0;  // m
    double noise = 0.01;       // observation noise variance

    void validate() const;
    /// Covariance at distance r.
    double covariance(double r) const;
};

struct GpPrediction
{
    double mean = 0.0;
    double variance = 0.0;
};

/// Exact zero-mean GP regression.
class GpModel
{
public:
    /// Throws if K + noise I cannot be factored even after adding jitter.
    GpModel(std::vector<Vec2> points, std::vector<double> values, GpHyper hyper);

    GpPrediction predict(Vec2 x) const;
    double mean(Vec2 x) const;

    const GpHyper& hyper() const { return hyper_; }
    std::size_t size() const { return points_.size(); }
    /// Diagonal jitter that was needed on top of the noise variance.
    double jitter() const { return jitter_; }

private:
    Eigen::VectorXd cross(Vec2 x) const;

    std::vector<Vec2> points_;
    GpHyper hyper_;
    Eigen::MatrixXd chol_;  // lower factor of K + (noise + jitter) I
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

GpModel gp_fit(const MeasurementLog& log, const GpHyper& hyper);

/// First candidate whose posterior mean ties the largest (relative 1e-12).
std::size_t gp_peak_index(const GpModel& model, const CandidateGrid& grid);
Vec2 gp_peak(const GpModel& model, const CandidateGrid& grid);

// ------------------------------------------------------------ DM+V/W ----

struct DmvwParams
{
    double cell_size = 0.2;          // m
    double kernel_size = 10.0;       // kernel standard deviation, m
    double evaluation_radius = 10.0; // m
    double time_scale = 600.0;       // s, age decay constant
    double wind_scale = 0.04;        // kernel stretch per unit of reported wind speed

    void validate() const;
};

/// Mean, variance and confidence maps on a cell_size lattice covering the
/// survey area, row-major with the same center convention as the solver.
struct DmvwMaps
{
    int width = 0;
    int height = 0;
    double cell_size = 0.0;
    std::vector<double> mean;
    std::vector<double> variance;
    std::vector<double> confidence;

    Vec2 center(std::size_t k) const;
    /// Nearest-cell lookup.
    std::size_t cell_at(Vec2 p) const;
    std::size_t peak() const;
};

/// Time-dependent kernel DM+V with wind-stretched kernels. Each sample's
/// Gaussian has its axis along the wind scaled by f = 1 + wind_scale * |w|,
/// the cross axis by 1/f, and is moved downwind by the added length, since
/// the reading describes gas that is carried on. Maps are evaluated at the
/// time of the last record.
DmvwMaps dmvw_map(const MeasurementLog& log, const DmvwParams& params);

// ---------------------------------------------------------------- BO ----

struct Acquisition
{
    enum class Kind
    {
        lcb,
        ei,
        mpi,
    };
    Kind kind = Kind::lcb;
    double alpha = 3.0;

    void validate() const;
    std::string name() const;
    /// Parses "lcb", "lcb3", "lcb0.5", "ei" or "mpi".
    static Acquisition parse(const std::string& text);
};

/// Acquisition score to be minimized, for a GP posterior on the objective.
double acquisition_score(const Acquisition& acq, GpPrediction p, double best);

struct BoEvaluation
{
    std::size_t index = 0;
    Vec2 location;
    double objective = 0.0;
    double best_objective = 0.0;
    double wall_seconds = 0.0;
    std::uint64_t steps = 0;
};

struct BoResult
{
    SourceEstimate estimate;  // q is left empty
    std::vector<BoEvaluation> trace;
    SimStats stats;
    double wall_seconds = 0.0;
};

/// Eq. 1 objective for one hypothesized source: distance between the
/// readings and a fresh simulation on the survey area.
double bo_objective(const MeasurementLog& log, const SimParams& params, Vec2 source,
                    SimStats* stats = nullptr);

/// Bayesian optimization over the candidate grid: two seeded random starts,
/// then Matern-5/2 GP on the standardized objective and an exhaustive
/// acquisition scan over unevaluated candidates.
BoResult bo_localize(const MeasurementLog& log, const SimParams& params, const CandidateGrid& grid,
                     const Acquisition& acq, int budget, std::uint64_t seed);

}  // namespace plumeseek
