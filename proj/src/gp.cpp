#include "plumeseek/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace plumeseek {

void GpHyper::validate() const
{
    if (!(variance > 0.0) || !(lengthscale > 0.0) || !(noise > 0.0))
        throw Error("GP hyperparameters must be positive");
}

double GpHyper::covariance(double r) const
{
    const double s = r / lengthscale;
    if (kernel == KernelKind::rbf)
        return variance * std::exp(-0.5 * s * s);
    const double a = std::sqrt(5.0) * s;
    return variance * (1.0 + a + a * a / 3.0) * std::exp(-a);
}

GpModel::GpModel(std::vector<Vec2> points, std::vector<double> values, GpHyper hyper)
    : points_(std::move(points)), hyper_(hyper)
{
    hyper_.validate();
    if (points_.size() != values.size())
        throw Error("GP: point and value counts differ");
    if (points_.empty())
        throw Error("GP: no training data");
    const auto n = static_cast<Eigen::Index>(points_.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            k(i, j) = hyper_.covariance(norm(points_[i] - points_[j]));

    // Escalate jitter until the factorization succeeds.
    for (int attempt = 0; attempt < 8; ++attempt) {
        jitter_ = attempt == 0 ? 0.0 : hyper_.variance * std::pow(10.0, attempt - 12);
        Eigen::MatrixXd a = k;
        a.diagonal().array() += hyper_.noise + jitter_;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success) {
            chol_ = llt.matrixL();
            const Eigen::Map<const Eigen::VectorXd> y(values.data(), n);
            alpha_ = llt.solve(y);
            return;
        }
    }
    throw Error("GP: covariance matrix is not positive definite");
}

Eigen::VectorXd GpModel::cross(Vec2 x) const
{
    Eigen::VectorXd k(static_cast<Eigen::Index>(points_.size()));
    for (std::size_t i = 0; i < points_.size(); ++i)
        k(static_cast<Eigen::Index>(i)) = hyper_.covariance(norm(x - points_[i]));
    return k;
}

double GpModel::mean(Vec2 x) const
{
    return cross(x).dot(alpha_);
}

GpPrediction GpModel::predict(Vec2 x) const
{
    const Eigen::VectorXd k = cross(x);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    return {k.dot(alpha_), std::max(hyper_.variance - v.squaredNorm(), 0.0)};
}

GpModel gp_fit(const MeasurementLog& log, const GpHyper& hyper)
{
    log.validate(2);
    std::vector<Vec2> pts;
    for (const auto& r : log.records)
        pts.push_back(r.location);
    return GpModel(std::move(pts), log.readings(), hyper);
}

// Means within a relative 1e-12 of the best count as tied: mirror-image data
// gives posterior means that differ only by solver rounding.
std::size_t gp_peak_index(const GpModel& model, const CandidateGrid& grid)
{
    std::vector<double> means(grid.size());
    double top = -INFINITY;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        means[j] = model.mean(grid.center(j));
        top = std::max(top, means[j]);
    }
    const double tol = 1e-12 * std::max(std::abs(top), 1e-300);
    for (std::size_t j = 0; j < grid.size(); ++j)
        if (means[j] >= top - tol)
            return j;
    return 0;
}

Vec2 gp_peak(const GpModel& model, const CandidateGrid& grid)
{
    return grid.center(gp_peak_index(model, grid));
}

}  // namespace plumeseek
