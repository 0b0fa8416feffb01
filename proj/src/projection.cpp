#include "plumeseek/fluid_sim.hpp"

#include "plumeseek/simd/kernels.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace plumeseek {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

simd::Boundary to_simd(BoundaryMode m)
{
    return m == BoundaryMode::open ? simd::Boundary::open : simd::Boundary::closed;
}

// Sparse form of the unit-spacing divergence used by the kernels, rows are
// cells and columns are (u..., v...).
SpMat divergence_matrix(int w, int h, BoundaryMode mode)
{
    const bool open = mode == BoundaryMode::open;
    const int n = w * h;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(n) * 4);
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const int row = j * w + i;
            if (i < w - 1) t.emplace_back(row, row + 1, 0.5);
            else if (open) t.emplace_back(row, row, 0.5);
            if (i > 0) t.emplace_back(row, row - 1, -0.5);
            else if (open) t.emplace_back(row, row, -0.5);
            if (j < h - 1) t.emplace_back(row, n + row + w, 0.5);
            else if (open) t.emplace_back(row, n + row, 0.5);
            if (j > 0) t.emplace_back(row, n + row - w, -0.5);
            else if (open) t.emplace_back(row, n + row, -0.5);
        }
    }
    SpMat d(n, 2 * n);
    d.setFromTriplets(t.begin(), t.end());
    return d;
}

// D D^T is singular (constants and checkerboard-like modes of the wide
// stencil); a tiny diagonal shift makes it factorizable. The factor is only
// a preconditioner, so the shift never biases the converged answer.
struct Preconditioner
{
    Eigen::SimplicialLDLT<SpMat> ldlt;
};

std::shared_ptr<const Preconditioner> preconditioner(int w, int h, BoundaryMode mode)
{
    static std::mutex mu;
    static std::map<std::tuple<int, int, BoundaryMode>, std::shared_ptr<const Preconditioner>> cache;
    const auto key = std::make_tuple(w, h, mode);
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end())
            return it->second;
    }
    const SpMat d = divergence_matrix(w, h, mode);
    SpMat a = d * d.transpose();
    SpMat shift(a.rows(), a.cols());
    shift.setIdentity();
    a += 1e-10 * shift;
    auto pc = std::make_shared<Preconditioner>();
    pc->ldlt.compute(a);
    if (pc->ldlt.info() != Eigen::Success)
        throw Error("projection: pressure factorization failed");
    std::lock_guard lock(mu);
    return cache.emplace(key, std::move(pc)).first->second;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

VelocityGrid project(const VelocityGrid& velocity, int iterations, BoundaryMode mode)
{
    if (iterations < 1)
        throw Error("project needs at least one iteration");
    const int w = velocity.width();
    const int h = velocity.height();
    const std::size_t n = velocity.size();
    const auto& k = simd::kernels();
    const simd::Boundary bm = to_simd(mode);

    std::vector<double> b(n);
    k.divergence(velocity.u().data(), velocity.v().data(), w, h, bm, b.data());
    const double b_max = max_abs(b);
    VelocityGrid out = velocity;
    if (b_max == 0.0)
        return out;

    const auto pc = preconditioner(w, h, mode);
    std::vector<double> x(n, 0.0), r = b, z(n), p(n), ap(n), gu(n), gv(n);
    auto apply_pc = [&](const std::vector<double>& in, std::vector<double>& res) {
        const Eigen::Map<const Eigen::VectorXd> rin(in.data(), static_cast<Eigen::Index>(n));
        Eigen::Map<Eigen::VectorXd>(res.data(), static_cast<Eigen::Index>(n)) = pc->ldlt.solve(rin);
    };

    apply_pc(r, z);
    p = z;
    double rz = k.dot(r.data(), z.data(), n);
    for (int it = 0; it < iterations; ++it) {
        k.divergence_adjoint(p.data(), w, h, bm, gu.data(), gv.data());
        k.divergence(gu.data(), gv.data(), w, h, bm, ap.data());
        const double pap = k.dot(p.data(), ap.data(), n);
        if (!(pap > 0.0))
            break;
        const double alpha = rz / pap;
        k.axpy(alpha, p.data(), x.data(), n);
        k.axpy(-alpha, ap.data(), r.data(), n);
        if (max_abs(r) <= 1e-13 * b_max)
            break;
        apply_pc(r, z);
        const double rz_next = k.dot(r.data(), z.data(), n);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i)
            p[i] = z[i] + beta * p[i];
    }

    k.divergence_adjoint(x.data(), w, h, bm, gu.data(), gv.data());
    k.axpy(-1.0, gu.data(), out.u().data(), n);
    k.axpy(-1.0, gv.data(), out.v().data(), n);
    return out;
}

}  // namespace plumeseek
