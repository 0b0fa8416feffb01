#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops of the solver and the localizer.
//
// Every kernel has a scalar reference and, where the CPU allows, an AVX2
// variant. Variants must produce bit-identical results: each output element
// is computed with the same sequence of IEEE operations, and reductions use a
// fixed four-lane partial-sum order in both implementations. The library is
// built with -ffp-contract=off so the compiler cannot fuse multiply-adds in
// one variant and not the other.

namespace plumeseek::simd {

enum class Boundary
{
    closed,  // out-of-domain normal velocity is zero
    open,    // out-of-domain values copy the edge cell
};

struct KernelSet
{
    const char* name;

    /// Semi-Lagrangian transport. For every cell the backtraced position
    /// (i - scale*u, j - scale*v) is clamped to the cell-center hull and the
    /// source field is bilinearly interpolated there.
    void (*advect)(double* dst, const double* src, const double* u, const double* v,
                   int width, int height, double scale);

    /// Bilinear samples of `field` at n points given in cell-index
    /// coordinates (cell (i, j) center is at (i, j)); clamped like advect.
    void (*sample_points)(const double* field, int width, int height, const double* cx,
                          const double* cy, double* out, std::size_t n);

    /// Central-difference divergence in unit cell spacing:
    /// out = 0.5 * ((u[i+1] - u[i-1]) + (v[j+1] - v[j-1])).
    void (*divergence)(const double* u, const double* v, int width, int height, Boundary mode,
                       double* out);

    /// Exact adjoint of `divergence`: (gu, gv) = D^T p.
    void (*divergence_adjoint)(const double* p, int width, int height, Boundary mode,
                               double* gu, double* gv);

    /// out[i] = (a[i] + b[i]) + c[i].
    void (*sum3)(const double* a, const double* b, const double* c, double* out, std::size_t n);

    /// Column sums of a row-major rows x cols matrix, accumulated top to bottom.
    void (*column_sums)(const double* m, std::size_t rows, std::size_t cols, double* out);

    /// out[j] = sum_i p[i] * ((log_p[i] - log_m[i, j]) + log_colsum[j]),
    /// accumulated top to bottom. This is KL(p || column j) when log_m holds
    /// the logs of the smoothed matrix and log_colsum the logs of its column
    /// sums.
    void (*kl_columns)(const double* p, const double* log_p, const double* log_m,
                       const double* log_colsum, std::size_t rows, std::size_t cols,
                       double* out);

    /// Dot product with four interleaved partial sums combined as
    /// (s0 + s1) + (s2 + s3), then the tail added in order.
    double (*dot)(const double* a, const double* b, std::size_t n);

    /// y += alpha * x.
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelSet& scalar_kernels();

/// AVX2 kernels, or nullptr when the CPU (or build) lacks AVX2.
const KernelSet* avx2_kernels();

/// Kernels used by the library. Chosen once at startup: AVX2 when available
/// unless the PLUMESEEK_SIMD environment variable says "scalar".
const KernelSet& kernels();

/// Override the active set by name ("scalar" or "avx2"). Returns false if the
/// requested set is unavailable. Not thread-safe against concurrent solves.
bool select_kernels(std::string_view name);

}  // namespace plumeseek::simd
