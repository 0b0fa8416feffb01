#include "plumeseek/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace plumeseek::simd {
namespace {

inline double bilerp(const double* f, int w, int h, double x, double y)
{
    x = std::max(0.0, std::min(x, static_cast<double>(w - 1)));
    y = std::max(0.0, std::min(y, static_cast<double>(h - 1)));
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const double fx1 = std::min(fx + 1.0, static_cast<double>(w - 1));
    const double fy1 = std::min(fy + 1.0, static_cast<double>(h - 1));
    const double tx = x - fx;
    const double ty = y - fy;
    const double a = f[static_cast<std::ptrdiff_t>(fy * w + fx)];
    const double b = f[static_cast<std::ptrdiff_t>(fy * w + fx1)];
    const double c = f[static_cast<std::ptrdiff_t>(fy1 * w + fx)];
    const double d = f[static_cast<std::ptrdiff_t>(fy1 * w + fx1)];
    const double top = a + tx * (b - a);
    const double bot = c + tx * (d - c);
    return top + ty * (bot - top);
}

void advect(double* dst, const double* src, const double* u, const double* v, int w, int h,
            double scale)
{
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * w + i;
            const double x = static_cast<double>(i) - scale * u[k];
            const double y = static_cast<double>(j) - scale * v[k];
            dst[k] = bilerp(src, w, h, x, y);
        }
    }
}

void sample_points(const double* f, int w, int h, const double* cx, const double* cy,
                   double* out, std::size_t n)
{
    for (std::size_t k = 0; k < n; ++k)
        out[k] = bilerp(f, w, h, cx[k], cy[k]);
}

void divergence(const double* u, const double* v, int w, int h, Boundary mode, double* out)
{
    const bool open = mode == Boundary::open;
    for (int j = 0; j < h; ++j) {
        const double* ur = u + static_cast<std::ptrdiff_t>(j) * w;
        const double* vc = v + static_cast<std::ptrdiff_t>(j) * w;
        const double* vu = j > 0 ? vc - w : nullptr;
        const double* vd = j < h - 1 ? vc + w : nullptr;
        double* o = out + static_cast<std::ptrdiff_t>(j) * w;
        for (int i = 0; i < w; ++i) {
            const double ul = i > 0 ? ur[i - 1] : (open ? ur[0] : 0.0);
            const double urr = i < w - 1 ? ur[i + 1] : (open ? ur[w - 1] : 0.0);
            const double vl = vu ? vu[i] : (open ? vc[i] : 0.0);
            const double vh = vd ? vd[i] : (open ? vc[i] : 0.0);
            o[i] = 0.5 * ((urr - ul) + (vh - vl));
        }
    }
}

// Transposed one-dimensional central difference along a strided line.
inline double diff_adjoint(const double* p, int k, int n, std::ptrdiff_t stride, bool open)
{
    if (k == 0)
        return open ? -p[0] - p[stride] : -p[stride];
    if (k == n - 1)
        return open ? p[(n - 2) * stride] + p[(n - 1) * stride] : p[(n - 2) * stride];
    return p[(k - 1) * stride] - p[(k + 1) * stride];
}

void divergence_adjoint(const double* p, int w, int h, Boundary mode, double* gu, double* gv)
{
    const bool open = mode == Boundary::open;
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * w + i;
            gu[k] = 0.5 * diff_adjoint(p + static_cast<std::ptrdiff_t>(j) * w, i, w, 1, open);
            gv[k] = 0.5 * diff_adjoint(p + i, j, h, w, open);
        }
    }
}

void sum3(const double* a, const double* b, const double* c, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (a[i] + b[i]) + c[i];
}

void column_sums(const double* m, std::size_t rows, std::size_t cols, double* out)
{
    std::fill(out, out + cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = m + r * cols;
        for (std::size_t c = 0; c < cols; ++c)
            out[c] = out[c] + row[c];
    }
}

void kl_columns(const double* p, const double* log_p, const double* log_m,
                const double* log_colsum, std::size_t rows, std::size_t cols, double* out)
{
    std::fill(out, out + cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* lm = log_m + r * cols;
        for (std::size_t c = 0; c < cols; ++c)
            out[c] = out[c] + p[r] * ((log_p[r] - lm[c]) + log_colsum[c]);
    }
}

double dot(const double* a, const double* b, std::size_t n)
{
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t i = 0; i < n4; i += 4)
        for (std::size_t l = 0; l < 4; ++l)
            s[l] = s[l] + a[i + l] * b[i + l];
    double r = (s[0] + s[1]) + (s[2] + s[3]);
    for (std::size_t i = n4; i < n; ++i)
        r = r + a[i] * b[i];
    return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] = y[i] + alpha * x[i];
}

}  // namespace

const KernelSet& scalar_kernels()
{
    static const KernelSet set{
        "scalar", advect, sample_points, divergence, divergence_adjoint, sum3,
        column_sums, kl_columns, dot, axpy,
    };
    return set;
}

}  // namespace plumeseek::simd
