#include "plumeseek/simd/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

// Compiled with -mavx2. Nothing in here may be reached before the runtime
// CPU check in dispatch.cpp, so this file avoids the standard library to keep
// AVX-encoded copies of shared inline functions out of the link.

namespace plumeseek::simd {

#if defined(__AVX2__)
namespace {

inline double min_d(double a, double b) { return b < a ? b : a; }
inline double max_d(double a, double b) { return a < b ? b : a; }

inline double bilerp_tail(const double* f, int w, int h, double x, double y)
{
    x = max_d(0.0, min_d(x, static_cast<double>(w - 1)));
    y = max_d(0.0, min_d(y, static_cast<double>(h - 1)));
    const double fx = __builtin_floor(x);
    const double fy = __builtin_floor(y);
    const double fx1 = min_d(fx + 1.0, static_cast<double>(w - 1));
    const double fy1 = min_d(fy + 1.0, static_cast<double>(h - 1));
    const double tx = x - fx;
    const double ty = y - fy;
    const double a = f[static_cast<long>(fy * w + fx)];
    const double b = f[static_cast<long>(fy * w + fx1)];
    const double c = f[static_cast<long>(fy1 * w + fx)];
    const double d = f[static_cast<long>(fy1 * w + fx1)];
    const double top = a + tx * (b - a);
    const double bot = c + tx * (d - c);
    return top + ty * (bot - top);
}

// Corner indices are formed in double precision (exact for any realistic
// grid) and converted once per corner.
inline __m256d bilerp4(const double* f, __m256d x, __m256d y, __m256d wm1, __m256d hm1,
                       __m256d width)
{
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    x = _mm256_max_pd(zero, _mm256_min_pd(x, wm1));
    y = _mm256_max_pd(zero, _mm256_min_pd(y, hm1));
    const __m256d fx = _mm256_floor_pd(x);
    const __m256d fy = _mm256_floor_pd(y);
    const __m256d fx1 = _mm256_min_pd(_mm256_add_pd(fx, one), wm1);
    const __m256d fy1 = _mm256_min_pd(_mm256_add_pd(fy, one), hm1);
    const __m256d tx = _mm256_sub_pd(x, fx);
    const __m256d ty = _mm256_sub_pd(y, fy);
    const __m256d r0 = _mm256_mul_pd(fy, width);
    const __m256d r1 = _mm256_mul_pd(fy1, width);
    const __m256d a = _mm256_i32gather_pd(f, _mm256_cvtpd_epi32(_mm256_add_pd(r0, fx)), 8);
    const __m256d b = _mm256_i32gather_pd(f, _mm256_cvtpd_epi32(_mm256_add_pd(r0, fx1)), 8);
    const __m256d c = _mm256_i32gather_pd(f, _mm256_cvtpd_epi32(_mm256_add_pd(r1, fx)), 8);
    const __m256d d = _mm256_i32gather_pd(f, _mm256_cvtpd_epi32(_mm256_add_pd(r1, fx1)), 8);
    const __m256d top = _mm256_add_pd(a, _mm256_mul_pd(tx, _mm256_sub_pd(b, a)));
    const __m256d bot = _mm256_add_pd(c, _mm256_mul_pd(tx, _mm256_sub_pd(d, c)));
    return _mm256_add_pd(top, _mm256_mul_pd(ty, _mm256_sub_pd(bot, top)));
}

void advect(double* dst, const double* src, const double* u, const double* v, int w, int h,
            double scale)
{
    const __m256d wm1 = _mm256_set1_pd(w - 1), hm1 = _mm256_set1_pd(h - 1);
    const __m256d width = _mm256_set1_pd(w);
    const __m256d vscale = _mm256_set1_pd(scale);
    const __m256d lane = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
    for (int j = 0; j < h; ++j) {
        const __m256d jv = _mm256_set1_pd(j);
        const long row = static_cast<long>(j) * w;
        int i = 0;
        for (; i + 4 <= w; i += 4) {
            const long k = row + i;
            const __m256d iv = _mm256_add_pd(_mm256_set1_pd(i), lane);
            const __m256d x = _mm256_sub_pd(iv, _mm256_mul_pd(vscale, _mm256_loadu_pd(u + k)));
            const __m256d y = _mm256_sub_pd(jv, _mm256_mul_pd(vscale, _mm256_loadu_pd(v + k)));
            _mm256_storeu_pd(dst + k, bilerp4(src, x, y, wm1, hm1, width));
        }
        for (; i < w; ++i) {
            const long k = row + i;
            dst[k] = bilerp_tail(src, w, h, static_cast<double>(i) - scale * u[k],
                                 static_cast<double>(j) - scale * v[k]);
        }
    }
}

void sample_points(const double* f, int w, int h, const double* cx, const double* cy,
                   double* out, std::size_t n)
{
    const __m256d wm1 = _mm256_set1_pd(w - 1), hm1 = _mm256_set1_pd(h - 1);
    const __m256d width = _mm256_set1_pd(w);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(out + k, bilerp4(f, _mm256_loadu_pd(cx + k), _mm256_loadu_pd(cy + k), wm1,
                                          hm1, width));
    }
    for (; k < n; ++k)
        out[k] = bilerp_tail(f, w, h, cx[k], cy[k]);
}

void divergence(const double* u, const double* v, int w, int h, Boundary mode, double* out)
{
    const bool open = mode == Boundary::open;
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d zero = _mm256_setzero_pd();
    for (int j = 0; j < h; ++j) {
        const double* ur = u + static_cast<long>(j) * w;
        const double* vc = v + static_cast<long>(j) * w;
        const double* vu = j > 0 ? vc - w : nullptr;
        const double* vd = j < h - 1 ? vc + w : nullptr;
        double* o = out + static_cast<long>(j) * w;
        auto edge = [&](int i) {
            const double ul = i > 0 ? ur[i - 1] : (open ? ur[0] : 0.0);
            const double urr = i < w - 1 ? ur[i + 1] : (open ? ur[w - 1] : 0.0);
            const double vl = vu ? vu[i] : (open ? vc[i] : 0.0);
            const double vh = vd ? vd[i] : (open ? vc[i] : 0.0);
            o[i] = 0.5 * ((urr - ul) + (vh - vl));
        };
        edge(0);
        int i = 1;
        for (; i + 4 <= w - 1; i += 4) {
            const __m256d du = _mm256_sub_pd(_mm256_loadu_pd(ur + i + 1), _mm256_loadu_pd(ur + i - 1));
            const __m256d vl = vu ? _mm256_loadu_pd(vu + i) : (open ? _mm256_loadu_pd(vc + i) : zero);
            const __m256d vh = vd ? _mm256_loadu_pd(vd + i) : (open ? _mm256_loadu_pd(vc + i) : zero);
            _mm256_storeu_pd(o + i, _mm256_mul_pd(half, _mm256_add_pd(du, _mm256_sub_pd(vh, vl))));
        }
        for (; i < w; ++i)
            edge(i);
    }
}

inline double diff_adjoint(const double* p, int k, int n, long stride, bool open)
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
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d sign = _mm256_set1_pd(-0.0);
    for (int j = 0; j < h; ++j) {
        const long row = static_cast<long>(j) * w;
        const double* pr = p + row;
        // gu: interior columns vectorized, edge columns scalar.
        gu[row] = 0.5 * diff_adjoint(pr, 0, w, 1, open);
        int i = 1;
        for (; i + 4 <= w - 1; i += 4) {
            const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(pr + i - 1), _mm256_loadu_pd(pr + i + 1));
            _mm256_storeu_pd(gu + row + i, _mm256_mul_pd(half, d));
        }
        for (; i < w; ++i)
            gu[row + i] = 0.5 * diff_adjoint(pr, i, w, 1, open);

        // gv: whole row at once, the row index picks the stencil.
        i = 0;
        for (; i + 4 <= w; i += 4) {
            __m256d d;
            if (j == 0) {
                const __m256d p1 = _mm256_loadu_pd(pr + w + i);
                d = open ? _mm256_sub_pd(_mm256_xor_pd(sign, _mm256_loadu_pd(pr + i)), p1)
                         : _mm256_xor_pd(sign, p1);
            } else if (j == h - 1) {
                const __m256d pm = _mm256_loadu_pd(pr - w + i);
                d = open ? _mm256_add_pd(pm, _mm256_loadu_pd(pr + i)) : pm;
            } else {
                d = _mm256_sub_pd(_mm256_loadu_pd(pr - w + i), _mm256_loadu_pd(pr + w + i));
            }
            _mm256_storeu_pd(gv + row + i, _mm256_mul_pd(half, d));
        }
        for (; i < w; ++i)
            gv[row + i] = 0.5 * diff_adjoint(p + i, j, h, w, open);
    }
}

void sum3(const double* a, const double* b, const double* c, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d s = _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(s, _mm256_loadu_pd(c + i)));
    }
    for (; i < n; ++i)
        out[i] = (a[i] + b[i]) + c[i];
}

void column_sums(const double* m, std::size_t rows, std::size_t cols, double* out)
{
    for (std::size_t c = 0; c < cols; ++c)
        out[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = m + r * cols;
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4)
            _mm256_storeu_pd(out + c, _mm256_add_pd(_mm256_loadu_pd(out + c), _mm256_loadu_pd(row + c)));
        for (; c < cols; ++c)
            out[c] = out[c] + row[c];
    }
}

void kl_columns(const double* p, const double* log_p, const double* log_m,
                const double* log_colsum, std::size_t rows, std::size_t cols, double* out)
{
    for (std::size_t c = 0; c < cols; ++c)
        out[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* lm = log_m + r * cols;
        const __m256d pv = _mm256_set1_pd(p[r]);
        const __m256d lp = _mm256_set1_pd(log_p[r]);
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            const __m256d t = _mm256_add_pd(_mm256_sub_pd(lp, _mm256_loadu_pd(lm + c)),
                                            _mm256_loadu_pd(log_colsum + c));
            _mm256_storeu_pd(out + c, _mm256_add_pd(_mm256_loadu_pd(out + c), _mm256_mul_pd(pv, t)));
        }
        for (; c < cols; ++c)
            out[c] = out[c] + p[r] * ((log_p[r] - lm[c]) + log_colsum[c]);
    }
}

double dot(const double* a, const double* b, std::size_t n)
{
    __m256d acc = _mm256_setzero_pd();
    const std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t i = 0; i < n4; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    double r = (s[0] + s[1]) + (s[2] + s[3]);
    for (std::size_t i = n4; i < n; ++i)
        r = r + a[i] * b[i];
    return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n)
{
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(av, _mm256_loadu_pd(x + i))));
    for (; i < n; ++i)
        y[i] = y[i] + alpha * x[i];
}

}  // namespace

const KernelSet* avx2_kernels_unchecked()
{
    static const KernelSet set{
        "avx2", advect, sample_points, divergence, divergence_adjoint, sum3,
        column_sums, kl_columns, dot, axpy,
    };
    return &set;
}

#else

const KernelSet* avx2_kernels_unchecked() { return nullptr; }

#endif

}  // namespace plumeseek::simd
