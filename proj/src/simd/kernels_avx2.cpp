// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "clickguard/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace clickguard::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void mu_update_avx2(double* x, const double* num, const double* den, double eta, std::size_t n) {
    const __m256d veta = _mm256_set1_pd(eta);
    const __m256d floor = _mm256_set1_pd(kFlushBelow);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d ratio =
            _mm256_div_pd(_mm256_loadu_pd(num + i), _mm256_add_pd(_mm256_loadu_pd(den + i), veta));
        const __m256d v = _mm256_mul_pd(_mm256_loadu_pd(x + i), ratio);
        _mm256_storeu_pd(x + i, _mm256_and_pd(v, _mm256_cmp_pd(v, floor, _CMP_GE_OQ)));
    }
    for (; i < n; ++i) {
        const double v = x[i] * (num[i] / (den[i] + eta));
        x[i] = v < kFlushBelow ? 0.0 : v;
    }
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double max_avx2(const double* x, std::size_t n) {
    if (n == 0) return 0.0;
    if (n < 4) {
        double m = x[0];
        for (std::size_t i = 1; i < n; ++i)
            if (x[i] > m) m = x[i];
        return m;
    }
    __m256d acc = _mm256_loadu_pd(x);
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double m = lanes[0];
    for (double v : {lanes[1], lanes[2], lanes[3]})
        if (v > m) m = v;
    for (; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

constexpr std::size_t kChunk = 128;  // rows per pass, sized to stay in L1/L2

// Register tile: C(4 x 8) += sum over l of x_q[l * xs] * Y[l * r + b..b+8],
// where x_q are four row pointers. Used by both matmul and gram.
inline void tile4x8(const double* x0, const double* x1, const double* x2, const double* x3, std::size_t xs,
                    const double* Y, std::size_t ys, std::size_t len, double* C, std::size_t cs) {
    __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
    __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
    __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
    __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
    for (std::size_t l = 0; l < len; ++l) {
        const __m256d y0 = _mm256_loadu_pd(Y + l * ys);
        const __m256d y1 = _mm256_loadu_pd(Y + l * ys + 4);
        __m256d v = _mm256_broadcast_sd(x0 + l * xs);
        c00 = _mm256_fmadd_pd(v, y0, c00);
        c01 = _mm256_fmadd_pd(v, y1, c01);
        v = _mm256_broadcast_sd(x1 + l * xs);
        c10 = _mm256_fmadd_pd(v, y0, c10);
        c11 = _mm256_fmadd_pd(v, y1, c11);
        v = _mm256_broadcast_sd(x2 + l * xs);
        c20 = _mm256_fmadd_pd(v, y0, c20);
        c21 = _mm256_fmadd_pd(v, y1, c21);
        v = _mm256_broadcast_sd(x3 + l * xs);
        c30 = _mm256_fmadd_pd(v, y0, c30);
        c31 = _mm256_fmadd_pd(v, y1, c31);
    }
    const __m256d acc[4][2] = {{c00, c01}, {c10, c11}, {c20, c21}, {c30, c31}};
    for (std::size_t q = 0; q < 4; ++q) {
        double* c = C + q * cs;
        _mm256_storeu_pd(c, _mm256_add_pd(_mm256_loadu_pd(c), acc[q][0]));
        _mm256_storeu_pd(c + 4, _mm256_add_pd(_mm256_loadu_pd(c + 4), acc[q][1]));
    }
}

// Same with a single output row.
inline void tile1x8(const double* x, std::size_t xs, const double* Y, std::size_t ys, std::size_t len, double* C) {
    __m256d c0 = _mm256_setzero_pd(), c1 = _mm256_setzero_pd();
    for (std::size_t l = 0; l < len; ++l) {
        const __m256d v = _mm256_broadcast_sd(x + l * xs);
        c0 = _mm256_fmadd_pd(v, _mm256_loadu_pd(Y + l * ys), c0);
        c1 = _mm256_fmadd_pd(v, _mm256_loadu_pd(Y + l * ys + 4), c1);
    }
    _mm256_storeu_pd(C, _mm256_add_pd(_mm256_loadu_pd(C), c0));
    _mm256_storeu_pd(C + 4, _mm256_add_pd(_mm256_loadu_pd(C + 4), c1));
}

void matmul_avx2(const double* X, std::size_t rows, std::size_t k, const double* Y, std::size_t r,
                 double* out) {
    const std::size_t r8 = r - r % 8;
    for (std::size_t e = 0; e < rows * r; ++e) out[e] = 0.0;
    for (std::size_t l0 = 0; l0 < k; l0 += kChunk) {
        const std::size_t len = std::min(kChunk, k - l0);
        const double* Yc = Y + l0 * r;
        std::size_t i = 0;
        for (; i + 4 <= rows; i += 4) {
            const double* x0 = X + i * k + l0;
            for (std::size_t b = 0; b < r8; b += 8)
                tile4x8(x0, x0 + k, x0 + 2 * k, x0 + 3 * k, 1, Yc + b, r, len, out + i * r + b, r);
        }
        for (; i < rows; ++i)
            for (std::size_t b = 0; b < r8; b += 8) tile1x8(X + i * k + l0, 1, Yc + b, r, len, out + i * r + b);
        if (r8 < r)
            for (std::size_t i2 = 0; i2 < rows; ++i2) {
                const double* x = X + i2 * k + l0;
                for (std::size_t b = r8; b < r; ++b) {
                    double acc = 0.0;
                    for (std::size_t l = 0; l < len; ++l) acc += x[l] * Yc[l * r + b];
                    out[i2 * r + b] += acc;
                }
            }
    }
}

void gram_avx2(const double* X, std::size_t rows, std::size_t r, double* G) {
    // Upper triangle (plus whatever the tiles cover below it), mirrored at the end.
    const std::size_t r8 = r - r % 8;
    const std::size_t r4 = r - r % 4;
    for (std::size_t e = 0; e < r * r; ++e) G[e] = 0.0;
    for (std::size_t i0 = 0; i0 < rows; i0 += kChunk) {
        const std::size_t len = std::min(kChunk, rows - i0);
        const double* Xc = X + i0 * r;
        for (std::size_t a = 0; a < r4; a += 4)
            for (std::size_t b = a - a % 8; b < r8; b += 8)
                tile4x8(Xc + a, Xc + a + 1, Xc + a + 2, Xc + a + 3, r, Xc + b, r, len, G + a * r + b, r);
        for (std::size_t a = 0; a < r; ++a) {
            const std::size_t b0 = a < r4 ? std::max(a, r8) : a;
            for (std::size_t b = b0; b < r; ++b) {
                double acc = 0.0;
                for (std::size_t i = 0; i < len; ++i) acc += Xc[i * r + a] * Xc[i * r + b];
                G[a * r + b] += acc;
            }
        }
    }
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < a; ++b) G[a * r + b] = G[b * r + a];
}

constexpr KernelTable kAvx2{Isa::Avx2, "avx2",         dot_avx2, axpy_avx2,
                            mu_update_avx2, sum_avx2, max_avx2,
                            gram_avx2, matmul_avx2};

}  // namespace

const KernelTable* detail::avx2_table() { return &kAvx2; }

}  // namespace clickguard::simd
