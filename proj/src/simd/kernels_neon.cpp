#include "clickguard/simd/kernels.hpp"

#include <arm_neon.h>

namespace clickguard::simd {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void mu_update_neon(double* x, const double* num, const double* den, double eta, std::size_t n) {
    const float64x2_t veta = vdupq_n_f64(eta);
    const float64x2_t floor = vdupq_n_f64(kFlushBelow);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t ratio = vdivq_f64(vld1q_f64(num + i), vaddq_f64(vld1q_f64(den + i), veta));
        const float64x2_t v = vmulq_f64(vld1q_f64(x + i), ratio);
        const uint64x2_t keep = vcgeq_f64(v, floor);
        vst1q_f64(x + i, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(v), keep)));
    }
    for (; i < n; ++i) {
        const double v = x[i] * (num[i] / (den[i] + eta));
        x[i] = v < kFlushBelow ? 0.0 : v;
    }
}

double sum_neon(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double max_neon(const double* x, std::size_t n) {
    if (n == 0) return 0.0;
    double m = x[0];
    std::size_t i = 1;
    if (n >= 2) {
        float64x2_t acc = vld1q_f64(x);
        for (i = 2; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vld1q_f64(x + i));
        m = vmaxvq_f64(acc);
    }
    for (; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

void gram_neon(const double* X, std::size_t rows, std::size_t r, double* G) {
    for (std::size_t k = 0; k < r * r; ++k) G[k] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double* x = X + i * r;
        for (std::size_t a = 0; a < r; ++a)
            if (x[a] != 0.0) axpy_neon(x[a], x + a, G + a * r + a, r - a);
    }
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < a; ++b) G[a * r + b] = G[b * r + a];
}

void matmul_neon(const double* X, std::size_t rows, std::size_t k, const double* Y, std::size_t r,
                 double* out) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* x = X + i * k;
        double* dst = out + i * r;
        std::size_t b = 0;
        for (; b + 4 <= r; b += 4) {
            float64x2_t c0 = vdupq_n_f64(0.0), c1 = vdupq_n_f64(0.0);
            for (std::size_t l = 0; l < k; ++l) {
                const float64x2_t v = vdupq_n_f64(x[l]);
                c0 = vfmaq_f64(c0, v, vld1q_f64(Y + l * r + b));
                c1 = vfmaq_f64(c1, v, vld1q_f64(Y + l * r + b + 2));
            }
            vst1q_f64(dst + b, c0);
            vst1q_f64(dst + b + 2, c1);
        }
        for (; b < r; ++b) {
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += x[l] * Y[l * r + b];
            dst[b] = acc;
        }
    }
}

constexpr KernelTable kNeon{Isa::Neon, "neon",         dot_neon, axpy_neon,
                            mu_update_neon, sum_neon, max_neon,
                            gram_neon, matmul_neon};

}  // namespace

const KernelTable* detail::neon_table() { return &kNeon; }

}  // namespace clickguard::simd
