#include "clickguard/simd/kernels.hpp"

namespace clickguard::simd {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void mu_update_scalar(double* x, const double* num, const double* den, double eta, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i] * (num[i] / (den[i] + eta));
        x[i] = v < kFlushBelow ? 0.0 : v;
    }
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double max_scalar(const double* x, std::size_t n) {
    if (n == 0) return 0.0;
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

void gram_scalar(const double* X, std::size_t rows, std::size_t r, double* G) {
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = a; b < r; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < rows; ++i) acc += X[i * r + a] * X[i * r + b];
            G[a * r + b] = acc;
            G[b * r + a] = acc;
        }
}

void matmul_scalar(const double* X, std::size_t rows, std::size_t k, const double* Y, std::size_t r,
                   double* out) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* x = X + i * k;
        double* dst = out + i * r;
        for (std::size_t b = 0; b < r; ++b) dst[b] = 0.0;
        for (std::size_t l = 0; l < k; ++l) {
            if (x[l] == 0.0) continue;
            for (std::size_t b = 0; b < r; ++b) dst[b] += x[l] * Y[l * r + b];
        }
    }
}

constexpr KernelTable kScalar{Isa::Scalar, "scalar",         dot_scalar, axpy_scalar,
                              mu_update_scalar, sum_scalar, max_scalar,
                              gram_scalar, matmul_scalar};

}  // namespace

const KernelTable& detail::scalar_table() { return kScalar; }

}  // namespace clickguard::simd
