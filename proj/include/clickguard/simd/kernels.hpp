#pragma once

// Inner-loop kernels behind the factorization and clustering code. Every
// kernel has a scalar reference implementation; vectorized variants are
// selected at runtime from what the CPU supports and must agree with the
// reference up to floating-point reassociation.

#include <cstddef>
#include <string_view>
#include <vector>

namespace clickguard::simd {

enum class Isa { Scalar, Avx2, Neon };

/// Multiplicative updates flush results below this to exactly zero. Zero is
/// a fixed point of the update anyway, and letting entries drift through the
/// subnormal range costs two orders of magnitude in speed on x86.
inline constexpr double kFlushBelow = 1e-150;

struct KernelTable {
    Isa isa;
    const char* name;
    /// sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    /// y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    /// x[i] *= num[i] / (den[i] + eta), then x[i] = 0 when below kFlushBelow
    void (*mu_update)(double* x, const double* num, const double* den, double eta, std::size_t n);
    /// sum_i x[i]
    double (*sum)(const double* x, std::size_t n);
    /// max_i x[i]; 0 for n == 0
    double (*max)(const double* x, std::size_t n);
    /// G = X^T X for X row-major with `rows` rows of length r; G is r x r and
    /// exactly symmetric.
    void (*gram)(const double* X, std::size_t rows, std::size_t r, double* G);
    /// out = X * Y for X row-major rows x k and Y row-major k x r; out is overwritten.
    void (*matmul)(const double* X, std::size_t rows, std::size_t k, const double* Y, std::size_t r,
                   double* out);
};

/// The active table. Chosen on first use: CLICKGUARD_SIMD=scalar|avx2|neon
/// overrides, otherwise the widest ISA the CPU supports.
[[nodiscard]] const KernelTable& kernels();

/// Table for a specific ISA; throws InvalidArgument when unavailable.
[[nodiscard]] const KernelTable& kernels_for(Isa isa);

[[nodiscard]] bool available(Isa isa);
[[nodiscard]] std::vector<Isa> available_isas();

/// Force the active table (tests and the CLI's --simd flag).
void select(Isa isa);

[[nodiscard]] std::string_view to_string(Isa isa);
[[nodiscard]] Isa parse_isa(std::string_view name);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace clickguard::simd
