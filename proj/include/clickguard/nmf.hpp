#pragma once

// Non-negative factorization input ~= A * P with multiplicative updates.
// A (n x r) holds per-row activations, P (r x m) holds timing patterns over
// time bins; rows of P are the patterns.

#include "clickguard/matrix.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clickguard {

struct FactorizationConfig {
    std::size_t num_layers = 2;
    std::size_t rank = 0;         // 0 selects min(n, m, rank_cap)
    std::size_t rank_cap = 128;
    double epsilon = 0.05;        // relative Frobenius stopping threshold
    std::size_t pool_halfwidth = 12;
    std::size_t max_iters = 2000;
    std::uint64_t seed = 1;
    double eta = 1e-12;           // denominator floor
    // Re-fit the deepest patterns against the unpooled input with the
    // effective activation held fixed (see multilayer_factorize).
    bool refit_patterns = true;
    std::size_t refit_iters = 200;

    void validate() const;
    /// Rank used for an input with `rows` x `cols` entries.
    [[nodiscard]] std::size_t resolved_rank(std::size_t rows, std::size_t cols) const;
};

struct FrozenPattern {
    std::size_t row = 0;
    std::vector<double> values;  // length m
};

struct IterationView {
    std::size_t iteration = 0;  // 1-based
    const Matrix& activation;   // n x r
    const Matrix& patterns_t;   // m x r (transposed patterns)
    double residual = 0.0;
};

struct LayerOptions {
    std::size_t rank = 1;
    double epsilon = 0.05;
    std::size_t max_iters = 2000;
    std::uint64_t seed = 1;
    double eta = 1e-12;
    bool record_history = false;
    std::function<void(const IterationView&)> observer;
};

struct LayerFactors {
    Matrix activation;  // n x r
    Matrix patterns;    // r x m
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
    std::vector<std::size_t> frozen_rows;
    std::vector<double> residual_history;  // filled when record_history is set
};

[[nodiscard]] LayerFactors factorize_layer(const Matrix& input, const LayerOptions& options,
                                           std::span<const FrozenPattern> frozen = {});

/// Windowed mean over [max(0, j-c), min(m-1, j+c)] per row.
[[nodiscard]] Matrix average_pool(const Matrix& patterns, std::size_t c);

struct MultiLayerFactorization {
    std::vector<LayerFactors> layers;
    Matrix effective_activation;  // n x r_K, product of the layer activations
    Matrix final_patterns;        // r_K x m, rows scaled to unit peak
    std::vector<std::size_t> bait_rows;
    double refit_residual = 0.0;  // ||O - effective_activation * final_patterns|| / ||O||

    [[nodiscard]] bool converged() const;
};

/// Layer 1 factorizes `counts`; layer k > 1 factorizes the average-pooled
/// patterns of layer k-1. Frozen patterns apply to layer 1 and are carried
/// through deeper layers in pooled form at the same row indices.
///
/// With refit_patterns set, the deepest layer's patterns are re-fitted to the
/// unpooled counts (effective activation fixed) so they keep bin resolution;
/// frozen rows are restored to their exact supplied values. Each non-frozen
/// final pattern is then scaled to a peak of 1 with its activation column
/// scaled inversely, which leaves the reconstruction unchanged.
[[nodiscard]] MultiLayerFactorization multilayer_factorize(
    const Matrix& counts, const FactorizationConfig& config,
    std::span<const FrozenPattern> frozen = {});

/// ||O - A*P||_F / ||O||_F, 0 when ||O||_F = 0.
[[nodiscard]] double frobenius_error(const Matrix& O, const Matrix& A, const Matrix& P);

/// Text container: header lines, then the activation and pattern blocks in
/// row-major order.
struct FactorDump {
    std::string layer;  // "1", "2", ... or "final"
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    double residual = 0.0;
    bool converged = true;
    std::vector<std::size_t> frozen_rows;
    Matrix activation;
    Matrix patterns;
};

void write_factors(std::ostream& out, const FactorDump& dump);
[[nodiscard]] FactorDump read_factors(std::istream& in);

/// One dump per layer followed by the "final" effective factors.
[[nodiscard]] std::vector<FactorDump> dumps_of(const MultiLayerFactorization& f,
                                               const FactorizationConfig& config);

}  // namespace clickguard
