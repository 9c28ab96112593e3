#pragma once

#include "clickguard/clickstream.hpp"
#include "clickguard/matrix.hpp"
#include "clickguard/nmf.hpp"
#include "clickguard/synth.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace clickguard {

struct BaitPattern {
    double delta = 0.0;
    std::size_t count = 0;
    double start = 0.0;
    std::size_t start_bin = 0;
    std::vector<double> timestamps;  // t0 = start, t_k = t_{k-1} + delta
    std::vector<double> as_row;      // 1 at each bait bin
};

/// Throws InvalidArgument when delta <= 0, delta < bin_width, count < 2, or
/// any click falls outside the window.
[[nodiscard]] BaitPattern make_bait_pattern(double delta, std::size_t count, double start,
                                            const TimeBinConfig& bins);

struct BaitPlacement {
    std::string source;
    BaitPattern pattern;
};

struct BaitConfig {
    std::vector<double> deltas = {900.0, 1500.0};  // seconds, pairwise distinct
    std::size_t count = 3;
    std::vector<std::string> target_sources;       // empty = every source
    double flag_threshold = 0.05;
    std::uint64_t seed = 1;
    // Echo search: bait shapes seen in at least this many sources at one start bin.
    std::size_t echo_min_support = 2;
    std::size_t max_frozen = 16;
    std::vector<BaitPlacement> placements;         // filled by schedule_bait

    void validate() const;
};

/// One bait pattern per target source per day at a seeded random start; the
/// delta rotates through the configured list.
void schedule_bait(BaitConfig& config, std::span<const std::string> sources,
                   const TimeBinConfig& bins);

[[nodiscard]] LabeledClickSet inject_bait(const LabeledClickSet& clicks, const BaitConfig& config);

/// Drops Bait-labelled clicks, plus unlabelled clicks whose source and
/// timestamp exactly match a scheduled bait click.
[[nodiscard]] LabeledClickSet strip_bait(const LabeledClickSet& clicks, const BaitConfig& config);

/// fraction_i = sum of row i over bait columns / sum of row i; 0 for a zero row.
[[nodiscard]] std::vector<double> fraud_fractions(const Matrix& activation,
                                                  std::span<const std::size_t> bait_columns);

struct BaitDetection {
    std::vector<BaitPattern> echoes;     // frozen rows, in row order
    std::vector<std::size_t> echo_support;
    MultiLayerFactorization factors;
    std::vector<double> fraud_fraction;  // per source
    std::vector<bool> flagged;
    Matrix bait_spam;                    // n x m, bait-row reconstruction for flagged sources
};

/// Scans the bait-free matrix for copies of the bait shapes, freezes one
/// pattern row per echo (highest support first, at most max_frozen), and
/// factorizes with those rows fixed.
[[nodiscard]] BaitDetection detect_with_bait(const TrafficMatrix& matrix, const BaitConfig& config,
                                             const FactorizationConfig& fconfig);

/// key=value: delta_seconds, count, targets, flag_threshold, seed,
/// echo_min_support, max_frozen.
[[nodiscard]] BaitConfig parse_bait_config(std::istream& in);
void write_bait_config(std::ostream& out, const BaitConfig& config);

/// `source,fraction,flagged`
void write_fraction_csv(std::ostream& out, const TrafficMatrix& matrix, const BaitDetection& d);

}  // namespace clickguard
