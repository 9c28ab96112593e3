#pragma once

#include "clickguard/clickstream.hpp"
#include "clickguard/matrix.hpp"
#include "clickguard/nmf.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace clickguard {

struct OrganicReport {
    Matrix spam_counts;  // n x m, A' * P'
    std::vector<std::size_t> reused_pattern_indices;
    std::vector<double> per_pattern_total_activation;
};

/// Retains every pattern whose summed activation over all sources is
/// strictly above `repeat_threshold`. Rows listed in `excluded` are never
/// retained (bait rows are scored separately).
[[nodiscard]] OrganicReport isolate_organic(const Matrix& activation, const Matrix& patterns,
                                            double repeat_threshold = 2.0,
                                            std::span<const std::size_t> excluded = {});
[[nodiscard]] OrganicReport isolate_organic(const MultiLayerFactorization& factors,
                                            double repeat_threshold = 2.0);

enum class ClusterVerdict { Legit, InorganicSpam };
[[nodiscard]] std::string_view to_string(ClusterVerdict verdict);

struct PatternCluster {
    std::vector<std::size_t> member_indices;
    std::vector<double> centroid;
    double normalized_entropy = 0.0;
    double total_weight = 0.0;
    ClusterVerdict verdict = ClusterVerdict::Legit;
};

struct Clustering {
    std::vector<PatternCluster> clusters;
    std::vector<std::size_t> zero_rows;
};

/// Cosine similarity; 0 when either vector is all zero.
[[nodiscard]] double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Greedy threshold clustering in row order. A row joins the cluster whose
/// running centroid is most similar (ties go to the older cluster) when that
/// similarity reaches `similarity_threshold`, otherwise it starts a new
/// cluster. `max_members` caps cluster size (0 = no cap). One refinement pass
/// then moves a row to a strictly more similar first-pass centroid that also
/// clears the threshold. Centroids are means of the unit-length member rows,
/// so rescaling any row leaves the partition unchanged.
[[nodiscard]] Clustering cluster_patterns(const Matrix& patterns, std::size_t max_members = 0,
                                          double similarity_threshold = 0.9);

/// Normalized entropy of the gaps between clicks reconstructed from a
/// pattern. Cells above `support_floor` hold max(1, round(value)) clicks at
/// the bin center. Gaps between clicks sharing a bin are dropped. The Shannon
/// entropy over distinct gap values is divided by log(#distinct); fewer than
/// two clicks or distinct gaps gives 0.
[[nodiscard]] double pattern_entropy(std::span<const double> pattern, double bin_width,
                                     double support_floor = 0.0);

struct ClassifyOptions {
    double entropy_threshold = 0.5;
    double bin_width = 300.0;
    // Pattern cells at or below this fraction of the pattern's peak count as
    // empty when reconstructing clicks.
    double support_fraction = 0.5;
};

/// Fills entropy (unweighted member mean), total weight and verdict.
[[nodiscard]] std::vector<PatternCluster> classify_clusters(std::vector<PatternCluster> clusters,
                                                            const Matrix& activation,
                                                            const Matrix& patterns,
                                                            const ClassifyOptions& options = {});

struct VerdictOptions {
    // Inorganic clusters only contribute when their weight exceeds this.
    double repeat_threshold = 2.0;
    // Organic spam must be a click that coincides, within the tolerance, with
    // clicks of at least min_support - 1 other sources in suspect cells.
    std::size_t min_support = 3;
    double alignment_tolerance = 0.001;  // seconds
};

struct CellVerdict {
    std::size_t source = 0;
    std::size_t bin = 0;
    std::size_t observed = 0;
    std::size_t organic = 0;
    std::size_t inorganic = 0;
    [[nodiscard]] std::size_t predicted_spam() const { return organic + inorganic; }
};

struct ClickVerdicts {
    Matrix predicted;                // n x m predicted spam counts
    std::vector<CellVerdict> cells;  // every observed cell, row-major order
    std::vector<Label> click_labels; // aligned with the click list
};

/// Expected spam per cell = organic spam_counts + contributions of heavy
/// inorganic clusters, clamped to the observed count and rounded to whole
/// clicks. Within a cell, clicks that line up with other suspect sources are
/// labelled first.
[[nodiscard]] ClickVerdicts verdict_clicks(const OrganicReport& report,
                                           std::span<const PatternCluster> clusters,
                                           const Matrix& activation, const Matrix& patterns,
                                           const TrafficMatrix& matrix,
                                           std::span<const ClickEvent> clicks,
                                           const VerdictOptions& options = {});

/// `source,bin,observed,predicted_spam,verdict_breakdown`
void write_verdict_csv(std::ostream& out, const TrafficMatrix& matrix, const ClickVerdicts& v);
/// One JSON object per line: cluster_id, size, entropy, weight, verdict.
void write_cluster_jsonl(std::ostream& out, std::span<const PatternCluster> clusters);

}  // namespace clickguard
