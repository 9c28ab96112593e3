#include "clickguard/isolation.hpp"

#include "clickguard/error.hpp"
#include "clickguard/simd/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <unordered_map>

namespace clickguard {

namespace {

std::vector<double> column_sums(const Matrix& A) {
    std::vector<double> sums(A.cols(), 0.0);
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t p = 0; p < A.cols(); ++p) sums[p] += A(i, p);
    return sums;
}

// Length of a row, used to give every cluster member equal say in its centroid.
double norm_of(std::span<const double> row) {
    return std::sqrt(simd::kernels().dot(row.data(), row.data(), row.size()));
}

std::vector<double> mean_of(const Matrix& patterns, std::span<const std::size_t> rows) {
    std::vector<double> c(patterns.cols(), 0.0);
    for (auto r : rows) {
        const auto row = patterns.row(r);
        simd::kernels().axpy(1.0 / norm_of(row), row.data(), c.data(), c.size());
    }
    for (double& v : c) v /= static_cast<double>(rows.size());
    return c;
}

void check_factors(const Matrix& activation, const Matrix& patterns, const TrafficMatrix& matrix) {
    if (activation.cols() != patterns.rows() || activation.rows() != matrix.num_sources() ||
        patterns.cols() != matrix.num_bins())
        throw DimensionMismatch("factors do not match the traffic matrix");
}

}  // namespace

OrganicReport isolate_organic(const Matrix& activation, const Matrix& patterns,
                              double repeat_threshold, std::span<const std::size_t> excluded) {
    if (activation.cols() != patterns.rows())
        throw DimensionMismatch("isolate_organic: activation and patterns disagree on rank");
    OrganicReport rep;
    rep.per_pattern_total_activation = column_sums(activation);
    for (std::size_t p = 0; p < patterns.rows(); ++p) {
        if (std::find(excluded.begin(), excluded.end(), p) != excluded.end()) continue;
        if (rep.per_pattern_total_activation[p] > repeat_threshold)
            rep.reused_pattern_indices.push_back(p);
    }
    const auto& kt = simd::kernels();
    rep.spam_counts = Matrix(activation.rows(), patterns.cols());
    for (std::size_t i = 0; i < activation.rows(); ++i) {
        double* dst = rep.spam_counts.row(i).data();
        for (auto p : rep.reused_pattern_indices)
            if (activation(i, p) != 0.0)
                kt.axpy(activation(i, p), patterns.row(p).data(), dst, patterns.cols());
    }
    return rep;
}

OrganicReport isolate_organic(const MultiLayerFactorization& f, double repeat_threshold) {
    return isolate_organic(f.effective_activation, f.final_patterns, repeat_threshold, f.bait_rows);
}

std::string_view to_string(ClusterVerdict verdict) {
    return verdict == ClusterVerdict::InorganicSpam ? "inorganic" : "legit";
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const auto& kt = simd::kernels();
    const double na = kt.dot(a.data(), a.data(), a.size());
    const double nb = kt.dot(b.data(), b.data(), b.size());
    if (na == 0.0 || nb == 0.0) return 0.0;
    return kt.dot(a.data(), b.data(), a.size()) / std::sqrt(na * nb);
}

Clustering cluster_patterns(const Matrix& patterns, std::size_t max_members,
                            double similarity_threshold) {
    Clustering out;
    std::vector<std::size_t> rows;
    for (std::size_t p = 0; p < patterns.rows(); ++p) {
        const auto row = patterns.row(p);
        if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; }))
            out.zero_rows.push_back(p);
        else
            rows.push_back(p);
    }

    struct Work {
        std::vector<std::size_t> members;
        std::vector<double> sum;
        std::vector<double> centroid() const {
            std::vector<double> c(sum);
            for (double& v : c) v /= static_cast<double>(members.size());
            return c;
        }
    };
    std::vector<Work> work;
    std::vector<std::size_t> owner(patterns.rows(), 0);

    for (auto p : rows) {
        const auto row = patterns.row(p);
        std::size_t best = work.size();
        double best_sim = -1.0;
        for (std::size_t c = 0; c < work.size(); ++c) {
            if (max_members != 0 && work[c].members.size() >= max_members) continue;
            const double s = cosine_similarity(row, work[c].centroid());
            if (s >= similarity_threshold && s > best_sim) {
                best = c;
                best_sim = s;
            }
        }
        if (best == work.size()) work.push_back({{}, std::vector<double>(patterns.cols(), 0.0)});
        work[best].members.push_back(p);
        simd::kernels().axpy(1.0 / norm_of(row), row.data(), work[best].sum.data(), row.size());
        owner[p] = best;
    }

    // Refinement against the first-pass centroids.
    std::vector<std::vector<double>> centroids;
    for (const auto& w : work) centroids.push_back(w.centroid());
    std::vector<std::size_t> sizes;
    for (const auto& w : work) sizes.push_back(w.members.size());
    for (auto p : rows) {
        const auto row = patterns.row(p);
        const std::size_t cur = owner[p];
        double best_sim = cosine_similarity(row, centroids[cur]);
        std::size_t best = cur;
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            if (c == cur) continue;
            if (max_members != 0 && sizes[c] >= max_members) continue;
            const double s = cosine_similarity(row, centroids[c]);
            if (s >= similarity_threshold && s > best_sim) {
                best = c;
                best_sim = s;
            }
        }
        if (best != cur) {
            --sizes[cur];
            ++sizes[best];
            owner[p] = best;
        }
    }

    std::vector<std::vector<std::size_t>> members(work.size());
    for (auto p : rows) members[owner[p]].push_back(p);
    for (auto& m : members) {
        if (m.empty()) continue;
        PatternCluster pc;
        pc.member_indices = m;
        pc.centroid = mean_of(patterns, m);
        out.clusters.push_back(std::move(pc));
    }
    std::sort(out.clusters.begin(), out.clusters.end(),
              [](const PatternCluster& a, const PatternCluster& b) {
                  return a.member_indices.front() < b.member_indices.front();
              });
    return out;
}

double pattern_entropy(std::span<const double> pattern, double bin_width, double support_floor) {
    if (!(bin_width > 0.0)) throw InvalidArgument("bin_width must be positive");
    // Click positions in bins; gaps are whole multiples of the bin width, so
    // distinct gaps are compared as bin counts.
    std::size_t clicks = 0;
    std::map<std::size_t, std::size_t> gap_counts;
    std::size_t prev = 0;
    bool have_prev = false;
    for (std::size_t j = 0; j < pattern.size(); ++j) {
        const double v = pattern[j];
        if (!(v > support_floor)) continue;
        clicks += std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(v)));
        if (have_prev) ++gap_counts[j - prev];
        prev = j;
        have_prev = true;
    }
    if (clicks < 2 || gap_counts.size() < 2) return 0.0;

    std::size_t total = 0;
    bool uniform = true;
    const std::size_t first = gap_counts.begin()->second;
    for (const auto& [gap, count] : gap_counts) {
        total += count;
        uniform = uniform && count == first;
    }
    if (uniform) return 1.0;
    double h = 0.0;
    for (const auto& [gap, count] : gap_counts) {
        const double p = static_cast<double>(count) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    return std::clamp(h / std::log(static_cast<double>(gap_counts.size())), 0.0, 1.0);
}

std::vector<PatternCluster> classify_clusters(std::vector<PatternCluster> clusters,
                                              const Matrix& activation, const Matrix& patterns,
                                              const ClassifyOptions& options) {
    if (activation.cols() != patterns.rows())
        throw DimensionMismatch("classify_clusters: activation and patterns disagree on rank");
    const auto weights = column_sums(activation);
    const auto& kt = simd::kernels();
    for (auto& c : clusters) {
        double h = 0.0;
        c.total_weight = 0.0;
        for (auto p : c.member_indices) {
            if (p >= patterns.rows()) throw InvalidArgument("cluster member outside the pattern matrix");
            const auto row = patterns.row(p);
            const double floor = options.support_fraction * kt.max(row.data(), row.size());
            h += pattern_entropy(row, options.bin_width, floor);
            c.total_weight += weights[p];
        }
        c.normalized_entropy =
            c.member_indices.empty() ? 0.0 : h / static_cast<double>(c.member_indices.size());
        c.verdict = c.normalized_entropy <= options.entropy_threshold ? ClusterVerdict::InorganicSpam
                                                                       : ClusterVerdict::Legit;
    }
    return clusters;
}

ClickVerdicts verdict_clicks(const OrganicReport& report, std::span<const PatternCluster> clusters,
                             const Matrix& activation, const Matrix& patterns,
                             const TrafficMatrix& matrix, std::span<const ClickEvent> clicks,
                             const VerdictOptions& options) {
    check_factors(activation, patterns, matrix);
    const std::size_t n = matrix.num_sources();
    const std::size_t m = matrix.num_bins();
    if (report.spam_counts.rows() != n || report.spam_counts.cols() != m)
        throw DimensionMismatch("organic report does not match the traffic matrix");

    // Inorganic expectation from heavy low-entropy clusters, skipping
    // patterns already counted as organic reuse.
    Matrix inorganic(n, m);
    std::vector<bool> reused(patterns.rows(), false);
    for (auto p : report.reused_pattern_indices) reused[p] = true;
    const auto& kt = simd::kernels();
    for (const auto& c : clusters) {
        if (c.verdict != ClusterVerdict::InorganicSpam || !(c.total_weight > options.repeat_threshold))
            continue;
        for (auto p : c.member_indices) {
            if (reused[p]) continue;
            for (std::size_t i = 0; i < n; ++i)
                if (activation(i, p) != 0.0)
                    kt.axpy(activation(i, p), patterns.row(p).data(), inorganic.row(i).data(), m);
        }
    }

    // Whole-click targets per cell.
    auto whole = [](double x, double cap) {
        return static_cast<std::size_t>(std::floor(std::clamp(x, 0.0, cap) + 0.5));
    };
    Matrix organic_target(n, m), inorganic_target(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double obs = matrix.counts(i, j);
            if (obs == 0.0) continue;
            const auto org = whole(report.spam_counts(i, j), obs);
            const auto tot = whole(report.spam_counts(i, j) + inorganic(i, j), obs);
            organic_target(i, j) = static_cast<double>(org);
            inorganic_target(i, j) = static_cast<double>(tot - std::min(tot, org));
        }

    std::unordered_map<std::string_view, std::size_t> row_of;
    for (std::size_t i = 0; i < n; ++i) row_of.emplace(matrix.sources[i], i);

    struct Placed {
        std::size_t click;
        std::size_t row;
        std::size_t bin;
    };
    std::vector<Placed> placed;
    for (std::size_t c = 0; c < clicks.size(); ++c) {
        auto it = row_of.find(clicks[c].source);
        if (it == row_of.end()) continue;
        if (auto j = bin_index(clicks[c].timestamp, matrix.bins)) placed.push_back({c, it->second, *j});
    }

    // Alignment over clicks sitting in cells with an organic target.
    std::vector<const Placed*> suspects;
    for (const auto& p : placed)
        if (organic_target(p.row, p.bin) > 0.0) suspects.push_back(&p);
    std::sort(suspects.begin(), suspects.end(), [&](const Placed* a, const Placed* b) {
        return clicks[a->click].timestamp < clicks[b->click].timestamp ||
               (clicks[a->click].timestamp == clicks[b->click].timestamp && a->click < b->click);
    });
    std::vector<bool> aligned(clicks.size(), false);
    const std::size_t need = options.min_support > 0 ? options.min_support - 1 : 0;
    std::size_t lo = 0;
    for (std::size_t s = 0; s < suspects.size(); ++s) {
        const double t = clicks[suspects[s]->click].timestamp;
        while (clicks[suspects[lo]->click].timestamp < t - options.alignment_tolerance) ++lo;
        std::vector<std::size_t> others;
        for (std::size_t q = lo; q < suspects.size(); ++q) {
            if (clicks[suspects[q]->click].timestamp > t + options.alignment_tolerance) break;
            if (suspects[q]->row != suspects[s]->row) others.push_back(suspects[q]->row);
        }
        std::sort(others.begin(), others.end());
        others.erase(std::unique(others.begin(), others.end()), others.end());
        aligned[suspects[s]->click] = others.size() >= need;
    }

    // Group clicks per cell, aligned first then by time.
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> by_cell;
    for (const auto& p : placed) by_cell[{p.row, p.bin}].push_back(p.click);

    ClickVerdicts out;
    out.predicted = Matrix(n, m);
    out.click_labels.assign(clicks.size(), Label::Legit);
    for (auto& [cell, ids] : by_cell) {
        const auto [i, j] = cell;
        std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
            if (aligned[a] != aligned[b]) return static_cast<bool>(aligned[a]);
            return clicks[a].timestamp < clicks[b].timestamp;
        });
        CellVerdict cv{i, j, ids.size(), 0, 0};
        const auto org_target = static_cast<std::size_t>(organic_target(i, j));
        auto inorg_left = static_cast<std::size_t>(inorganic_target(i, j));
        for (auto id : ids) {
            if (cv.organic < org_target && aligned[id]) {
                ++cv.organic;
                out.click_labels[id] = Label::OrganicSpam;
            } else if (inorg_left > 0) {
                --inorg_left;
                ++cv.inorganic;
                out.click_labels[id] = Label::InorganicSpam;
            }
        }
        out.predicted(i, j) = static_cast<double>(cv.predicted_spam());
        out.cells.push_back(cv);
    }
    return out;
}

void write_verdict_csv(std::ostream& out, const TrafficMatrix& matrix, const ClickVerdicts& v) {
    out << "source,bin,observed,predicted_spam,verdict_breakdown\n";
    for (const auto& c : v.cells) {
        out << matrix.sources[c.source] << ',' << c.bin << ',' << c.observed << ','
            << c.predicted_spam() << ",organic=" << c.organic << ";inorganic=" << c.inorganic
            << ";legit=" << (c.observed - c.predicted_spam()) << '\n';
    }
}

void write_cluster_jsonl(std::ostream& out, std::span<const PatternCluster> clusters) {
    for (std::size_t k = 0; k < clusters.size(); ++k) {
        const auto& c = clusters[k];
        nlohmann::ordered_json j;
        j["cluster_id"] = k;
        j["size"] = c.member_indices.size();
        j["entropy"] = c.normalized_entropy;
        j["weight"] = c.total_weight;
        j["verdict"] = std::string(to_string(c.verdict));
        out << j.dump() << '\n';
    }
}

}  // namespace clickguard
