#pragma once

// Brute-force reference computations used by the unit and acceptance tests.
// They are written for obviousness, not speed, and share no code with the
// library.

#include "clickguard/clickstream.hpp"
#include "clickguard/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <set>
#include <span>
#include <vector>

namespace oracle {

using clickguard::Label;
using clickguard::Matrix;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double density = 1.0,
                            double scale = 1.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (u(rng) < density) m(i, j) = scale * u(rng);
    return m;
}

inline Matrix product(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            long double s = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
            out(i, j) = static_cast<double>(s);
        }
    return out;
}

inline double relative_error(const Matrix& o, const Matrix& a, const Matrix& p) {
    const Matrix ap = product(a, p);
    long double num = 0, den = 0;
    for (std::size_t i = 0; i < o.rows(); ++i)
        for (std::size_t j = 0; j < o.cols(); ++j) {
            const long double d = static_cast<long double>(o(i, j)) - ap(i, j);
            num += d * d;
            den += static_cast<long double>(o(i, j)) * o(i, j);
        }
    return den == 0 ? 0.0 : static_cast<double>(std::sqrt(num / den));
}

// Mean of every entry whose column lies within c of j, clipped to the row.
inline Matrix windowed_mean(const Matrix& m, std::size_t c) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double s = 0;
            int n = 0;
            for (std::size_t p = 0; p < m.cols(); ++p) {
                const std::size_t dist = p > j ? p - j : j - p;
                if (dist <= c) {
                    s += m(i, p);
                    ++n;
                }
            }
            out(i, j) = s / n;
        }
    return out;
}

// Normalized Shannon entropy of inter-click gaps, computed from explicit
// click times at bin centres. Gaps of zero (clicks sharing a bin) carry no
// timing information and are left out.
inline double gap_entropy(std::span<const double> pattern, double bin_width, double floor = 0.0) {
    std::vector<double> times;
    for (std::size_t j = 0; j < pattern.size(); ++j) {
        if (!(pattern[j] > floor)) continue;
        const long k = std::max(1L, std::lround(pattern[j]));
        for (long c = 0; c < k; ++c) times.push_back((static_cast<double>(j) + 0.5) * bin_width);
    }
    std::map<long long, int> hist;
    int total = 0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double g = times[k] - times[k - 1];
        if (g == 0) continue;
        ++hist[std::llround(g * 1000)];
        ++total;
    }
    if (hist.size() < 2) return 0.0;
    double h = 0;
    for (const auto& [g, n] : hist) {
        const double p = static_cast<double>(n) / total;
        h -= p * std::log2(p);
    }
    return h / std::log2(static_cast<double>(hist.size()));
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ab += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
    }
    return aa == 0 || bb == 0 ? 0.0 : ab / std::sqrt(aa * bb);
}

// Greedy threshold clustering over rows in index order, centroids recomputed
// from the member list every time as the mean of unit-length members,
// followed by one pass that moves a row to a strictly better first-pass
// centroid clearing the threshold. Returns the partition as a set of member
// sets (all-zero rows excluded).
inline std::set<std::set<std::size_t>> greedy_partition(const Matrix& m, double threshold) {
    auto centroid = [&](const std::vector<std::size_t>& members) {
        std::vector<double> c(m.cols(), 0.0);
        for (auto r : members) {
            double len = 0;
            for (std::size_t j = 0; j < m.cols(); ++j) len += m(r, j) * m(r, j);
            len = std::sqrt(len);
            for (std::size_t j = 0; j < m.cols(); ++j) c[j] += m(r, j) / len;
        }
        for (double& v : c) v /= static_cast<double>(members.size());
        return c;
    };
    std::vector<std::vector<std::size_t>> clusters;
    std::map<std::size_t, std::size_t> owner;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0; })) continue;
        int best = -1;
        double best_sim = 0;
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            const auto cen = centroid(clusters[c]);
            const double s = cosine(row, cen);
            if (s >= threshold && (best < 0 || s > best_sim)) {
                best = static_cast<int>(c);
                best_sim = s;
            }
        }
        if (best < 0) {
            clusters.push_back({r});
            owner[r] = clusters.size() - 1;
        } else {
            clusters[static_cast<std::size_t>(best)].push_back(r);
            owner[r] = static_cast<std::size_t>(best);
        }
    }
    std::vector<std::vector<double>> first;
    for (const auto& c : clusters) first.push_back(centroid(c));
    for (auto& [r, cur] : owner) {
        const auto row = m.row(r);
        double best_sim = cosine(row, first[cur]);
        std::size_t best = cur;
        for (std::size_t c = 0; c < first.size(); ++c) {
            const double s = cosine(row, first[c]);
            if (c != cur && s >= threshold && s > best_sim) {
                best = c;
                best_sim = s;
            }
        }
        cur = best;
    }
    std::map<std::size_t, std::set<std::size_t>> groups;
    for (const auto& [r, c] : owner) groups[c].insert(r);
    std::set<std::set<std::size_t>> out;
    for (auto& [c, g] : groups) out.insert(g);
    return out;
}

struct Confusion {
    std::size_t legit = 0, spam = 0, fp = 0, tp = 0;
};

inline Confusion confusion(std::span<const Label> truth, std::span<const Label> predicted) {
    Confusion c;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const bool spam_truth = truth[k] == Label::OrganicSpam || truth[k] == Label::InorganicSpam;
        const bool spam_pred = predicted[k] == Label::OrganicSpam || predicted[k] == Label::InorganicSpam;
        if (truth[k] == Label::Legit) {
            ++c.legit;
            if (spam_pred) ++c.fp;
        } else if (spam_truth) {
            ++c.spam;
            if (spam_pred) ++c.tp;
        }
    }
    return c;
}

}  // namespace oracle
