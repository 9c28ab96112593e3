#include "clickguard/bait.hpp"
#include "clickguard/simd/kernels.hpp"

#include "clickguard/config.hpp"
#include "clickguard/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>

namespace clickguard {

BaitPattern make_bait_pattern(double delta, std::size_t count, double start, const TimeBinConfig& bins) {
    bins.validate();
    if (!(delta > 0.0)) throw InvalidArgument("bait delta must be positive");
    if (delta < bins.bin_width) throw InvalidArgument("bait delta must be at least one bin width");
    if (count < 2) throw InvalidArgument("a bait pattern needs at least two clicks");

    BaitPattern b;
    b.delta = delta;
    b.count = count;
    b.start = start;
    b.as_row.assign(bins.num_bins, 0.0);
    double t = start;
    for (std::size_t k = 0; k < count; ++k) {
        if (k > 0) t = t + delta;
        auto j = bin_index(t, bins);
        if (!j) throw InvalidArgument("bait pattern extends outside the time window");
        if (k == 0) b.start_bin = *j;
        b.timestamps.push_back(t);
        b.as_row[*j] = 1.0;
    }
    return b;
}

void BaitConfig::validate() const {
    if (deltas.empty()) throw InvalidArgument("bait config needs at least one delta");
    std::set<double> seen;
    for (double d : deltas) {
        if (!(d > 0.0)) throw InvalidArgument("bait delta must be positive");
        if (!seen.insert(d).second) throw InvalidArgument("bait deltas must be pairwise distinct");
    }
    if (count < 2) throw InvalidArgument("bait count must be at least 2");
    if (!(flag_threshold >= 0.0 && flag_threshold <= 1.0))
        throw InvalidArgument("flag_threshold must lie in [0, 1]");
    if (echo_min_support == 0) throw InvalidArgument("echo_min_support must be at least 1");
}

void schedule_bait(BaitConfig& config, std::span<const std::string> sources, const TimeBinConfig& bins) {
    config.validate();
    std::vector<std::string> targets = config.target_sources;
    if (targets.empty()) targets.assign(sources.begin(), sources.end());
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    std::mt19937_64 rng(config.seed);
    config.placements.clear();
    const double end = bins.window_end();
    const auto days = static_cast<std::size_t>(
        std::ceil((end - bins.window_start) / kSecondsPerDay - 1e-9));
    for (std::size_t d = 0; d < days; ++d) {
        const double day_start = bins.window_start + static_cast<double>(d) * kSecondsPerDay;
        const double day_end = std::min(end, day_start + kSecondsPerDay);
        for (std::size_t s = 0; s < targets.size(); ++s) {
            const double delta = config.deltas[(d + s) % config.deltas.size()];
            const double span = delta * static_cast<double>(config.count - 1);
            const double latest = day_end - span - 1.0;
            if (latest <= day_start) continue;
            const double start = std::uniform_real_distribution<double>(day_start, latest)(rng);
            config.placements.push_back({targets[s], make_bait_pattern(delta, config.count, start, bins)});
        }
    }
}

LabeledClickSet inject_bait(const LabeledClickSet& clicks, const BaitConfig& config) {
    LabeledClickSet out = clicks;
    std::map<std::string, std::string> agent;
    for (const auto& c : clicks.clicks) agent.try_emplace(c.source, c.user_agent);
    for (const auto& p : config.placements) {
        for (double t : p.pattern.timestamps) {
            ClickEvent ev;
            ev.timestamp = t;
            ev.source = p.source;
            ev.ad_url = "https://ads.example.net/b/" + format_double(p.pattern.delta);
            ev.referrer_url = "https://bait.example.net/";
            auto it = agent.find(p.source);
            ev.user_agent = it == agent.end() ? std::string() : it->second;
            ev.label = Label::Bait;
            out.clicks.push_back(std::move(ev));
        }
    }
    out.provenance.emplace_back("bait.placements", std::to_string(config.placements.size()));
    out.provenance.emplace_back("bait.seed", std::to_string(config.seed));
    return out;
}

LabeledClickSet strip_bait(const LabeledClickSet& clicks, const BaitConfig& config) {
    std::set<std::pair<std::string, double>> scheduled;
    for (const auto& p : config.placements)
        for (double t : p.pattern.timestamps) scheduled.emplace(p.source, t);
    LabeledClickSet out;
    out.provenance = clicks.provenance;
    std::erase_if(out.provenance, [](const auto& kv) { return kv.first.rfind("bait.", 0) == 0; });
    for (const auto& c : clicks.clicks) {
        if (c.label == Label::Bait) continue;
        if (c.label == Label::Unknown && scheduled.count({c.source, c.timestamp})) continue;
        out.clicks.push_back(c);
    }
    return out;
}

std::vector<double> fraud_fractions(const Matrix& activation, std::span<const std::size_t> bait_columns) {
    for (auto b : bait_columns)
        if (b >= activation.cols()) throw InvalidArgument("bait column outside the activation matrix");
    std::vector<double> out(activation.rows(), 0.0);
    for (std::size_t i = 0; i < activation.rows(); ++i) {
        double total = 0.0;
        for (std::size_t p = 0; p < activation.cols(); ++p) total += activation(i, p);
        if (total <= 0.0) continue;
        double bait = 0.0;
        for (auto b : bait_columns) bait += activation(i, b);
        out[i] = std::clamp(bait / total, 0.0, 1.0);
    }
    return out;
}

namespace {

struct Echo {
    double delta;
    double phase;
    std::size_t start_bin;
    std::size_t support;
    std::vector<std::size_t> offsets;
};

// Bin offsets of a bait shape for every distinct sub-bin phase of its start.
std::vector<std::pair<double, std::vector<std::size_t>>> shape_variants(double delta, std::size_t count,
                                                                       double bw) {
    std::set<double> phases{0.0};
    for (std::size_t k = 1; k < count; ++k) {
        const double kd = static_cast<double>(k) * delta;
        const double ph = bw * std::ceil(kd / bw) - kd;
        if (ph > 0.0 && ph < bw) phases.insert(ph);
    }
    std::vector<std::pair<double, std::vector<std::size_t>>> out;
    for (double ph : phases) {
        std::vector<std::size_t> off;
        for (std::size_t k = 0; k < count; ++k)
            off.push_back(static_cast<std::size_t>(std::floor((ph + static_cast<double>(k) * delta) / bw)));
        if (std::none_of(out.begin(), out.end(), [&](const auto& v) { return v.second == off; }))
            out.emplace_back(ph, std::move(off));
    }
    return out;
}

}  // namespace

BaitDetection detect_with_bait(const TrafficMatrix& matrix, const BaitConfig& config,
                               const FactorizationConfig& fconfig) {
    config.validate();
    fconfig.validate();
    const Matrix& O = matrix.counts;
    const std::size_t n = O.rows();
    const std::size_t m = O.cols();
    if (n == 0) throw InvalidArgument("detect_with_bait: empty traffic matrix");
    const double bw = matrix.bins.bin_width;

    std::vector<Echo> echoes;
    for (double delta : config.deltas) {
        if (delta < bw) throw InvalidArgument("bait delta must be at least one bin width");
        for (auto& [phase, off] : shape_variants(delta, config.count, bw)) {
            if (off.back() >= m) continue;
            for (std::size_t s = 0; s + off.back() < m; ++s) {
                std::size_t support = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    bool all = true;
                    for (auto o : off)
                        if (O(i, s + o) <= 0.0) {
                            all = false;
                            break;
                        }
                    support += all ? 1 : 0;
                }
                if (support >= config.echo_min_support) echoes.push_back({delta, phase, s, support, off});
            }
        }
    }
    std::stable_sort(echoes.begin(), echoes.end(),
                     [](const Echo& a, const Echo& b) { return a.support > b.support; });

    const std::size_t base = fconfig.resolved_rank(n, m);
    const std::size_t room = std::min(n, m) > 1 ? std::min(n, m) - 1 : 0;
    const std::size_t f = std::min({echoes.size(), config.max_frozen, room});

    BaitDetection out;
    std::vector<FrozenPattern> frozen;
    for (std::size_t k = 0; k < f; ++k) {
        const auto& e = echoes[k];
        const double start = matrix.bins.bin_start(e.start_bin) + e.phase;
        auto pattern = make_bait_pattern(e.delta, config.count, start, matrix.bins);
        frozen.push_back({k, pattern.as_row});
        out.echoes.push_back(std::move(pattern));
        out.echo_support.push_back(e.support);
    }

    FactorizationConfig fc = fconfig;
    fc.rank = std::min(base + f, std::min(n, m));
    out.factors = multilayer_factorize(O, fc, frozen);

    // The fraction depends on how each pattern row is scaled. Weighting every
    // activation column by its pattern's click mass reads it in units of
    // reconstructed clicks, so frozen 0/1 rows and peak-scaled learned rows
    // compare on equal terms.
    Matrix weighted = out.factors.effective_activation;
    for (std::size_t p = 0; p < weighted.cols(); ++p) {
        const auto row = out.factors.final_patterns.row(p);
        const double mass = simd::kernels().sum(row.data(), row.size());
        for (std::size_t i = 0; i < n; ++i) weighted(i, p) *= mass;
    }
    out.fraud_fraction = fraud_fractions(weighted, out.factors.bait_rows);
    out.flagged.resize(n);
    out.bait_spam = Matrix(n, m);
    const auto& A = out.factors.effective_activation;
    const auto& P = out.factors.final_patterns;
    for (std::size_t i = 0; i < n; ++i) {
        out.flagged[i] = out.fraud_fraction[i] > config.flag_threshold;
        if (!out.flagged[i]) continue;
        for (auto b : out.factors.bait_rows)
            for (std::size_t j = 0; j < m; ++j) out.bait_spam(i, j) += A(i, b) * P(b, j);
    }
    return out;
}

BaitConfig parse_bait_config(std::istream& in) {
    const auto kv = KeyValueConfig::parse(in, "bait config");
    kv.require_known({"delta_seconds", "count", "targets", "flag_threshold", "seed",
                      "echo_min_support", "max_frozen"});
    BaitConfig c;
    c.deltas = kv.get_doubles("delta_seconds", c.deltas);
    c.count = kv.get_uint("count", c.count);
    auto targets = kv.get_strings("targets", {});
    if (!(targets.size() == 1 && targets.front() == "all")) c.target_sources = targets;
    c.flag_threshold = kv.get_double("flag_threshold", c.flag_threshold);
    c.seed = kv.get_uint("seed", c.seed);
    c.echo_min_support = kv.get_uint("echo_min_support", c.echo_min_support);
    c.max_frozen = kv.get_uint("max_frozen", c.max_frozen);
    c.validate();
    return c;
}

void write_bait_config(std::ostream& out, const BaitConfig& c) {
    out << "delta_seconds=";
    for (std::size_t k = 0; k < c.deltas.size(); ++k) out << (k ? "," : "") << format_double(c.deltas[k]);
    out << "\ncount=" << c.count << "\ntargets=";
    if (c.target_sources.empty()) out << "all";
    for (std::size_t k = 0; k < c.target_sources.size(); ++k)
        out << (k ? "," : "") << c.target_sources[k];
    out << "\nflag_threshold=" << format_double(c.flag_threshold) << "\nseed=" << c.seed
        << "\necho_min_support=" << c.echo_min_support << "\nmax_frozen=" << c.max_frozen << '\n';
}

void write_fraction_csv(std::ostream& out, const TrafficMatrix& matrix, const BaitDetection& d) {
    out << "source,fraction,flagged\n";
    for (std::size_t i = 0; i < matrix.num_sources(); ++i)
        out << matrix.sources[i] << ',' << format_double(d.fraud_fraction[i]) << ','
            << (d.flagged[i] ? 1 : 0) << '\n';
}

}  // namespace clickguard
