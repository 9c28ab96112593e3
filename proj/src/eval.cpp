#include "clickguard/eval.hpp"

#include "clickguard/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <unordered_map>

namespace clickguard {

FactorizationConfig DetectionConfig::default_detection_factorization() {
    FactorizationConfig f;
    f.rank = 20;
    return f;
}

const std::set<std::string>& detection_config_keys() {
    static const std::set<std::string> keys = {
        "layers",           "rank",          "rank_cap",        "epsilon",
        "pool_halfwidth",   "max_iters",     "seed",            "eta",
        "refit",            "refit_iters",   "repeat_threshold", "similarity_threshold",
        "cluster_cap",      "entropy_threshold", "support_fraction", "min_support",
        "alignment_tolerance"};
    return keys;
}

DetectionConfig parse_detection_config(const KeyValueConfig& kv) {
    DetectionConfig c;
    auto& f = c.factorization;
    f.num_layers = kv.get_uint("layers", f.num_layers);
    f.rank = kv.get_uint("rank", f.rank);
    f.rank_cap = kv.get_uint("rank_cap", f.rank_cap);
    f.epsilon = kv.get_double("epsilon", f.epsilon);
    f.pool_halfwidth = kv.get_uint("pool_halfwidth", f.pool_halfwidth);
    f.max_iters = kv.get_uint("max_iters", f.max_iters);
    f.seed = kv.get_uint("seed", f.seed);
    f.eta = kv.get_double("eta", f.eta);
    f.refit_patterns = kv.get_bool("refit", f.refit_patterns);
    f.refit_iters = kv.get_uint("refit_iters", f.refit_iters);
    c.repeat_threshold = kv.get_double("repeat_threshold", c.repeat_threshold);
    c.verdict.repeat_threshold = c.repeat_threshold;
    c.similarity_threshold = kv.get_double("similarity_threshold", c.similarity_threshold);
    c.cluster_cap = kv.get_uint("cluster_cap", c.cluster_cap);
    c.classify.entropy_threshold = kv.get_double("entropy_threshold", c.classify.entropy_threshold);
    c.classify.support_fraction = kv.get_double("support_fraction", c.classify.support_fraction);
    c.verdict.min_support = kv.get_uint("min_support", c.verdict.min_support);
    c.verdict.alignment_tolerance = kv.get_double("alignment_tolerance", c.verdict.alignment_tolerance);
    f.validate();
    return c;
}

void write_detection_config(std::ostream& out, const DetectionConfig& c) {
    const auto& f = c.factorization;
    out << "layers=" << f.num_layers << "\nrank=" << f.rank << "\nrank_cap=" << f.rank_cap
        << "\nepsilon=" << format_double(f.epsilon) << "\npool_halfwidth=" << f.pool_halfwidth
        << "\nmax_iters=" << f.max_iters << "\nseed=" << f.seed << "\neta=" << format_double(f.eta)
        << "\nrefit=" << (f.refit_patterns ? 1 : 0) << "\nrefit_iters=" << f.refit_iters
        << "\nrepeat_threshold=" << format_double(c.repeat_threshold)
        << "\nsimilarity_threshold=" << format_double(c.similarity_threshold)
        << "\ncluster_cap=" << c.cluster_cap
        << "\nentropy_threshold=" << format_double(c.classify.entropy_threshold)
        << "\nsupport_fraction=" << format_double(c.classify.support_fraction)
        << "\nmin_support=" << c.verdict.min_support
        << "\nalignment_tolerance=" << format_double(c.verdict.alignment_tolerance) << '\n';
}

PassiveResult detect_passive(std::span<const ClickEvent> clicks, const TimeBinConfig& bins,
                             const DetectionConfig& config) {
    PassiveResult r;
    r.matrix = build_traffic_matrix(clicks, bins);
    if (r.matrix.num_sources() == 0) throw DataError("no clicks inside the time window");
    r.factors = multilayer_factorize(r.matrix.counts, config.factorization);
    r.organic = isolate_organic(r.factors, config.repeat_threshold);
    r.clustering = cluster_patterns(r.factors.final_patterns, config.cluster_cap,
                                    config.similarity_threshold);
    ClassifyOptions classify = config.classify;
    classify.bin_width = bins.bin_width;
    r.clustering.clusters = classify_clusters(std::move(r.clustering.clusters),
                                              r.factors.effective_activation,
                                              r.factors.final_patterns, classify);
    r.verdicts = verdict_clicks(r.organic, r.clustering.clusters, r.factors.effective_activation,
                                r.factors.final_patterns, r.matrix, clicks, config.verdict);
    return r;
}

ActiveResult detect_active(std::span<const ClickEvent> clicks, const TimeBinConfig& bins,
                           const DetectionConfig& config, const BaitConfig& bait) {
    ActiveResult r;
    r.passive = detect_passive(clicks, bins, config);
    r.bait = detect_with_bait(r.passive.matrix, bait, config.factorization);
    r.click_labels = r.passive.verdicts.click_labels;

    const auto& tm = r.passive.matrix;
    std::unordered_map<std::string_view, std::size_t> row_of;
    for (std::size_t i = 0; i < tm.num_sources(); ++i) row_of.emplace(tm.sources[i], i);
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> by_cell;
    for (std::size_t c = 0; c < clicks.size(); ++c) {
        auto it = row_of.find(clicks[c].source);
        if (it == row_of.end() || !r.bait.flagged[it->second]) continue;
        if (auto j = bin_index(clicks[c].timestamp, tm.bins)) by_cell[{it->second, *j}].push_back(c);
    }
    // Only clicks that sit on an exact bait-spaced chain are candidates; other
    // clicks sharing the cell are the source's own traffic.
    const double tol = config.verdict.alignment_tolerance;
    std::map<std::size_t, std::vector<double>> times_of;
    for (auto& [cell, ids] : by_cell)
        for (auto id : ids) times_of[cell.first].push_back(clicks[id].timestamp);
    for (auto& [row, ts] : times_of) std::sort(ts.begin(), ts.end());
    const auto present = [&](const std::vector<double>& ts, double t) {
        auto it = std::lower_bound(ts.begin(), ts.end(), t - tol);
        return it != ts.end() && *it <= t + tol;
    };
    const auto on_chain = [&](std::size_t row, double t) {
        const auto& ts = times_of[row];
        for (double delta : bait.deltas)
            for (std::size_t first = 0; first < bait.count; ++first) {
                bool all = true;
                for (std::size_t k = 0; k < bait.count && all; ++k)
                    all = present(ts, t + (static_cast<double>(k) - static_cast<double>(first)) * delta);
                if (all) return true;
            }
        return false;
    };
    for (auto& [cell, ids] : by_cell) {
        const double obs = tm.counts(cell.first, cell.second);
        const double expected = std::min(r.bait.bait_spam(cell.first, cell.second), obs);
        auto want = static_cast<std::size_t>(std::floor(expected + 0.5));
        std::size_t already = 0;
        for (auto id : ids) already += is_spam(r.click_labels[id]) ? 1 : 0;
        std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
            return clicks[a].timestamp < clicks[b].timestamp;
        });
        for (auto id : ids) {
            if (already >= want) break;
            if (is_spam(r.click_labels[id]) || !on_chain(cell.first, clicks[id].timestamp)) continue;
            r.click_labels[id] = Label::OrganicSpam;
            ++already;
        }
    }
    return r;
}

Rates compute_rates(std::span<const Label> truth, std::span<const Label> predicted) {
    if (truth.size() != predicted.size())
        throw InvalidArgument("compute_rates: label sequences differ in length");
    Rates r;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const bool flagged = is_spam(predicted[k]);
        switch (truth[k]) {
            case Label::Legit:
                ++r.legit;
                r.false_positives += flagged ? 1 : 0;
                break;
            case Label::OrganicSpam:
                ++r.spam;
                ++r.organic;
                r.true_positives += flagged ? 1 : 0;
                r.organic_detected += flagged ? 1 : 0;
                break;
            case Label::InorganicSpam:
                ++r.spam;
                ++r.inorganic;
                r.true_positives += flagged ? 1 : 0;
                r.inorganic_detected += flagged ? 1 : 0;
                break;
            case Label::Bait:
            case Label::Unknown: break;
        }
    }
    r.no_legit_warning = r.legit == 0;
    r.no_spam_warning = r.spam == 0;
    r.fpr = r.legit == 0 ? 0.0 : static_cast<double>(r.false_positives) / static_cast<double>(r.legit);
    r.tpr = r.spam == 0 ? 0.0 : static_cast<double>(r.true_positives) / static_cast<double>(r.spam);
    return r;
}

std::string_view to_string(Defence d) { return d == Defence::Bait ? "bait" : "passive"; }

Defence parse_defence(std::string_view token) {
    if (token == "passive") return Defence::Passive;
    if (token == "bait") return Defence::Bait;
    throw InvalidArgument("unknown defence '" + std::string(token) + "'");
}

void ExperimentConfig::validate() const {
    legit.validate();
    if (repetitions == 0) throw InvalidArgument("repetitions must be at least 1");
    if (durations.empty()) throw InvalidArgument("at least one duration is required");
    for (double d : durations)
        if (!(d > 0.0)) throw InvalidArgument("durations must be positive");
    if (defences.empty()) throw InvalidArgument("at least one defence is required");
    if (!(bin_width > 0.0)) throw InvalidArgument("bin_width must be positive");
    if (std::find(defences.begin(), defences.end(), Defence::Bait) != defences.end()) bait.validate();
    detection.factorization.validate();
}

const std::set<std::string>& experiment_config_keys() {
    static const std::set<std::string> keys = [] {
        std::set<std::string> k = {"sources",        "rate",          "durations",
                                   "attacks",        "volumes",       "volume_rate",
                                   "infected_fraction", "jitter_scale", "offset",
                                   "segment_pool",   "segment_length", "defences",
                                   "repetitions",    "base_seed",     "bin_width",
                                   "bait.delta_seconds", "bait.count", "bait.flag_threshold",
                                   "bait.echo_min_support", "bait.max_frozen"};
        k.insert(detection_config_keys().begin(), detection_config_keys().end());
        return k;
    }();
    return keys;
}

ExperimentConfig parse_experiment_config(const KeyValueConfig& kv) {
    kv.require_known(experiment_config_keys());
    ExperimentConfig c;
    c.legit.num_sources = kv.get_uint("sources", c.legit.num_sources);
    c.legit.per_source_rate = kv.get_double("rate", c.legit.per_source_rate);
    c.durations = kv.get_doubles("durations", c.durations);
    if (auto a = kv.raw("attacks")) {
        c.attack_kinds.clear();
        for (const auto& t : split_list(*a))
            if (!t.empty() && t != "none") c.attack_kinds.push_back(parse_attack_kind(t));
    }
    if (auto v = kv.raw("volumes")) {
        c.volume_classes.clear();
        for (const auto& t : split_list(*v)) c.volume_classes.push_back(parse_volume_class(t));
    }
    c.attack_template.infected_fraction = kv.get_double("infected_fraction", c.attack_template.infected_fraction);
    c.attack_template.jitter_scale = kv.get_double("jitter_scale", c.attack_template.jitter_scale);
    c.attack_template.offset = kv.get_double("offset", c.attack_template.offset);
    c.attack_template.segment_pool = kv.get_uint("segment_pool", c.attack_template.segment_pool);
    c.attack_template.segment_length = kv.get_uint("segment_length", c.attack_template.segment_length);
    c.volume_rate = kv.get_double("volume_rate", c.volume_rate);
    if (auto d = kv.raw("defences")) {
        c.defences.clear();
        for (const auto& t : split_list(*d)) c.defences.push_back(parse_defence(t));
    }
    c.repetitions = kv.get_uint("repetitions", c.repetitions);
    c.base_seed = kv.get_uint("base_seed", c.base_seed);
    c.bin_width = kv.get_double("bin_width", c.bin_width);
    c.bait.deltas = kv.get_doubles("bait.delta_seconds", c.bait.deltas);
    c.bait.count = kv.get_uint("bait.count", c.bait.count);
    c.bait.flag_threshold = kv.get_double("bait.flag_threshold", c.bait.flag_threshold);
    c.bait.echo_min_support = kv.get_uint("bait.echo_min_support", c.bait.echo_min_support);
    c.bait.max_frozen = kv.get_uint("bait.max_frozen", c.bait.max_frozen);
    c.detection = parse_detection_config(kv);
    c.validate();
    return c;
}

void write_experiment_config(std::ostream& out, const ExperimentConfig& c) {
    const auto join = [](const auto& items, auto fmt) {
        std::string s;
        for (std::size_t k = 0; k < items.size(); ++k) s += (k ? "," : "") + fmt(items[k]);
        return s;
    };
    const auto name = [](auto v) { return std::string(to_string(v)); };
    out << "sources=" << c.legit.num_sources << "\nrate=" << format_double(c.legit.per_source_rate)
        << "\ndurations=" << join(c.durations, format_double)
        << "\nattacks=" << (c.attack_kinds.empty() ? std::string("none") : join(c.attack_kinds, name))
        << "\nvolumes=" << join(c.volume_classes, name) << "\nvolume_rate=" << format_double(c.volume_rate)
        << "\ninfected_fraction=" << format_double(c.attack_template.infected_fraction)
        << "\njitter_scale=" << format_double(c.attack_template.jitter_scale)
        << "\noffset=" << format_double(c.attack_template.offset)
        << "\nsegment_pool=" << c.attack_template.segment_pool
        << "\nsegment_length=" << c.attack_template.segment_length << "\ndefences=" << join(c.defences, name)
        << "\nrepetitions=" << c.repetitions << "\nbase_seed=" << c.base_seed
        << "\nbin_width=" << format_double(c.bin_width)
        << "\nbait.delta_seconds=" << join(c.bait.deltas, format_double) << "\nbait.count=" << c.bait.count
        << "\nbait.flag_threshold=" << format_double(c.bait.flag_threshold)
        << "\nbait.echo_min_support=" << c.bait.echo_min_support << "\nbait.max_frozen=" << c.bait.max_frozen
        << '\n';
    write_detection_config(out, c.detection);
}

SynthConfig::SynthConfig() : attack(AttackSpec{}) { attack->seed = legit.seed + 1000; }

void SynthConfig::validate() const {
    legit.validate();
    if (attack) attack->validate();
    if (inject_bait) bait.validate();
    if (!(bin_width > 0.0)) throw InvalidArgument("bin_width must be positive");
}

const std::set<std::string>& synth_config_keys() {
    static const std::set<std::string> keys = {
        "sources",      "rate",           "days",          "window_start",   "seed",
        "attack",       "volume",         "volume_rate",   "infected_fraction", "jitter_scale",
        "offset",       "segment_pool",   "segment_length", "attack_seed",   "bait",
        "bait.delta_seconds", "bait.count", "bait.targets", "bait.seed",     "bin_width"};
    return keys;
}

SynthConfig parse_synth_config(const KeyValueConfig& kv) {
    kv.require_known(synth_config_keys());
    SynthConfig c;
    c.legit.num_sources = kv.get_uint("sources", c.legit.num_sources);
    c.legit.per_source_rate = kv.get_double("rate", c.legit.per_source_rate);
    c.legit.duration_days = kv.get_double("days", c.legit.duration_days);
    c.legit.window_start = kv.get_double("window_start", c.legit.window_start);
    c.legit.seed = kv.get_uint("seed", c.legit.seed);
    const std::string kind = kv.get_string("attack", std::string(to_string(c.attack->kind)));
    if (kind == "none") {
        c.attack.reset();
    } else {
        AttackSpec& a = *c.attack;
        a.kind = parse_attack_kind(kind);
        a.volume_class = parse_volume_class(kv.get_string("volume", std::string(to_string(a.volume_class))));
        const double rate = kv.get_double("volume_rate", 0.0);
        a.spam_per_source_per_day = rate > 0.0 ? rate : default_daily_volume(a.volume_class);
        a.infected_fraction = kv.get_double("infected_fraction", a.infected_fraction);
        a.jitter_scale = kv.get_double("jitter_scale", a.jitter_scale);
        a.offset = kv.get_double("offset", a.offset);
        a.segment_pool = kv.get_uint("segment_pool", a.segment_pool);
        a.segment_length = kv.get_uint("segment_length", a.segment_length);
        a.seed = kv.get_uint("attack_seed", c.legit.seed + 1000);
    }
    c.inject_bait = kv.get_bool("bait", c.inject_bait);
    c.bait.deltas = kv.get_doubles("bait.delta_seconds", c.bait.deltas);
    c.bait.count = kv.get_uint("bait.count", c.bait.count);
    auto targets = kv.get_strings("bait.targets", {"all"});
    if (!(targets.size() == 1 && targets.front() == "all")) c.bait.target_sources = targets;
    c.bait.seed = kv.get_uint("bait.seed", c.bait.seed);
    c.bin_width = kv.get_double("bin_width", c.bin_width);
    c.validate();
    return c;
}

void write_synth_config(std::ostream& out, const SynthConfig& c) {
    out << "sources=" << c.legit.num_sources << "\nrate=" << format_double(c.legit.per_source_rate)
        << "\ndays=" << format_double(c.legit.duration_days)
        << "\nwindow_start=" << format_double(c.legit.window_start) << "\nseed=" << c.legit.seed << '\n';
    if (c.attack) {
        const AttackSpec& a = *c.attack;
        out << "attack=" << to_string(a.kind) << "\nvolume=" << to_string(a.volume_class)
            << "\nvolume_rate=" << format_double(a.spam_per_source_per_day)
            << "\ninfected_fraction=" << format_double(a.infected_fraction)
            << "\njitter_scale=" << format_double(a.jitter_scale) << "\noffset=" << format_double(a.offset)
            << "\nsegment_pool=" << a.segment_pool << "\nsegment_length=" << a.segment_length
            << "\nattack_seed=" << a.seed << '\n';
    } else {
        out << "attack=none\n";
    }
    out << "bait=" << (c.inject_bait ? 1 : 0) << "\nbait.delta_seconds=";
    for (std::size_t k = 0; k < c.bait.deltas.size(); ++k) out << (k ? "," : "") << format_double(c.bait.deltas[k]);
    out << "\nbait.count=" << c.bait.count << "\nbait.targets=";
    if (c.bait.target_sources.empty()) out << "all";
    for (std::size_t k = 0; k < c.bait.target_sources.size(); ++k) out << (k ? "," : "") << c.bait.target_sources[k];
    out << "\nbait.seed=" << c.bait.seed << "\nbin_width=" << format_double(c.bin_width) << '\n';
}

LabeledClickSet synthesize(const SynthConfig& config) {
    config.validate();
    const auto& lm = config.legit;
    LabeledClickSet stream = gen_legitimate(lm);
    if (config.inject_bait) {
        BaitConfig bait = config.bait;
        const TimeBinConfig bins = TimeBinConfig::for_days(lm.duration_days, lm.window_start, config.bin_width);
        schedule_bait(bait, distinct_sources(stream.clicks), bins);
        stream = inject_bait(stream, bait);
    }
    if (config.attack) {
        const AttackSpec& a = *config.attack;
        LabeledClickSet spam;
        if (a.kind == AttackKind::Replay || a.kind == AttackKind::RandomizedReplay)
            spam = gen_organic_replay(stream, a, lm.window_start, lm.duration_days);
        else
            spam = gen_inorganic(a, distinct_sources(stream.clicks), lm.duration_days, lm.window_start);
        stream = superimpose(stream, spam);
    }
    return stream;
}

TimeBinConfig infer_time_bins(std::span<const ClickEvent> clicks, double bin_width) {
    if (!(bin_width > 0.0)) throw InvalidArgument("bin_width must be positive");
    if (clicks.empty()) throw DataError("cannot infer a time window from an empty clickstream");
    double lo = clicks.front().timestamp;
    double hi = lo;
    for (const auto& c : clicks) {
        lo = std::min(lo, c.timestamp);
        hi = std::max(hi, c.timestamp);
    }
    const double start = std::floor(lo / kSecondsPerDay) * kSecondsPerDay;
    const double days = std::max(1.0, std::floor((hi - start) / kSecondsPerDay) + 1.0);
    return TimeBinConfig::for_days(days, start, bin_width);
}

std::size_t ReportRow::succeeded() const {
    return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunOutcome& r) { return r.ok; }));
}

namespace {

template <class F>
std::pair<double, double> mean_std(const std::vector<RunOutcome>& runs, F value) {
    std::vector<double> xs;
    for (const auto& r : runs)
        if (r.ok) xs.push_back(value(r));
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace

double ReportRow::mean_tpr() const { return mean_std(runs, [](const RunOutcome& r) { return r.rates.tpr; }).first; }
double ReportRow::std_tpr() const { return mean_std(runs, [](const RunOutcome& r) { return r.rates.tpr; }).second; }
double ReportRow::mean_fpr() const { return mean_std(runs, [](const RunOutcome& r) { return r.rates.fpr; }).first; }
double ReportRow::std_fpr() const { return mean_std(runs, [](const RunOutcome& r) { return r.rates.fpr; }).second; }
std::size_t ReportRow::nonconverged() const {
    return static_cast<std::size_t>(
        std::count_if(runs.begin(), runs.end(), [](const RunOutcome& r) { return r.ok && !r.converged; }));
}

RunOutcome run_single(const ExperimentConfig& config, double duration, const AttackSpec* attack,
                      Defence defence, std::size_t repetition) {
    RunOutcome out;
    out.seed = config.base_seed + repetition;
    const bool with_bait = std::find(config.defences.begin(), config.defences.end(), Defence::Bait) !=
                           config.defences.end();
    std::string stage = "synthesis";
    try {
        LegitModel lm = config.legit;
        lm.duration_days = duration;
        lm.seed = out.seed;
        const TimeBinConfig bins = TimeBinConfig::for_days(duration, lm.window_start, config.bin_width);

        LabeledClickSet stream = gen_legitimate(lm);
        BaitConfig bait = config.bait;
        if (with_bait) {
            stage = "bait injection";
            bait.seed = out.seed + 2000;
            const auto sources = distinct_sources(stream.clicks);
            schedule_bait(bait, sources, bins);
            stream = inject_bait(stream, bait);
        }
        if (attack != nullptr) {
            stage = "attack synthesis";
            AttackSpec spec = *attack;
            spec.seed = out.seed + 1000;
            LabeledClickSet spam;
            if (spec.kind == AttackKind::Replay || spec.kind == AttackKind::RandomizedReplay)
                spam = gen_organic_replay(stream, spec, lm.window_start, duration);
            else
                spam = gen_inorganic(spec, distinct_sources(stream.clicks), duration, lm.window_start);
            stream = superimpose(stream, spam);
        }
        if (with_bait) stream = strip_bait(stream, bait);
        out.clicks = stream.clicks.size();

        stage = "detection";
        DetectionConfig dc = config.detection;
        dc.factorization.seed = out.seed;
        std::vector<Label> predicted;
        if (defence == Defence::Passive) {
            auto r = detect_passive(stream.clicks, bins, dc);
            out.converged = r.factors.converged();
            predicted = std::move(r.verdicts.click_labels);
        } else {
            auto r = detect_active(stream.clicks, bins, dc, bait);
            out.converged = r.passive.factors.converged() && r.bait.factors.converged();
            predicted = std::move(r.click_labels);
        }

        stage = "scoring";
        std::vector<Label> truth;
        truth.reserve(stream.clicks.size());
        for (const auto& c : stream.clicks) truth.push_back(c.label);
        out.rates = compute_rates(truth, predicted);
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = stage + ": " + e.what();
    }
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentReport report;
    report.has_attacks = !config.attack_kinds.empty();

    std::vector<std::optional<AttackSpec>> cells;
    if (config.attack_kinds.empty()) {
        cells.emplace_back(std::nullopt);
    } else {
        for (auto kind : config.attack_kinds)
            for (auto vol : config.volume_classes) {
                AttackSpec s = config.attack_template;
                s.kind = kind;
                s.volume_class = vol;
                s.spam_per_source_per_day =
                    config.volume_rate > 0.0 ? config.volume_rate : default_daily_volume(vol);
                cells.emplace_back(s);
            }
    }

    for (double duration : config.durations)
        for (const auto& cell : cells)
            for (auto defence : config.defences) {
                ReportRow row;
                row.duration_days = duration;
                row.attack = cell ? std::string(to_string(cell->kind)) : "none";
                row.volume = cell ? std::string(to_string(cell->volume_class)) : "none";
                row.defence = defence;
                for (std::size_t rep = 0; rep < config.repetitions; ++rep)
                    row.runs.push_back(run_single(config, duration, cell ? &*cell : nullptr, defence, rep));
                report.rows.push_back(std::move(row));
            }
    return report;
}

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    return out;
}

}  // namespace

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "report.csv");
        out << "duration_days,attack,volume,defence,runs,failed,nonconverged,fpr_mean,fpr_std";
        if (report.has_attacks) out << ",tpr_mean,tpr_std";
        out << '\n';
        for (const auto& r : report.rows) {
            out << format_double(r.duration_days) << ',' << r.attack << ',' << r.volume << ','
                << to_string(r.defence) << ',' << r.runs.size() << ',' << r.runs.size() - r.succeeded()
                << ',' << r.nonconverged() << ',' << fixed(r.mean_fpr(), 6) << ',' << fixed(r.std_fpr(), 6);
            if (report.has_attacks) out << ',' << fixed(r.mean_tpr(), 6) << ',' << fixed(r.std_tpr(), 6);
            out << '\n';
        }
    }
    {
        auto out = open_out(dir / "runs.csv");
        out << "duration_days,attack,volume,defence,seed,ok,converged,clicks,legit,spam,false_positives,"
               "true_positives,fpr,tpr,error\n";
        for (const auto& r : report.rows)
            for (const auto& run : r.runs) {
                std::string err = run.error;
                std::replace(err.begin(), err.end(), ',', ';');
                std::replace(err.begin(), err.end(), '\n', ' ');
                out << format_double(r.duration_days) << ',' << r.attack << ',' << r.volume << ','
                    << to_string(r.defence) << ',' << run.seed << ',' << (run.ok ? 1 : 0) << ','
                    << (run.converged ? 1 : 0) << ',' << run.clicks << ',' << run.rates.legit << ','
                    << run.rates.spam << ',' << run.rates.false_positives << ','
                    << run.rates.true_positives << ',' << fixed(run.rates.fpr, 6) << ','
                    << fixed(run.rates.tpr, 6) << ',' << err << '\n';
            }
    }
    {
        auto out = open_out(dir / "report.txt");
        out << "Detection and error rates (mean +/- sample std over repetitions, percent)\n\n";
        char line[256];
        std::snprintf(line, sizeof line, "%-6s %-18s %-9s %-8s %5s  %-19s %-19s\n", "days", "attack",
                      "volume", "defence", "runs", "TPR %", "FPR %");
        out << line;
        for (const auto& r : report.rows) {
            const std::string tpr = report.has_attacks
                                        ? fixed(100 * r.mean_tpr(), 2) + " +/- " + fixed(100 * r.std_tpr(), 2)
                                        : "-";
            const std::string fpr = fixed(100 * r.mean_fpr(), 3) + " +/- " + fixed(100 * r.std_fpr(), 3);
            std::snprintf(line, sizeof line, "%-6s %-18s %-9s %-8s %5zu  %-19s %-19s\n",
                          format_double(r.duration_days).c_str(), r.attack.c_str(), r.volume.c_str(),
                          std::string(to_string(r.defence)).c_str(), r.succeeded(), tpr.c_str(),
                          fpr.c_str());
            out << line;
            if (r.succeeded() < r.runs.size()) out << "       " << r.runs.size() - r.succeeded() << " run(s) failed; see runs.csv\n";
            if (r.nonconverged() > 0)
                out << "       " << r.nonconverged() << " run(s) hit the iteration cap before the stopping threshold\n";
        }
    }
}

IngestResult ingest_clickstream(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open clickstream '" + path.string() + "'");
    return read_clickstream(in);
}

}  // namespace clickguard
