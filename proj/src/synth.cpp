#include "clickguard/synth.hpp"

#include "clickguard/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

namespace clickguard {

namespace {

constexpr std::array<std::string_view, 4> kUserAgents = {
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64)",
    "Mozilla/5.0 (Macintosh; Intel Mac OS X 13_4)",
    "Mozilla/5.0 (X11; Linux x86_64)",
    "Mozilla/5.0 (Linux; Android 13; Pixel 7)",
};

std::string source_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "src-%04zu", i);
    return buf;
}

void sort_clicks(std::vector<ClickEvent>& clicks) {
    std::stable_sort(clicks.begin(), clicks.end(), [](const ClickEvent& a, const ClickEvent& b) {
        return a.timestamp < b.timestamp;
    });
}

std::size_t daily_volume(const AttackSpec& spec, std::mt19937_64& rng) {
    auto [lo, hi] = volume_range(spec.volume_class);
    std::poisson_distribution<long long> draw(spec.spam_per_source_per_day);
    auto k = static_cast<std::size_t>(std::max<long long>(0, draw(rng)));
    return std::clamp(k, lo, hi);
}

std::vector<std::string> pick_infected(std::span<const std::string> sources, double fraction,
                                       std::mt19937_64& rng) {
    const auto want = static_cast<std::size_t>(
        std::lround(fraction * static_cast<double>(sources.size())));
    std::vector<std::size_t> idx(sources.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(want, idx.size()));
    std::sort(idx.begin(), idx.end());
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(sources[i]);
    return out;
}

void add_spec_provenance(Provenance& p, const AttackSpec& spec) {
    p.emplace_back("attack.kind", std::string(to_string(spec.kind)));
    p.emplace_back("attack.volume_class", std::string(to_string(spec.volume_class)));
    p.emplace_back("attack.spam_per_source_per_day", format_double(spec.spam_per_source_per_day));
    p.emplace_back("attack.jitter_scale", format_double(spec.jitter_scale));
    p.emplace_back("attack.offset", format_double(spec.offset));
    p.emplace_back("attack.infected_fraction", format_double(spec.infected_fraction));
    p.emplace_back("attack.segment_pool", std::to_string(spec.segment_pool));
    p.emplace_back("attack.segment_length", std::to_string(spec.segment_length));
    p.emplace_back("attack.seed", std::to_string(spec.seed));
}

}  // namespace

void LegitModel::validate() const {
    if (!(per_source_rate > 0.0)) throw InvalidArgument("per_source_rate must be positive");
    if (num_sources == 0) throw InvalidArgument("num_sources must be positive");
    if (!(duration_days > 0.0)) throw InvalidArgument("duration_days must be positive");
    if (window_start < 0.0) throw InvalidArgument("window_start must be non-negative");
}

std::string_view to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::Replay: return "replay";
        case AttackKind::RandomizedReplay: return "randomized_replay";
        case AttackKind::RandomGen: return "random_gen";
        case AttackKind::ConstantOffset: return "constant_offset";
    }
    return "replay";
}

std::string_view to_string(VolumeClass volume) {
    switch (volume) {
        case VolumeClass::Stealth: return "stealth";
        case VolumeClass::Sparse: return "sparse";
        case VolumeClass::Firehose: return "firehose";
    }
    return "sparse";
}

AttackKind parse_attack_kind(std::string_view token) {
    for (auto k : {AttackKind::Replay, AttackKind::RandomizedReplay, AttackKind::RandomGen,
                   AttackKind::ConstantOffset})
        if (token == to_string(k)) return k;
    throw InvalidArgument("unknown attack kind '" + std::string(token) + "'");
}

VolumeClass parse_volume_class(std::string_view token) {
    for (auto v : {VolumeClass::Stealth, VolumeClass::Sparse, VolumeClass::Firehose})
        if (token == to_string(v)) return v;
    throw InvalidArgument("unknown volume class '" + std::string(token) + "'");
}

std::pair<std::size_t, std::size_t> volume_range(VolumeClass volume) {
    switch (volume) {
        case VolumeClass::Stealth: return {1, 4};
        case VolumeClass::Sparse: return {5, 15};
        case VolumeClass::Firehose: return {16, std::numeric_limits<std::size_t>::max()};
    }
    return {1, 4};
}

double default_daily_volume(VolumeClass volume) {
    switch (volume) {
        case VolumeClass::Stealth: return 2.5;
        case VolumeClass::Sparse: return 10.0;
        case VolumeClass::Firehose: return 25.0;
    }
    return 10.0;
}

void AttackSpec::validate() const {
    const double v = spam_per_source_per_day;
    const bool in_class = (volume_class == VolumeClass::Stealth && v >= 1.0 && v <= 4.0) ||
                          (volume_class == VolumeClass::Sparse && v >= 5.0 && v <= 15.0) ||
                          (volume_class == VolumeClass::Firehose && v > 15.0);
    if (!in_class)
        throw InvalidArgument("spam_per_source_per_day " + format_double(v) +
                              " is outside the " + std::string(to_string(volume_class)) +
                              " range");
    if (!(infected_fraction > 0.0 && infected_fraction <= 1.0))
        throw InvalidArgument("infected_fraction must lie in (0, 1]");
    if (jitter_scale < 0.0) throw InvalidArgument("jitter_scale must be non-negative");
    if (kind == AttackKind::ConstantOffset && !(offset > 0.0))
        throw InvalidArgument("constant offset must be positive");
    if (segment_pool == 0 || segment_length == 0)
        throw InvalidArgument("segment_pool and segment_length must be positive");
}

LabeledClickSet gen_legitimate(const LegitModel& model) {
    model.validate();
    std::mt19937_64 rng(model.seed);
    const double span = model.duration_days * kSecondsPerDay;
    std::poisson_distribution<long long> count(model.per_source_rate * model.duration_days);
    std::uniform_real_distribution<double> when(0.0, span);
    std::uniform_int_distribution<std::size_t> ad(1, 40);
    std::uniform_int_distribution<std::size_t> publisher(1, 25);
    std::uniform_int_distribution<std::size_t> agent(0, kUserAgents.size() - 1);

    LabeledClickSet out;
    for (std::size_t i = 0; i < model.num_sources; ++i) {
        const std::string src = source_name(i);
        const std::string ua(kUserAgents[agent(rng)]);
        const auto k = count(rng);
        for (long long c = 0; c < k; ++c) {
            ClickEvent ev;
            ev.timestamp = model.window_start + when(rng);
            ev.source = src;
            ev.ad_url = "https://ads.example.net/c/" + std::to_string(ad(rng));
            ev.referrer_url = "https://pub" + std::to_string(publisher(rng)) + ".example.org/";
            ev.user_agent = ua;
            ev.label = Label::Legit;
            out.clicks.push_back(std::move(ev));
        }
    }
    sort_clicks(out.clicks);
    out.provenance = {
        {"legit.per_source_rate", format_double(model.per_source_rate)},
        {"legit.num_sources", std::to_string(model.num_sources)},
        {"legit.duration_days", format_double(model.duration_days)},
        {"legit.window_start", format_double(model.window_start)},
        {"legit.seed", std::to_string(model.seed)},
    };
    return out;
}

LabeledClickSet gen_organic_replay(const LabeledClickSet& legit, const AttackSpec& spec,
                                   double window_start, double duration_days) {
    if (spec.kind != AttackKind::Replay && spec.kind != AttackKind::RandomizedReplay)
        throw InvalidArgument("gen_organic_replay needs a Replay or RandomizedReplay spec");
    spec.validate();
    if (legit.clicks.empty()) throw InvalidArgument("gen_organic_replay: empty legitimate input");
    if (!(duration_days > 0.0)) throw InvalidArgument("duration must be positive");

    std::mt19937_64 rng(spec.seed);

    // Per-source click timelines; clicks are already time ordered.
    std::map<std::string, std::vector<const ClickEvent*>> timeline;
    for (const auto& c : legit.clicks) timeline[c.source].push_back(&c);
    for (auto& [_, clicks] : timeline)
        std::stable_sort(clicks.begin(), clicks.end(), [](const ClickEvent* a, const ClickEvent* b) {
            return a->timestamp < b->timestamp;
        });
    std::vector<std::string> sources;
    for (const auto& [s, _] : timeline) sources.push_back(s);
    std::map<std::string, std::string> agent_of;
    for (const auto& [s, clicks] : timeline) agent_of[s] = clicks.front()->user_agent;

    const auto infected = pick_infected(sources, spec.infected_fraction, rng);
    const double window_end = window_start + duration_days * kSecondsPerDay;
    const auto days = static_cast<std::size_t>(std::ceil(duration_days));

    struct Segment {
        std::vector<double> offsets;
        std::vector<const ClickEvent*> donors;
        double start = 0.0;
    };

    std::uniform_int_distribution<std::size_t> pick_source(0, sources.size() - 1);
    std::uniform_real_distribution<double> jitter(-spec.jitter_scale, spec.jitter_scale);

    LabeledClickSet out;
    for (std::size_t d = 0; d < days; ++d) {
        const double day_start = window_start + static_cast<double>(d) * kSecondsPerDay;
        const double day_end = std::min(window_end, day_start + kSecondsPerDay);

        std::vector<Segment> pool;
        for (std::size_t s = 0; s < spec.segment_pool; ++s) {
            Segment seg;
            for (int attempt = 0; attempt < 1000; ++attempt) {
                const auto& clicks = timeline[sources[pick_source(rng)]];
                std::uniform_int_distribution<std::size_t> pick_start(0, clicks.size() - 1);
                const std::size_t a = pick_start(rng);
                const std::size_t len = std::min(spec.segment_length, clicks.size() - a);
                const double t0 = clicks[a]->timestamp;
                if (clicks[a + len - 1]->timestamp - t0 >= kSecondsPerDay / 2) continue;
                seg.offsets.clear();
                seg.donors.clear();
                for (std::size_t k = 0; k < len; ++k) {
                    seg.offsets.push_back(clicks[a + k]->timestamp - t0);
                    seg.donors.push_back(clicks[a + k]);
                }
                break;
            }
            if (seg.offsets.empty()) continue;
            const double latest = std::max(day_start, day_end - seg.offsets.back());
            seg.start = std::uniform_real_distribution<double>(day_start, latest)(rng);
            pool.push_back(std::move(seg));
        }
        if (pool.empty()) continue;

        for (const auto& victim : infected) {
            const std::size_t want = daily_volume(spec, rng);
            std::vector<std::size_t> order(pool.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), rng);
            std::size_t made = 0;
            for (std::size_t o = 0; made < want; ++o) {
                const auto& seg = pool[order[o % order.size()]];
                for (std::size_t k = 0; k < seg.offsets.size() && made < want; ++k, ++made) {
                    double t = seg.start + seg.offsets[k];
                    if (spec.kind == AttackKind::RandomizedReplay && spec.jitter_scale > 0.0)
                        t += jitter(rng);
                    t = std::clamp(t, window_start, std::nextafter(window_end, window_start));
                    ClickEvent ev;
                    ev.timestamp = t;
                    ev.source = victim;
                    ev.ad_url = seg.donors[k]->ad_url;
                    ev.referrer_url = seg.donors[k]->referrer_url;
                    ev.user_agent = agent_of[victim];
                    ev.label = Label::OrganicSpam;
                    out.clicks.push_back(std::move(ev));
                }
            }
        }
    }
    sort_clicks(out.clicks);
    add_spec_provenance(out.provenance, spec);
    out.provenance.emplace_back("attack.window_start", format_double(window_start));
    out.provenance.emplace_back("attack.duration_days", format_double(duration_days));
    out.provenance.emplace_back("attack.infected_count", std::to_string(infected.size()));
    return out;
}

LabeledClickSet gen_inorganic(const AttackSpec& spec, std::span<const std::string> sources,
                              double duration_days, double window_start) {
    if (spec.kind != AttackKind::RandomGen && spec.kind != AttackKind::ConstantOffset)
        throw InvalidArgument("gen_inorganic needs a RandomGen or ConstantOffset spec");
    spec.validate();
    if (!(duration_days > 0.0)) throw InvalidArgument("duration must be positive");

    std::mt19937_64 rng(spec.seed);
    std::vector<std::string> sorted(sources.begin(), sources.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const auto infected = pick_infected(sorted, spec.infected_fraction, rng);

    const double window_end = window_start + duration_days * kSecondsPerDay;
    const auto days = static_cast<std::size_t>(std::ceil(duration_days));
    std::uniform_int_distribution<std::size_t> ad(1, 40);

    LabeledClickSet out;
    auto emit = [&](const std::string& src, double t) {
        ClickEvent ev;
        ev.timestamp = t;
        ev.source = src;
        ev.ad_url = "https://ads.example.net/c/" + std::to_string(ad(rng));
        ev.referrer_url = "https://parked.example.com/";
        ev.user_agent = std::string(kUserAgents[0]);
        ev.label = Label::InorganicSpam;
        out.clicks.push_back(std::move(ev));
    };

    for (std::size_t d = 0; d < days; ++d) {
        const double day_start = window_start + static_cast<double>(d) * kSecondsPerDay;
        const double day_end = std::min(window_end, day_start + kSecondsPerDay);
        if (spec.kind == AttackKind::RandomGen) {
            std::uniform_real_distribution<double> when(day_start, day_end);
            for (const auto& src : infected) {
                const std::size_t k = daily_volume(spec, rng);
                for (std::size_t c = 0; c < k; ++c) emit(src, when(rng));
            }
        } else {
            // The whole botnet follows one schedule per day.
            const double span = spec.offset * 40.0;
            const double latest = std::max(day_start, day_end - span);
            const double start = std::uniform_real_distribution<double>(day_start, latest)(rng);
            for (const auto& src : infected) {
                const std::size_t k = daily_volume(spec, rng);
                for (std::size_t c = 0; c < k; ++c) {
                    const double t = start + static_cast<double>(c) * spec.offset;
                    if (t < window_end) emit(src, t);
                }
            }
        }
    }
    sort_clicks(out.clicks);
    add_spec_provenance(out.provenance, spec);
    out.provenance.emplace_back("attack.window_start", format_double(window_start));
    out.provenance.emplace_back("attack.duration_days", format_double(duration_days));
    out.provenance.emplace_back("attack.infected_count", std::to_string(infected.size()));
    return out;
}

LabeledClickSet superimpose(const LabeledClickSet& a, const LabeledClickSet& b) {
    LabeledClickSet out;
    out.clicks.reserve(a.clicks.size() + b.clicks.size());
    out.clicks.insert(out.clicks.end(), a.clicks.begin(), a.clicks.end());
    out.clicks.insert(out.clicks.end(), b.clicks.begin(), b.clicks.end());
    sort_clicks(out.clicks);
    out.provenance = a.provenance;
    out.provenance.insert(out.provenance.end(), b.provenance.begin(), b.provenance.end());
    return out;
}

std::vector<std::string> distinct_sources(std::span<const ClickEvent> clicks) {
    std::vector<std::string> out;
    for (const auto& c : clicks) out.push_back(c.source);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void write_provenance(std::ostream& out, const Provenance& provenance) {
    for (const auto& [k, v] : provenance) out << k << '=' << v << '\n';
}

}  // namespace clickguard
