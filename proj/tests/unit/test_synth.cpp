#include "clickguard/error.hpp"
#include "clickguard/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace clickguard;

namespace {

std::string csv_of(const LabeledClickSet& s) {
    std::ostringstream out;
    write_clickstream(out, s.clicks);
    return out.str();
}

LegitModel small_model(std::uint64_t seed = 1) {
    LegitModel m;
    m.num_sources = 40;
    m.duration_days = 3;
    m.seed = seed;
    return m;
}

std::map<std::pair<std::string, long>, std::vector<double>> by_source_day(const LabeledClickSet& s) {
    std::map<std::pair<std::string, long>, std::vector<double>> out;
    for (const auto& c : s.clicks)
        out[{c.source, static_cast<long>(std::floor(c.timestamp / kSecondsPerDay))}].push_back(c.timestamp);
    return out;
}

}  // namespace

TEST_CASE("legitimate traffic volume and determinism") {
    LegitModel m;
    m.seed = 77;
    const auto a = gen_legitimate(m);
    CHECK(std::abs(static_cast<double>(a.clicks.size()) - 7000.0) <= 5 * std::sqrt(7000.0));
    for (const auto& c : a.clicks) CHECK(c.label == Label::Legit);
    for (std::size_t k = 1; k < a.clicks.size(); ++k) CHECK(a.clicks[k - 1].timestamp <= a.clicks[k].timestamp);
    CHECK(csv_of(a) == csv_of(gen_legitimate(m)));

    LegitModel quiet = m;
    quiet.per_source_rate = 1e-9;
    quiet.num_sources = 10;
    quiet.duration_days = 1;
    CHECK(gen_legitimate(quiet).clicks.empty());

    LegitModel bad = m;
    bad.num_sources = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("volume classes") {
    CHECK(volume_range(VolumeClass::Stealth) == std::pair<std::size_t, std::size_t>{1, 4});
    CHECK(volume_range(VolumeClass::Sparse) == std::pair<std::size_t, std::size_t>{5, 15});
    CHECK(volume_range(VolumeClass::Firehose).first == 16);
    AttackSpec s;
    s.volume_class = VolumeClass::Stealth;
    s.spam_per_source_per_day = 20;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    for (auto k : {AttackKind::Replay, AttackKind::RandomizedReplay, AttackKind::RandomGen, AttackKind::ConstantOffset})
        CHECK(parse_attack_kind(to_string(k)) == k);
    CHECK_THROWS_AS((void)parse_volume_class("huge"), InvalidArgument);
}

TEST_CASE("replay reuses legitimate gaps and honours the volume class") {
    const auto legit = gen_legitimate(small_model());
    std::vector<double> legit_gaps;
    for (const auto& [key, ts] : by_source_day(legit))
        for (std::size_t k = 1; k < ts.size(); ++k) legit_gaps.push_back(ts[k] - ts[k - 1]);
    std::map<std::string, std::vector<double>> legit_by_source;
    for (const auto& c : legit.clicks) legit_by_source[c.source].push_back(c.timestamp);

    AttackSpec spec;
    spec.kind = AttackKind::Replay;
    spec.volume_class = VolumeClass::Stealth;
    spec.spam_per_source_per_day = 2.5;
    spec.segment_pool = 1;
    spec.segment_length = 4;
    spec.seed = 5;
    const auto spam = gen_organic_replay(legit, spec, 0.0, 3.0);
    CHECK_FALSE(spam.clicks.empty());
    for (const auto& c : spam.clicks) CHECK(c.label == Label::OrganicSpam);

    // With one segment per day and at most four clicks, each source-day is
    // made of copies of one legitimate segment: every gap is a legitimate gap,
    // apart from zero gaps where a short segment was laid down twice.
    for (const auto& [key, ts] : by_source_day(spam)) {
        CHECK(ts.size() >= 1);
        CHECK(ts.size() <= 4);
        for (std::size_t k = 1; k < ts.size(); ++k) {
            const double g = ts[k] - ts[k - 1];
            if (g == 0.0) continue;
            bool found = false;
            for (const auto& [src, lt] : legit_by_source)
                for (std::size_t q = 1; q < lt.size() && !found; ++q)
                    found = std::abs(lt[q] - lt[q - 1] - g) < 1e-6;
            CHECK(found);
        }
    }
    CHECK(csv_of(spam) == csv_of(gen_organic_replay(legit, spec, 0.0, 3.0)));

    AttackSpec randomized = spec;
    randomized.kind = AttackKind::RandomizedReplay;
    randomized.jitter_scale = 0.0;
    const auto same = gen_organic_replay(legit, randomized, 0.0, 3.0);
    REQUIRE(same.clicks.size() == spam.clicks.size());
    for (std::size_t k = 0; k < spam.clicks.size(); ++k) CHECK(same.clicks[k].timestamp == spam.clicks[k].timestamp);

    CHECK_THROWS_AS((void)gen_organic_replay(LabeledClickSet{}, spec, 0.0, 1.0), InvalidArgument);
    AttackSpec wrong = spec;
    wrong.kind = AttackKind::RandomGen;
    CHECK_THROWS_AS((void)gen_organic_replay(legit, wrong, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("stealth replay volume accounting") {
    LegitModel m;
    m.num_sources = 250;
    m.seed = 3;
    const auto legit = gen_legitimate(m);
    AttackSpec spec;
    spec.volume_class = VolumeClass::Stealth;
    spec.spam_per_source_per_day = 2.0;
    spec.infected_fraction = 0.2;  // 50 sources
    const auto spam = gen_organic_replay(legit, spec, 0.0, 7.0);
    // 50 sources x 7 days x 2 clicks, with Poisson variation clipped to [1, 4].
    CHECK(std::abs(static_cast<double>(spam.clicks.size()) - 700.0) < 5 * std::sqrt(700.0));
    for (const auto& [key, ts] : by_source_day(spam)) {
        CHECK(ts.size() >= 1);
        CHECK(ts.size() <= 4);
    }
}

TEST_CASE("inorganic generators") {
    std::vector<std::string> sources;
    for (int k = 0; k < 20; ++k) sources.push_back("s" + std::to_string(k));

    AttackSpec co;
    co.kind = AttackKind::ConstantOffset;
    co.offset = 600;
    co.volume_class = VolumeClass::Stealth;
    co.spam_per_source_per_day = 3;
    const auto a = gen_inorganic(co, sources, 4.0, 0.0);
    CHECK_FALSE(a.clicks.empty());
    for (const auto& [key, ts] : by_source_day(a)) {
        CHECK(ts.size() <= 4);
        for (std::size_t k = 1; k < ts.size(); ++k) CHECK(ts[k] - ts[k - 1] == doctest::Approx(600.0));
    }
    for (const auto& c : a.clicks) CHECK(c.label == Label::InorganicSpam);

    AttackSpec rg = co;
    rg.kind = AttackKind::RandomGen;
    rg.volume_class = VolumeClass::Sparse;
    rg.spam_per_source_per_day = 10;
    const auto b = gen_inorganic(rg, sources, 2.0, 1000.0);
    for (const auto& c : b.clicks) {
        CHECK(c.timestamp >= 1000.0);
        CHECK(c.timestamp < 1000.0 + 2 * kSecondsPerDay);
    }
    // 4 infected sources, 2 days, about 10 per day each.
    CHECK(std::abs(static_cast<double>(b.clicks.size()) - 80.0) < 5 * std::sqrt(80.0));

    AttackSpec zero = co;
    zero.offset = 0;
    CHECK_THROWS_AS((void)gen_inorganic(zero, sources, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("superimpose merges without dropping anything") {
    const auto legit = gen_legitimate(small_model(2));
    CHECK(csv_of(superimpose(legit, {})) == csv_of(legit));
    AttackSpec co;
    co.kind = AttackKind::ConstantOffset;
    const auto spam = gen_inorganic(co, distinct_sources(legit.clicks), 3.0, 0.0);
    const auto merged = superimpose(legit, spam);
    CHECK(merged.clicks.size() == legit.clicks.size() + spam.clicks.size());
    for (std::size_t k = 1; k < merged.clicks.size(); ++k)
        CHECK(merged.clicks[k - 1].timestamp <= merged.clicks[k].timestamp);
    CHECK(merged.provenance.size() == legit.provenance.size() + spam.provenance.size());

    // Two labels can share one traffic-matrix cell.
    ClickEvent l, s;
    l.timestamp = 10;
    s.timestamp = 20;
    l.source = s.source = "x";
    l.label = Label::Legit;
    s.label = Label::OrganicSpam;
    const auto both = superimpose(LabeledClickSet{{l}, {}}, LabeledClickSet{{s}, {}});
    CHECK(build_traffic_matrix(both.clicks, TimeBinConfig{}).counts(0, 0) == 2.0);
    CHECK(both.clicks[0].label == Label::Legit);
    CHECK(both.clicks[1].label == Label::OrganicSpam);
}
