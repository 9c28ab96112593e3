#pragma once

#include "clickguard/clickstream.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace clickguard {

struct LegitModel {
    double per_source_rate = 10.0;  // clicks per source per day
    std::size_t num_sources = 100;
    double duration_days = 7.0;
    double window_start = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
};

enum class AttackKind { Replay, RandomizedReplay, RandomGen, ConstantOffset };
enum class VolumeClass { Stealth, Sparse, Firehose };

[[nodiscard]] std::string_view to_string(AttackKind kind);
[[nodiscard]] std::string_view to_string(VolumeClass volume);
[[nodiscard]] AttackKind parse_attack_kind(std::string_view token);
[[nodiscard]] VolumeClass parse_volume_class(std::string_view token);

/// Inclusive daily range of spam clicks per infected source for a class.
/// Firehose has no upper bound (reported as SIZE_MAX).
[[nodiscard]] std::pair<std::size_t, std::size_t> volume_range(VolumeClass volume);
/// Mean daily volume used when a config names only the class.
[[nodiscard]] double default_daily_volume(VolumeClass volume);

struct AttackSpec {
    AttackKind kind = AttackKind::Replay;
    VolumeClass volume_class = VolumeClass::Sparse;
    double spam_per_source_per_day = 10.0;
    double jitter_scale = 600.0;  // seconds, RandomizedReplay
    double offset = 600.0;        // seconds, ConstantOffset
    double infected_fraction = 0.2;
    std::uint64_t seed = 1;
    // Replay campaigns draw each day's segments from a shared pool, so the
    // same timing segment reaches several infected sources.
    std::size_t segment_pool = 8;
    std::size_t segment_length = 4;

    void validate() const;
};

using Provenance = std::vector<std::pair<std::string, std::string>>;

struct LabeledClickSet {
    std::vector<ClickEvent> clicks;  // ascending timestamps
    Provenance provenance;
};

[[nodiscard]] LabeledClickSet gen_legitimate(const LegitModel& model);

/// Replays segments of `legit` (every click in it is eligible, bait included)
/// onto a random subset of its sources inside [window_start, window_start + days).
[[nodiscard]] LabeledClickSet gen_organic_replay(const LabeledClickSet& legit, const AttackSpec& spec,
                                                 double window_start, double duration_days);

[[nodiscard]] LabeledClickSet gen_inorganic(const AttackSpec& spec,
                                            std::span<const std::string> sources,
                                            double duration_days, double window_start);

[[nodiscard]] LabeledClickSet superimpose(const LabeledClickSet& a, const LabeledClickSet& b);

/// Sorted distinct source ids of a click list.
[[nodiscard]] std::vector<std::string> distinct_sources(std::span<const ClickEvent> clicks);

/// key=value lines, one per provenance entry.
void write_provenance(std::ostream& out, const Provenance& provenance);

}  // namespace clickguard
