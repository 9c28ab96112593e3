#pragma once

#include "clickguard/bait.hpp"
#include "clickguard/clickstream.hpp"
#include "clickguard/config.hpp"
#include "clickguard/isolation.hpp"
#include "clickguard/nmf.hpp"
#include "clickguard/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace clickguard {

/// Everything the passive detector needs besides the clicks.
struct DetectionConfig {
    FactorizationConfig factorization = default_detection_factorization();
    double repeat_threshold = 2.0;
    double similarity_threshold = 0.9;
    std::size_t cluster_cap = 0;
    ClassifyOptions classify;
    VerdictOptions verdict;

    [[nodiscard]] static FactorizationConfig default_detection_factorization();
};

/// Reads detection keys (see the CLI help for the list) on top of defaults.
[[nodiscard]] DetectionConfig parse_detection_config(const KeyValueConfig& kv);
void write_detection_config(std::ostream& out, const DetectionConfig& config);
[[nodiscard]] const std::set<std::string>& detection_config_keys();

struct PassiveResult {
    TrafficMatrix matrix;
    MultiLayerFactorization factors;
    OrganicReport organic;
    Clustering clustering;  // classified
    ClickVerdicts verdicts;
};

[[nodiscard]] PassiveResult detect_passive(std::span<const ClickEvent> clicks,
                                           const TimeBinConfig& bins, const DetectionConfig& config);

struct ActiveResult {
    PassiveResult passive;
    BaitDetection bait;
    std::vector<Label> click_labels;  // passive verdicts plus bait-echo clicks of flagged sources
};

/// `clicks` must already be free of the network's own bait clicks.
[[nodiscard]] ActiveResult detect_active(std::span<const ClickEvent> clicks, const TimeBinConfig& bins,
                                         const DetectionConfig& config, const BaitConfig& bait);

struct Rates {
    double fpr = 0.0;
    double tpr = 0.0;
    std::size_t legit = 0;
    std::size_t spam = 0;
    std::size_t false_positives = 0;
    std::size_t true_positives = 0;
    std::size_t organic = 0;
    std::size_t organic_detected = 0;
    std::size_t inorganic = 0;
    std::size_t inorganic_detected = 0;
    bool no_legit_warning = false;
    bool no_spam_warning = false;
};

/// Bait and Unknown truth labels are skipped entirely.
[[nodiscard]] Rates compute_rates(std::span<const Label> truth, std::span<const Label> predicted);

enum class Defence { Passive, Bait };
[[nodiscard]] std::string_view to_string(Defence d);
[[nodiscard]] Defence parse_defence(std::string_view token);

struct ExperimentConfig {
    LegitModel legit;                     // seed is replaced per repetition
    std::vector<double> durations = {7.0};
    std::vector<AttackKind> attack_kinds = {AttackKind::Replay};
    std::vector<VolumeClass> volume_classes = {VolumeClass::Stealth, VolumeClass::Sparse,
                                               VolumeClass::Firehose};
    AttackSpec attack_template;           // kind/class/volume/seed filled per cell
    double volume_rate = 0.0;             // spam per source per day; 0 = class default
    std::vector<Defence> defences = {Defence::Passive};
    DetectionConfig detection;
    BaitConfig bait;
    std::size_t repetitions = 10;
    std::uint64_t base_seed = 1;
    double bin_width = 300.0;

    void validate() const;
};

/// Writes every experiment key with its current value (the defaults when
/// given a default-constructed config).
void write_experiment_config(std::ostream& out, const ExperimentConfig& config);

/// Keys: sources, rate, durations, attacks, volumes, infected_fraction,
/// jitter_scale, offset, segment_pool, segment_length, defences, repetitions,
/// base_seed, bin_width, bait.* keys and every detection key.
[[nodiscard]] ExperimentConfig parse_experiment_config(const KeyValueConfig& kv);
[[nodiscard]] const std::set<std::string>& experiment_config_keys();

struct RunOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;  // stage and message when !ok
    Rates rates;
    bool converged = true;
    std::size_t clicks = 0;
};

struct ReportRow {
    double duration_days = 0.0;
    std::string attack;  // kind name or "none"
    std::string volume;  // class name or "none"
    Defence defence = Defence::Passive;
    std::vector<RunOutcome> runs;

    [[nodiscard]] std::size_t succeeded() const;
    [[nodiscard]] double mean_tpr() const;
    [[nodiscard]] double std_tpr() const;
    [[nodiscard]] double mean_fpr() const;
    [[nodiscard]] double std_fpr() const;
    [[nodiscard]] std::size_t nonconverged() const;
};

struct ExperimentReport {
    bool has_attacks = true;
    std::vector<ReportRow> rows;
};

/// One repetition of one sweep cell; never throws, failures land in the outcome.
[[nodiscard]] RunOutcome run_single(const ExperimentConfig& config, double duration, const AttackSpec* attack,
                                    Defence defence, std::size_t repetition);

[[nodiscard]] ExperimentReport run_experiment(const ExperimentConfig& config);

/// report.csv, report.txt and runs.csv under `dir`.
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);

/// One synthetic clickstream: legitimate traffic, optional bait injection and
/// at most one attack laid on top. Bait clicks stay in the output, labelled,
/// so an attacker replaying traffic harvests them like any other click.
struct SynthConfig {
    LegitModel legit;
    std::optional<AttackSpec> attack;  // default: a sparse replay campaign
    bool inject_bait = false;
    BaitConfig bait;
    double bin_width = 300.0;

    SynthConfig();
    void validate() const;
};

[[nodiscard]] SynthConfig parse_synth_config(const KeyValueConfig& kv);
void write_synth_config(std::ostream& out, const SynthConfig& config);
[[nodiscard]] const std::set<std::string>& synth_config_keys();
[[nodiscard]] LabeledClickSet synthesize(const SynthConfig& config);

/// Whole-day window covering every click: starts at the day boundary at or
/// below the earliest timestamp, ends past the latest.
[[nodiscard]] TimeBinConfig infer_time_bins(std::span<const ClickEvent> clicks, double bin_width = 300.0);

/// Reads a clickstream file; throws DataError when it cannot be opened or the
/// header is wrong. Bad records are listed in the result's error report.
[[nodiscard]] IngestResult ingest_clickstream(const std::filesystem::path& path);

}  // namespace clickguard
