#pragma once

#include "clickguard/matrix.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clickguard {

enum class Label { Legit, OrganicSpam, InorganicSpam, Bait, Unknown };

/// CSV token: legit|organic|inorganic|bait|unknown
[[nodiscard]] std::string_view to_string(Label label);
[[nodiscard]] std::optional<Label> parse_label(std::string_view token);
[[nodiscard]] inline bool is_spam(Label label) {
    return label == Label::OrganicSpam || label == Label::InorganicSpam;
}

struct ClickEvent {
    double timestamp = 0.0;  // seconds since epoch
    std::string source;
    std::string ad_url;
    std::string referrer_url;
    std::string user_agent;
    Label label = Label::Unknown;

    friend bool operator==(const ClickEvent&, const ClickEvent&) = default;
};

inline constexpr double kSecondsPerDay = 86400.0;

/// Half-open bins [window_start + j*bin_width, window_start + (j+1)*bin_width).
struct TimeBinConfig {
    double bin_width = 300.0;
    double window_start = 0.0;
    std::size_t num_bins = 288;

    /// Window of `days` whole days starting at `start`.
    [[nodiscard]] static TimeBinConfig for_days(double days, double start = 0.0,
                                                double bin_width = 300.0);
    [[nodiscard]] double window_end() const noexcept {
        return window_start + bin_width * static_cast<double>(num_bins);
    }
    [[nodiscard]] double bin_start(std::size_t j) const noexcept {
        return window_start + bin_width * static_cast<double>(j);
    }
    void validate() const;
};

/// floor((t - window_start) / bin_width) when it lies in [0, num_bins).
[[nodiscard]] std::optional<std::size_t> bin_index(double timestamp, const TimeBinConfig& config);

struct TrafficMatrix {
    Matrix counts;                     // sources x bins, integral values
    std::vector<std::string> sources;  // row order = first appearance
    TimeBinConfig bins;
    std::size_t discarded = 0;         // clicks outside the window

    [[nodiscard]] std::size_t num_sources() const noexcept { return counts.rows(); }
    [[nodiscard]] std::size_t num_bins() const noexcept { return counts.cols(); }
    [[nodiscard]] std::optional<std::size_t> row_of(std::string_view source) const;
};

[[nodiscard]] TrafficMatrix build_traffic_matrix(std::span<const ClickEvent> clicks,
                                                 const TimeBinConfig& config);

/// Consecutive differences of ascending timestamps; throws InvalidArgument when unsorted.
[[nodiscard]] std::vector<double> interclick_times(std::span<const double> sorted_timestamps);
[[nodiscard]] std::vector<double> interclick_times(std::span<const ClickEvent> sorted_clicks);

struct ParseIssue {
    std::size_t line = 0;  // 1-based, header is line 1
    std::string message;
};

struct IngestResult {
    std::vector<ClickEvent> events;
    std::vector<ParseIssue> errors;
};

/// Reads the clickstream CSV. A missing or wrong header throws DataError; bad
/// records are skipped and reported with their line number.
[[nodiscard]] IngestResult read_clickstream(std::istream& in);
void write_clickstream(std::ostream& out, std::span<const ClickEvent> clicks);

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

}  // namespace clickguard
