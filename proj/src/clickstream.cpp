#include "clickguard/clickstream.hpp"

#include "clickguard/error.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace clickguard {

namespace {

constexpr std::string_view kHeader = "timestamp,source,ad_url,referrer_url,user_agent,label";

bool needs_quoting(std::string_view field) {
    return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

void write_field(std::ostream& out, std::string_view field) {
    if (!needs_quoting(field)) {
        out << field;
        return;
    }
    out << '"';
    for (char c : field) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

// Splits one CSV record; quoted fields may contain commas and doubled quotes.
std::optional<std::vector<std::string>> split_record(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    if (quoted) return std::nullopt;
    return fields;
}

}  // namespace

std::string_view to_string(Label label) {
    switch (label) {
        case Label::Legit: return "legit";
        case Label::OrganicSpam: return "organic";
        case Label::InorganicSpam: return "inorganic";
        case Label::Bait: return "bait";
        case Label::Unknown: return "unknown";
    }
    return "unknown";
}

std::optional<Label> parse_label(std::string_view token) {
    for (Label l : {Label::Legit, Label::OrganicSpam, Label::InorganicSpam, Label::Bait,
                    Label::Unknown})
        if (token == to_string(l)) return l;
    return std::nullopt;
}

TimeBinConfig TimeBinConfig::for_days(double days, double start, double bin_width) {
    if (!(days > 0.0)) throw InvalidArgument("duration must be positive");
    if (!(bin_width > 0.0)) throw InvalidArgument("bin_width must be positive");
    TimeBinConfig cfg;
    cfg.bin_width = bin_width;
    cfg.window_start = start;
    cfg.num_bins = static_cast<std::size_t>(std::ceil(days * kSecondsPerDay / bin_width));
    return cfg;
}

void TimeBinConfig::validate() const {
    if (!(bin_width > 0.0)) throw InvalidArgument("bin_width must be positive");
    if (num_bins == 0) throw InvalidArgument("num_bins must be at least 1");
}

std::optional<std::size_t> bin_index(double timestamp, const TimeBinConfig& config) {
    const double offset = (timestamp - config.window_start) / config.bin_width;
    if (!(offset >= 0.0)) return std::nullopt;
    const double j = std::floor(offset);
    if (j >= static_cast<double>(config.num_bins)) return std::nullopt;
    return static_cast<std::size_t>(j);
}

std::optional<std::size_t> TrafficMatrix::row_of(std::string_view source) const {
    for (std::size_t i = 0; i < sources.size(); ++i)
        if (sources[i] == source) return i;
    return std::nullopt;
}

TrafficMatrix build_traffic_matrix(std::span<const ClickEvent> clicks, const TimeBinConfig& config) {
    config.validate();
    TrafficMatrix tm;
    tm.bins = config;

    std::unordered_map<std::string_view, std::size_t> rows;
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    cells.reserve(clicks.size());
    for (const auto& c : clicks) {
        auto [it, inserted] = rows.try_emplace(c.source, tm.sources.size());
        if (inserted) tm.sources.push_back(c.source);
        if (auto j = bin_index(c.timestamp, config))
            cells.emplace_back(it->second, *j);
        else
            ++tm.discarded;
    }
    tm.counts = Matrix(tm.sources.size(), config.num_bins);
    for (auto [i, j] : cells) tm.counts(i, j) += 1.0;
    return tm;
}

std::vector<double> interclick_times(std::span<const double> ts) {
    std::vector<double> gaps;
    if (ts.size() < 2) return gaps;
    gaps.reserve(ts.size() - 1);
    for (std::size_t i = 1; i < ts.size(); ++i) {
        if (ts[i] < ts[i - 1]) throw InvalidArgument("interclick_times: timestamps not sorted");
        gaps.push_back(ts[i] - ts[i - 1]);
    }
    return gaps;
}

std::vector<double> interclick_times(std::span<const ClickEvent> clicks) {
    std::vector<double> ts;
    ts.reserve(clicks.size());
    for (const auto& c : clicks) ts.push_back(c.timestamp);
    return interclick_times(ts);
}

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

IngestResult read_clickstream(std::istream& in) {
    IngestResult result;
    std::string line;
    if (!std::getline(in, line)) throw DataError("clickstream: missing header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) throw DataError("clickstream: unexpected header '" + line + "'");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_record(line);
        if (!fields) {
            result.errors.push_back({lineno, "unterminated quoted field"});
            continue;
        }
        if (fields->size() != 6) {
            result.errors.push_back(
                {lineno, "expected 6 fields, found " + std::to_string(fields->size())});
            continue;
        }
        auto& f = *fields;
        ClickEvent ev;
        const char* first = f[0].data();
        const char* last = first + f[0].size();
        auto [ptr, ec] = std::from_chars(first, last, ev.timestamp);
        if (ec != std::errc{} || ptr != last || !std::isfinite(ev.timestamp) || ev.timestamp < 0) {
            result.errors.push_back({lineno, "unparseable timestamp '" + f[0] + "'"});
            continue;
        }
        auto label = parse_label(f[5]);
        if (!label) {
            result.errors.push_back({lineno, "unknown label '" + f[5] + "'"});
            continue;
        }
        ev.source = std::move(f[1]);
        ev.ad_url = std::move(f[2]);
        ev.referrer_url = std::move(f[3]);
        ev.user_agent = std::move(f[4]);
        ev.label = *label;
        result.events.push_back(std::move(ev));
    }
    return result;
}

void write_clickstream(std::ostream& out, std::span<const ClickEvent> clicks) {
    out << kHeader << '\n';
    for (const auto& c : clicks) {
        out << format_double(c.timestamp) << ',';
        write_field(out, c.source);
        out << ',';
        write_field(out, c.ad_url);
        out << ',';
        write_field(out, c.referrer_url);
        out << ',';
        write_field(out, c.user_agent);
        out << ',' << to_string(c.label) << '\n';
    }
}

}  // namespace clickguard
