#pragma once

// key=value config files. Blank lines and lines starting with '#' are
// ignored; whitespace around keys and values is trimmed.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace clickguard {

class KeyValueConfig {
public:
    /// Throws DataError on a line without '=' or a repeated key.
    [[nodiscard]] static KeyValueConfig parse(std::istream& in, const std::string& origin = "config");
    [[nodiscard]] static KeyValueConfig load(const std::string& path);

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] std::optional<std::string> raw(const std::string& key) const;

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] std::vector<double> get_doubles(const std::string& key,
                                                  const std::vector<double>& fallback) const;
    [[nodiscard]] std::vector<std::string> get_strings(const std::string& key,
                                                       const std::vector<std::string>& fallback) const;

    /// Throws DataError naming the first key not in `known`.
    void require_known(const std::set<std::string>& known) const;

    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::string origin_;
    std::map<std::string, std::string> values_;
};

[[nodiscard]] std::vector<std::string> split_list(const std::string& text, char sep = ',');

}  // namespace clickguard
