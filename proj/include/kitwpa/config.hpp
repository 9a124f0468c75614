#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace kitwpa {

enum class Dimension { none, frequency, length, current, power, temperature, impedance, velocity };

/// Parses "1.6 GHz", "120 um", "-34.8 dBm", "10 mK" and similar into SI.
/// A bare number is taken as SI already. Power accepts W prefixes and dBm.
/// Velocity accepts m/s or a multiple of c ("0.0064 c").
double parse_quantity(const std::string& text, Dimension dim);

/// Sectioned `key = value` text. Keys before the first section header live
/// in the unnamed root section "". `#` and `;` start comments.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    [[nodiscard]] bool has_section(const std::string& section) const;
    [[nodiscard]] bool has(const std::string& section, const std::string& key) const;
    [[nodiscard]] std::string text() const { return text_; }
    /// Section names in sorted order; the root section is "".
    [[nodiscard]] std::vector<std::string> sections() const;

    [[nodiscard]] std::string get_string(const std::string& section, const std::string& key) const;
    [[nodiscard]] std::string get_string(const std::string& section, const std::string& key,
                                         const std::string& fallback) const;
    [[nodiscard]] double get(const std::string& section, const std::string& key, Dimension dim) const;
    [[nodiscard]] double get(const std::string& section, const std::string& key, Dimension dim,
                             double fallback) const;
    [[nodiscard]] std::optional<double> find(const std::string& section, const std::string& key,
                                             Dimension dim) const;
    [[nodiscard]] long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    [[nodiscard]] bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    /// Throws ConfigError naming the first key of `section` not in `allowed`.
    void require_known(const std::string& section, const std::set<std::string>& allowed) const;
    void require_section(const std::string& section) const;

private:
    std::map<std::string, std::map<std::string, std::string>> values_;
    std::string text_;
};

}  // namespace kitwpa
