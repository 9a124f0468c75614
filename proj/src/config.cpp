#include "kitwpa/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "kitwpa/errors.hpp"
#include "kitwpa/units.hpp"

namespace kitwpa {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct Unit {
    const char* suffix;
    double scale;
};

const std::vector<std::pair<Dimension, std::vector<Unit>>>& unit_table() {
    static const std::vector<std::pair<Dimension, std::vector<Unit>>> table = {
        {Dimension::frequency, {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}}},
        {Dimension::length, {{"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}, {"um", 1e-6}, {"\xc2\xb5m", 1e-6}, {"nm", 1e-9}}},
        {Dimension::current, {{"A", 1.0}, {"mA", 1e-3}, {"uA", 1e-6}, {"\xc2\xb5" "A", 1e-6}, {"nA", 1e-9}}},
        {Dimension::power, {{"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}, {"\xc2\xb5W", 1e-6}, {"nW", 1e-9}, {"pW", 1e-12}}},
        {Dimension::temperature, {{"K", 1.0}, {"mK", 1e-3}}},
        {Dimension::impedance, {{"ohm", 1.0}, {"Ohm", 1.0}}},
        {Dimension::velocity, {{"m/s", 1.0}, {"c", constants::c0}}},
    };
    return table;
}

}  // namespace

double parse_quantity(const std::string& raw, Dimension dim) {
    const std::string text = trim(raw);
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    double value = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc()) throw ConfigError("expected a number in '" + text + "'");
    const std::string suffix = trim(std::string(ptr, end));
    if (suffix.empty()) return value;
    if (dim == Dimension::power && suffix == "dBm") return dbm_to_watt(value);
    for (const auto& [d, units] : unit_table()) {
        if (d != dim) continue;
        for (const auto& u : units)
            if (suffix == u.suffix) return value * u.scale;
    }
    throw ConfigError("unit '" + suffix + "' is not valid in '" + text + "'");
}

Config Config::parse(const std::string& text) {
    Config cfg;
    cfg.text_ = text;
    cfg.values_[""];
    std::istringstream in(text);
    std::string line, section;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(number) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("line " + std::to_string(number) + ": empty section name");
            cfg.values_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
        auto& sec = cfg.values_[section];
        if (sec.count(key)) throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
        sec[key] = value;
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool Config::has_section(const std::string& section) const { return values_.count(section) > 0; }

std::vector<std::string> Config::sections() const {
    std::vector<std::string> names;
    for (const auto& [name, keys] : values_) names.push_back(name);
    return names;
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto it = values_.find(section);
    return it != values_.end() && it->second.count(key) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    if (!has(section, key)) throw ConfigError("missing key '" + key + "' in section [" + section + "]");
    return values_.at(section).at(key);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return has(section, key) ? values_.at(section).at(key) : fallback;
}

double Config::get(const std::string& section, const std::string& key, Dimension dim) const {
    try {
        return parse_quantity(get_string(section, key), dim);
    } catch (const ConfigError& e) {
        throw ConfigError("[" + section + "] " + key + ": " + e.what());
    }
}

double Config::get(const std::string& section, const std::string& key, Dimension dim, double fallback) const {
    return has(section, key) ? get(section, key, dim) : fallback;
}

std::optional<double> Config::find(const std::string& section, const std::string& key, Dimension dim) const {
    if (!has(section, key)) return std::nullopt;
    return get(section, key, dim);
}

long long Config::get_int(const std::string& section, const std::string& key, long long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string s = get_string(section, key);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError("[" + section + "] " + key + ": expected an integer, got '" + s + "'");
    return v;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string s = get_string(section, key);
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw ConfigError("[" + section + "] " + key + ": expected a boolean, got '" + s + "'");
}

void Config::require_known(const std::string& section, const std::set<std::string>& allowed) const {
    const auto it = values_.find(section);
    if (it == values_.end()) return;
    for (const auto& [key, value] : it->second)
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
}

void Config::require_section(const std::string& section) const {
    if (!has_section(section)) throw ConfigError("missing section [" + section + "]");
}

}  // namespace kitwpa
