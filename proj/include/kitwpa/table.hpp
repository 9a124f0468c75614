#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kitwpa {

/// Labeled table: one axis column, named result columns, a status per row
/// and a provenance header written as `#` lines.
struct SweepResult {
    std::string axis_label;
    std::vector<double> axis;
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> columns;
    std::vector<std::string> status;
    std::vector<std::pair<std::string, std::string>> provenance;

    void add_column(std::string name, std::vector<double> values);
    [[nodiscard]] const std::vector<double>& column(std::string_view name) const;
    [[nodiscard]] std::size_t rows() const { return axis.size(); }

    /// Throws InvalidArgument when column lengths disagree.
    void validate() const;
};

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

/// CSV text: provenance lines, then a header row, then data rows.
std::string to_csv(const SweepResult& result);

std::string to_json(const SweepResult& result);

/// Everything after the `#`-prefixed header lines.
std::string data_section(std::string_view text);

/// Reads a comma-separated table with `#` comment lines and a header row.
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> provenance;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column_index(std::string_view name) const;
    [[nodiscard]] bool has_column(std::string_view name) const;
    [[nodiscard]] std::vector<double> numeric_column(std::string_view name) const;
};

/// Throws SchemaError on malformed content.
CsvTable parse_csv(std::string_view text);

CsvTable read_csv_file(const std::string& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

std::string hex64(std::uint64_t value);

}  // namespace kitwpa
