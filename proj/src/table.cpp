#include "kitwpa/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "kitwpa/errors.hpp"

namespace kitwpa {

void SweepResult::add_column(std::string name, std::vector<double> values) {
    column_names.push_back(std::move(name));
    columns.push_back(std::move(values));
}

const std::vector<double>& SweepResult::column(std::string_view name) const {
    for (std::size_t j = 0; j < column_names.size(); ++j)
        if (column_names[j] == name) return columns[j];
    throw InvalidArgument("SweepResult: no column '" + std::string(name) + "'");
}

void SweepResult::validate() const {
    for (const auto& col : columns)
        if (col.size() != axis.size()) throw InvalidArgument("SweepResult: column length mismatch");
    if (!status.empty() && status.size() != axis.size())
        throw InvalidArgument("SweepResult: status length mismatch");
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

std::string to_csv(const SweepResult& result) {
    result.validate();
    std::ostringstream out;
    for (const auto& [key, value] : result.provenance) out << "# " << key << " = " << value << '\n';
    out << result.axis_label;
    for (const auto& name : result.column_names) out << ',' << name;
    if (!result.status.empty()) out << ",status";
    out << '\n';
    for (std::size_t r = 0; r < result.rows(); ++r) {
        out << format_double(result.axis[r]);
        for (const auto& col : result.columns) out << ',' << format_double(col[r]);
        if (!result.status.empty()) out << ',' << result.status[r];
        out << '\n';
    }
    return out.str();
}

std::string to_json(const SweepResult& result) {
    result.validate();
    nlohmann::ordered_json doc;
    nlohmann::ordered_json prov = nlohmann::ordered_json::object();
    for (const auto& [key, value] : result.provenance) prov[key] = value;
    doc["provenance"] = prov;
    // Non-finite values have no JSON number form; they are written as strings.
    auto encode = [](double v) -> nlohmann::ordered_json {
        if (std::isfinite(v)) return v;
        return format_double(v);
    };
    nlohmann::ordered_json axis = nlohmann::ordered_json::array();
    for (double v : result.axis) axis.push_back(encode(v));
    doc["axis"] = {{"label", result.axis_label}, {"values", axis}};
    nlohmann::ordered_json cols = nlohmann::ordered_json::object();
    for (std::size_t j = 0; j < result.columns.size(); ++j) {
        nlohmann::ordered_json values = nlohmann::ordered_json::array();
        for (double v : result.columns[j]) values.push_back(encode(v));
        cols[result.column_names[j]] = values;
    }
    doc["columns"] = cols;
    if (!result.status.empty()) doc["status"] = result.status;
    return doc.dump(1) + "\n";
}

std::string data_section(std::string_view text) {
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        if (line.empty() || line.front() != '#') {
            out.append(line);
            out.push_back('\n');
        }
        pos = eol + 1;
    }
    return out;
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return cells;
}

}  // namespace

std::size_t CsvTable::column_index(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == name) return j;
    throw SchemaError("csv: missing column '" + std::string(name) + "'");
}

bool CsvTable::has_column(std::string_view name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::vector<double> CsvTable::numeric_column(std::string_view name) const {
    const std::size_t j = column_index(name);
    std::vector<double> values;
    values.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string& cell = rows[r][j];
        if (cell == "nan" || cell == "inf" || cell == "-inf") {
            values.push_back(cell == "nan" ? NAN : (cell == "inf" ? INFINITY : -INFINITY));
            continue;
        }
        double v = 0.0;
        auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || end != cell.data() + cell.size())
            throw SchemaError("csv: row " + std::to_string(r + 1) + " column '" + std::string(name) +
                              "' is not a number: '" + cell + "'");
        values.push_back(v);
    }
    return values;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string line = trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string body = trim(std::string_view(line).substr(1));
            const auto eq = body.find('=');
            if (eq != std::string::npos)
                table.provenance.emplace_back(trim(std::string_view(body).substr(0, eq)),
                                              trim(std::string_view(body).substr(eq + 1)));
            continue;
        }
        auto cells = split_commas(line);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size())
            throw SchemaError("csv: row " + std::to_string(table.rows.size() + 1) + " has " +
                              std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) throw SchemaError("csv: no header row");
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open input file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << value;
    return out.str();
}

}  // namespace kitwpa
