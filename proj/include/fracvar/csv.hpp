#pragma once

#include <string>
#include <vector>

namespace fracvar {

/// Numbers as %.17g: round-trips every double.
std::string format_number(double v);

/// Column-major numeric table with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    /// Index of a named column, or -1.
    int find(const std::string& name) const;
};

/// Writes with '\n' line endings. Throws std::runtime_error on I/O failure and
/// DimensionError on ragged columns.
void write_csv(const std::string& path, const CsvTable& table);
std::string to_csv(const CsvTable& table);

/// Throws ParseError (with line) on malformed rows or non-numeric cells.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

}  // namespace fracvar
