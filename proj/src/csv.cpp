#include "fracvar/csv.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fracvar/error.hpp"

namespace fracvar {

std::string format_number(double v) {
    if (v == 0.0) {
        return "0";
    }
    return fmt::format("{:.17g}", v);
}

int CsvTable::find(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

std::string to_csv(const CsvTable& table) {
    if (table.header.size() != table.columns.size()) {
        throw DimensionError(fmt::format("csv: {} names for {} columns", table.header.size(), table.columns.size()));
    }
    for (const auto& c : table.columns) {
        if (c.size() != table.rows()) {
            throw DimensionError("csv: ragged columns");
        }
    }
    std::string out;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        out += j == 0 ? "" : ",";
        out += table.header[j];
    }
    out += '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t j = 0; j < table.columns.size(); ++j) {
            out += j == 0 ? "" : ",";
            out += format_number(table.columns[j][r]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
    const std::string text = to_csv(table);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw std::runtime_error(fmt::format("cannot write '{}'", path));
    }
    f << text;
    if (!f) {
        throw std::runtime_error(fmt::format("write to '{}' failed", path));
    }
}

CsvTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    CsvTable t;
    int lineno = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = s.find(',', start);
            cells.push_back(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        for (auto& c : cells) {
            const auto a = c.find_first_not_of(" \t\r");
            const auto b = c.find_last_not_of(" \t\r");
            c = a == std::string::npos ? std::string() : c.substr(a, b - a + 1);
        }
        return cells;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto cells = split(line);
        if (t.header.empty()) {
            t.header = cells;
            t.columns.assign(cells.size(), {});
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ParseError(fmt::format("csv line {}: {} cells, header has {}", lineno, cells.size(), t.header.size()),
                             lineno, 0);
        }
        for (std::size_t j = 0; j < cells.size(); ++j) {
            double v = 0.0;
            const char* first = cells[j].data();
            const char* last = first + cells[j].size();
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last) {
                throw ParseError(fmt::format("csv line {}: '{}' is not a number", lineno, cells[j]), lineno,
                                 static_cast<int>(j) + 1);
            }
            t.columns[j].push_back(v);
        }
    }
    if (t.header.empty()) {
        throw ParseError("csv: empty file", 0, 0);
    }
    return t;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw ParseError(fmt::format("cannot read '{}'", path), 0, 0);
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace fracvar
