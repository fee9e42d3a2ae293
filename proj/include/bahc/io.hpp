#pragma once

// Plain-text ingestion and output: wide-format CSV panels (first column a
// date label, header row of tickers, empty cells for missing values) and
// labelled square-matrix CSV files.

#include <bahc/error.hpp>
#include <bahc/matrix_core.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bahc {

/// Rows are observations (dates), columns are series (tickers). NaN marks a
/// missing cell.
struct WideTable {
    std::vector<std::string> row_labels;
    std::vector<std::string> column_labels;
    Matrix values;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cell.push_back('"');
                ++k;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    cells.push_back(cell);
    return cells;
}

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

inline double parse_cell(const std::string& raw, std::size_t line_no) {
    const std::string cell = trim(raw);
    if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || errno == ERANGE) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + cell + "' as a number");
    }
    return value;
}

inline std::string format_double(double value, int precision) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*g", precision, value);
    return buffer;
}

}  // namespace detail

inline WideTable read_wide_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) {
            break;
        }
    }
    if (line_no == 0 || detail::trim(line).empty()) {
        throw DataError("CSV input is empty");
    }
    WideTable table;
    auto header = detail::split_csv_line(line);
    if (header.size() < 2) {
        throw DataError("CSV header needs a label column and at least one data column");
    }
    for (std::size_t k = 1; k < header.size(); ++k) {
        table.column_labels.push_back(detail::trim(header[k]));
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " cells, found " + std::to_string(cells.size()));
        }
        table.row_labels.push_back(detail::trim(cells[0]));
        std::vector<double> values;
        values.reserve(cells.size() - 1);
        for (std::size_t k = 1; k < cells.size(); ++k) {
            values.push_back(detail::parse_cell(cells[k], line_no));
        }
        rows.push_back(std::move(values));
    }
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.column_labels.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            table.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
    }
    return table;
}

inline WideTable read_wide_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return read_wide_csv(in);
}

inline void write_wide_csv(std::ostream& out, const WideTable& table, const std::string& corner = "date",
                           int precision = 17) {
    out << corner;
    for (const auto& label : table.column_labels) {
        out << ',' << label;
    }
    out << '\n';
    for (Index r = 0; r < table.values.rows(); ++r) {
        out << table.row_labels[static_cast<std::size_t>(r)];
        for (Index c = 0; c < table.values.cols(); ++c) {
            out << ',';
            const double v = table.values(r, c);
            if (std::isfinite(v)) {
                out << detail::format_double(v, precision);
            }
        }
        out << '\n';
    }
}

/// Square matrix with matching row and column labels.
inline void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& labels,
                             int precision = 17) {
    WideTable table{labels, labels, m};
    write_wide_csv(out, table, "", precision);
}

struct LabelledMatrix {
    std::vector<std::string> labels;
    Matrix values;
};

inline LabelledMatrix read_matrix_csv(std::istream& in) {
    WideTable table = read_wide_csv(in);
    if (table.values.rows() != table.values.cols()) {
        throw DataError("matrix CSV is not square");
    }
    if (!table.values.allFinite()) {
        throw DataError("matrix CSV contains missing values");
    }
    return {std::move(table.column_labels), std::move(table.values)};
}

inline LabelledMatrix read_matrix_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return read_matrix_csv(in);
}

/// Returns matrix from a wide table of returns (rows = dates). Series with any
/// missing value are dropped; their labels are appended to `dropped` if given.
inline ReturnsMatrix returns_from_table(const WideTable& table, std::vector<std::string>* dropped = nullptr) {
    std::vector<Index> keep;
    for (Index c = 0; c < table.values.cols(); ++c) {
        if (table.values.col(c).allFinite()) {
            keep.push_back(c);
        } else if (dropped != nullptr) {
            dropped->push_back(table.column_labels[static_cast<std::size_t>(c)]);
        }
    }
    Matrix data(static_cast<Index>(keep.size()), table.values.rows());
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        data.row(static_cast<Index>(k)) = table.values.col(keep[k]).transpose();
        labels.push_back(table.column_labels[static_cast<std::size_t>(keep[k])]);
    }
    return ReturnsMatrix(std::move(data), std::move(labels));
}

}  // namespace bahc
