#include "crossfit/tabular.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crossfit {

Dataset::Dataset(std::vector<std::string> names, std::vector<std::vector<double>> columns)
    : names_(std::move(names)), columns_(std::move(columns)) {
    if (names_.size() != columns_.size()) {
        throw std::invalid_argument("Dataset: got " + std::to_string(names_.size()) +
                                    " names for " + std::to_string(columns_.size()) + " columns");
    }
    n_rows_ = columns_.empty() ? 0 : columns_.front().size();
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (names_[c].empty()) {
            throw std::invalid_argument("Dataset: column " + std::to_string(c) + " has an empty name");
        }
        if (columns_[c].size() != n_rows_) {
            throw std::invalid_argument("Dataset: column '" + names_[c] + "' has " +
                                        std::to_string(columns_[c].size()) + " rows, expected " +
                                        std::to_string(n_rows_));
        }
    }
    rebuild_index();
}

Dataset Dataset::from_columns(std::vector<std::pair<std::string, std::vector<double>>> cols) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    names.reserve(cols.size());
    columns.reserve(cols.size());
    for (auto& [name, values] : cols) {
        names.push_back(std::move(name));
        columns.push_back(std::move(values));
    }
    return Dataset(std::move(names), std::move(columns));
}

void Dataset::rebuild_index() {
    index_.clear();
    for (std::size_t c = 0; c < names_.size(); ++c) {
        if (!index_.emplace(names_[c], c).second) {
            throw std::invalid_argument("Dataset: duplicate column name '" + names_[c] + "'");
        }
    }
}

bool Dataset::has_column(const std::string& name) const {
    return index_.count(name) != 0;
}

const std::vector<double>& Dataset::column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
        std::string avail;
        for (std::size_t c = 0; c < names_.size(); ++c) {
            if (c) avail += ", ";
            avail += names_[c];
        }
        throw std::runtime_error("unknown column '" + name + "' (available: " + avail + ")");
    }
    return columns_[it->second];
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& idx) const {
    for (std::size_t i : idx) {
        if (i >= n_rows_) {
            throw std::out_of_range("select_rows: index " + std::to_string(i) +
                                    " out of range [0, " + std::to_string(n_rows_) + ")");
        }
    }
    std::vector<std::vector<double>> cols(columns_.size());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        cols[c].reserve(idx.size());
        for (std::size_t i : idx) cols[c].push_back(columns_[c][i]);
    }
    return Dataset(names_, std::move(cols));
}

Dataset Dataset::with_column(const std::string& name, std::vector<double> values) const {
    if (values.size() != n_rows_) {
        throw std::invalid_argument("with_column: '" + name + "' has " + std::to_string(values.size()) +
                                    " rows, dataset has " + std::to_string(n_rows_));
    }
    auto names = names_;
    auto cols = columns_;
    auto it = index_.find(name);
    if (it != index_.end()) {
        cols[it->second] = std::move(values);
    } else {
        names.push_back(name);
        cols.push_back(std::move(values));
    }
    return Dataset(std::move(names), std::move(cols));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell += ch;
        }
    }
    cells.push_back(cell);
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col_name) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || begin == end || !std::isfinite(value)) {
        throw std::runtime_error("csv parse error at row " + std::to_string(row) + ", column '" +
                                 col_name + "': cannot parse '" + cell + "' as a finite number");
    }
    return value;
}

} // namespace

Dataset read_csv(const std::string& path, bool header) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && !(line.size() == 1 && line[0] == '\r')) lines.push_back(line);
    }
    if (lines.empty()) {
        throw std::runtime_error("csv '" + path + "': no rows");
    }

    std::size_t first_data = 0;
    std::vector<std::string> names;
    if (header) {
        names = split_line(lines[0]);
        first_data = 1;
    } else {
        const std::size_t n_cols = split_line(lines[0]).size();
        for (std::size_t c = 0; c < n_cols; ++c) names.push_back("c" + std::to_string(c + 1));
    }

    std::vector<std::vector<double>> columns(names.size());
    for (std::size_t li = first_data; li < lines.size(); ++li) {
        const auto cells = split_line(lines[li]);
        const std::size_t row = li - first_data + 1; // 1-based data row for messages
        if (cells.size() != names.size()) {
            throw std::runtime_error("csv '" + path + "': row " + std::to_string(row) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(names.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            columns[c].push_back(parse_cell(cells[c], row, names[c]));
        }
    }
    return Dataset(std::move(names), std::move(columns));
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open file for writing: " + path);
    }
    const auto& names = data.names();
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (c) out << ',';
        out << names[c];
    }
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (c) out << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", data.column(names[c])[r]);
            out << buf;
        }
        out << '\n';
    }
    if (!out.good()) {
        throw std::runtime_error("write failed: " + path);
    }
}

} // namespace crossfit
