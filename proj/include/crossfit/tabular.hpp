#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace crossfit {

/// Immutable columnar numeric table. Columns are named, ordered, and all have
/// the same length. Binary variables are encoded as 0/1 columns.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<std::string> names, std::vector<std::vector<double>> columns);

    static Dataset from_columns(std::vector<std::pair<std::string, std::vector<double>>> cols);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    bool has_column(const std::string& name) const;
    const std::vector<double>& column(const std::string& name) const;

    // Materialized row subset, in idx order. Indices may repeat.
    Dataset select_rows(const std::vector<std::size_t>& idx) const;

    // Copy of this dataset with `name` added (or replaced) as the last column.
    Dataset with_column(const std::string& name, std::vector<double> values) const;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t n_rows_ = 0;

    void rebuild_index();
};

// CSV ingestion: comma separated, optional single header row, '.' decimal
// separator. Every cell must parse as a finite numeric; missing values are
// rejected (impute upstream, or model imputation as a nuisance).
Dataset read_csv(const std::string& path, bool header = true);

// Writes with a header row and round-trip-exact float formatting.
void write_csv(const Dataset& data, const std::string& path);

} // namespace crossfit
