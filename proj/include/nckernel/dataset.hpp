#pragma once

#include "nckernel/observations.hpp"
#include "nckernel/pipeline.hpp"

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace nckernel {

enum class ColumnFamily { continuous, categorical };

struct Column {
    std::string name;
    Role role = Role::x;
    ColumnFamily family = ColumnFamily::continuous;
    std::vector<double> values;
    /// Code -> label for categorical columns read from text labels. Empty
    /// when the codes are the numbers that appeared in the file.
    std::map<double, std::string> labels;
};

/// Numeric column store with a role per column. Blocks keep the column
/// order in which they were added.
class Dataset {
public:
    void add_column(Column column);

    std::size_t rows() const noexcept { return rows_; }
    const std::vector<Column>& columns() const noexcept { return columns_; }
    const Column& column(const std::string& name) const;
    std::vector<const Column*> role_columns(Role role) const;

    /// Exactly one Y and one D, at least one X, Z and W column.
    void validate() const;

    Observations observations() const;
    KernelPolicy kernel_policy() const;

    /// Code for a categorical value given as text: its label, or the number itself.
    double code_of(const Column& column, const std::string& text) const;

private:
    std::vector<Column> columns_;
    std::size_t rows_ = 0;
};

/// Maps file columns to roles. Columns the schema does not mention are ignored.
struct Schema {
    std::string y;
    std::string d;
    std::vector<std::string> v;
    std::vector<std::string> x;
    std::vector<std::string> w;
    std::vector<std::string> z;
    std::set<std::string> categorical;
    /// Population files for distribution shift carry only (V, X, W).
    bool population_only = false;
};

/// Reads a headered CSV and validates it against `schema`. All violations
/// are collected into one IngestionError, with row numbers for bad cells.
Dataset ingest(const std::string& path, const Schema& schema);

/// Shortest round-trip CSV of every column in role order Y, D, V, X, W, Z.
void write_dataset_csv(const Dataset& data, const std::string& path);

}  // namespace nckernel
