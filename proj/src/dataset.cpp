#include "nckernel/dataset.hpp"

#include "nckernel/csv.hpp"
#include "nckernel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace nckernel {

namespace {

constexpr std::size_t kMaxListedViolations = 50;

const Role kRoleOrder[] = {Role::y, Role::d, Role::v, Role::x, Role::w, Role::z};

bool is_missing(const std::string& cell) {
    std::string t;
    for (char c : cell) {
        if (c != ' ') t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return t.empty() || t == "na" || t == "nan" || t == "null";
}

Eigen::MatrixXd block_of(const std::vector<const Column*>& cols, std::size_t rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < rows; ++i) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j]->values[i];
        }
    }
    return out;
}

}  // namespace

void Dataset::add_column(Column column) {
    if (!columns_.empty() && column.values.size() != rows_) {
        throw InputError("column '" + column.name + "' has " + std::to_string(column.values.size()) +
                         " rows, expected " + std::to_string(rows_));
    }
    for (const auto& c : columns_) {
        if (c.name == column.name) throw InputError("duplicate column name '" + column.name + "'");
    }
    if (columns_.empty()) rows_ = column.values.size();
    columns_.push_back(std::move(column));
}

const Column& Dataset::column(const std::string& name) const {
    for (const auto& c : columns_) {
        if (c.name == name) return c;
    }
    throw InputError("no column named '" + name + "'");
}

std::vector<const Column*> Dataset::role_columns(Role role) const {
    std::vector<const Column*> out;
    for (const auto& c : columns_) {
        if (c.role == role) out.push_back(&c);
    }
    return out;
}

void Dataset::validate() const {
    std::vector<std::string> violations;
    for (Role role : {Role::y, Role::d}) {
        const auto n = role_columns(role).size();
        if (n != 1) {
            violations.push_back("role " + std::string(to_string(role)) + " needs exactly one column, found " +
                                 std::to_string(n));
        }
    }
    for (Role role : {Role::x, Role::z, Role::w}) {
        if (role_columns(role).empty()) {
            violations.push_back("role " + std::string(to_string(role)) + " has no columns");
        }
    }
    if (rows_ == 0) violations.push_back("dataset has no rows");
    if (!violations.empty()) throw IngestionError(violations);
}

Observations Dataset::observations() const {
    Observations obs;
    const auto y = role_columns(Role::y);
    if (!y.empty()) obs.y = block_of(y, rows_).col(0);
    obs.d = block_of(role_columns(Role::d), rows_);
    obs.v = block_of(role_columns(Role::v), rows_);
    obs.x = block_of(role_columns(Role::x), rows_);
    obs.w = block_of(role_columns(Role::w), rows_);
    obs.z = block_of(role_columns(Role::z), rows_);
    return obs;
}

KernelPolicy Dataset::kernel_policy() const {
    KernelPolicy policy;
    for (Role role : kRoleOrder) {
        if (role == Role::y) continue;
        std::vector<KernelFamily> fams;
        for (const Column* c : role_columns(role)) {
            fams.push_back(c->family == ColumnFamily::categorical ? KernelFamily::indicator : KernelFamily::gaussian);
        }
        policy.families[role] = std::move(fams);
    }
    return policy;
}

double Dataset::code_of(const Column& column, const std::string& text) const {
    for (const auto& [code, label] : column.labels) {
        if (label == text) return code;
    }
    double value = 0.0;
    if (!csv::parse_double(text, value)) {
        throw ConfigError("'" + text + "' is not a value of column '" + column.name + "'");
    }
    return value;
}

Dataset ingest(const std::string& path, const Schema& schema) {
    const csv::Table table = csv::read(path);
    std::vector<std::string> violations;

    std::map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < table.header.size(); ++j) index[table.header[j]] = j;

    struct Wanted {
        std::string name;
        Role role;
    };
    std::vector<Wanted> wanted;
    auto want = [&](Role role, const std::vector<std::string>& names, bool required) {
        if (required && names.empty()) {
            violations.push_back("role " + std::string(to_string(role)) + " has no columns");
        }
        for (const auto& name : names) wanted.push_back({name, role});
    };
    if (!schema.population_only) {
        want(Role::y, schema.y.empty() ? std::vector<std::string>{} : std::vector<std::string>{schema.y}, true);
        want(Role::d, schema.d.empty() ? std::vector<std::string>{} : std::vector<std::string>{schema.d}, true);
    }
    want(Role::v, schema.v, false);
    want(Role::x, schema.x, true);
    want(Role::w, schema.w, true);
    if (!schema.population_only) want(Role::z, schema.z, true);

    std::map<std::string, Role> assigned;
    for (const auto& w : wanted) {
        const auto [it, inserted] = assigned.emplace(w.name, w.role);
        if (!inserted) {
            violations.push_back("column '" + w.name + "' is assigned to both " + std::string(to_string(it->second)) +
                                 " and " + std::string(to_string(w.role)));
        }
        if (!index.contains(w.name)) {
            violations.push_back("unknown column '" + w.name + "' (role " + std::string(to_string(w.role)) + ")");
        }
    }
    for (const auto& name : schema.categorical) {
        if (!assigned.contains(name)) violations.push_back("categorical column '" + name + "' has no role");
    }

    std::size_t cell_violations = 0;
    auto cell_problem = [&](std::string text) {
        if (++cell_violations <= kMaxListedViolations) violations.push_back(std::move(text));
    };
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != table.header.size()) {
            cell_problem("row " + std::to_string(r + 2) + ": expected " + std::to_string(table.header.size()) +
                         " fields, found " + std::to_string(table.rows[r].size()));
        }
    }
    if (table.rows.empty()) violations.push_back("'" + path + "' has no data rows");

    Dataset data;
    if (!violations.empty()) throw IngestionError(violations);

    for (const auto& w : wanted) {
        const std::size_t j = index.at(w.name);
        Column col;
        col.name = w.name;
        col.role = w.role;
        col.family = schema.categorical.contains(w.name) ? ColumnFamily::categorical : ColumnFamily::continuous;
        col.values.resize(table.rows.size());

        std::vector<std::string> texts(table.rows.size());
        bool all_numeric = true;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const std::string& cell = table.rows[r][j];
            texts[r] = cell;
            if (is_missing(cell)) {
                cell_problem("row " + std::to_string(r + 2) + ", column '" + w.name + "': missing value");
                continue;
            }
            double value = 0.0;
            if (csv::parse_double(cell, value) && std::isfinite(value)) {
                col.values[r] = value;
            } else if (col.family == ColumnFamily::categorical) {
                all_numeric = false;
            } else {
                cell_problem("row " + std::to_string(r + 2) + ", column '" + w.name + "': '" + cell +
                             "' is not numeric");
            }
        }
        if (col.family == ColumnFamily::categorical && !all_numeric) {
            // Text labels: codes 0..k-1 in lexicographic label order.
            std::vector<std::string> distinct;
            for (const auto& t : texts) {
                if (!is_missing(t)) distinct.push_back(t);
            }
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            std::map<std::string, double> code;
            for (std::size_t k = 0; k < distinct.size(); ++k) {
                code[distinct[k]] = static_cast<double>(k);
                col.labels[static_cast<double>(k)] = distinct[k];
            }
            for (std::size_t r = 0; r < texts.size(); ++r) {
                if (!is_missing(texts[r])) col.values[r] = code.at(texts[r]);
            }
        }
        if (cell_violations == 0) data.add_column(std::move(col));
    }
    if (cell_violations > kMaxListedViolations) {
        violations.push_back("... and " + std::to_string(cell_violations - kMaxListedViolations) +
                             " more cell problems");
    }
    if (!violations.empty()) throw IngestionError(violations);
    if (!schema.population_only) data.validate();
    return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    std::vector<const Column*> ordered;
    for (Role role : kRoleOrder) {
        for (const Column* c : data.role_columns(role)) ordered.push_back(c);
    }
    for (std::size_t j = 0; j < ordered.size(); ++j) out << (j ? "," : "") << csv::escape(ordered[j]->name);
    out << '\n';
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t j = 0; j < ordered.size(); ++j) {
            const Column& c = *ordered[j];
            out << (j ? "," : "");
            const auto label = c.labels.find(c.values[i]);
            out << (label != c.labels.end() ? csv::escape(label->second) : csv::format_double(c.values[i]));
        }
        out << '\n';
    }
}

}  // namespace nckernel
