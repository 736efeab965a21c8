#include "nckernel/observations.hpp"

#include "nckernel/errors.hpp"

#include <string>

namespace nckernel {

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

void check_block(const Eigen::MatrixXd& block, const KernelSpec& spec, Eigen::Index n, const char* name,
                 bool required) {
    if (required && block.cols() == 0) throw InputError(std::string("missing ") + name + " block");
    if (block.cols() == 0 && spec.empty()) return;
    if (block.rows() != n) {
        throw InputError(std::string(name) + " block has " + std::to_string(block.rows()) +
                         " rows, expected " + std::to_string(n));
    }
    if (static_cast<std::size_t>(block.cols()) != spec.dims()) {
        throw InputError(std::string(name) + " block has " + std::to_string(block.cols()) +
                         " columns but its kernel has " + std::to_string(spec.dims()));
    }
}

}  // namespace

Observations Observations::subset(const std::vector<bool>& keep) const {
    if (static_cast<Eigen::Index>(keep.size()) != size()) throw InputError("subset mask has the wrong length");
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i]) rows.push_back(static_cast<Eigen::Index>(i));
    }
    Observations out;
    if (y.size() > 0) {
        out.y.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) out.y(static_cast<Eigen::Index>(i)) = y(rows[i]);
    }
    out.d = take_rows(d, rows);
    out.v = take_rows(v, rows);
    out.x = take_rows(x, rows);
    out.w = take_rows(w, rows);
    out.z = take_rows(z, rows);
    return out;
}

GramMatrix covariate_gram(const Eigen::MatrixXd& v_rows, const Eigen::MatrixXd& x_rows,
                          const Eigen::MatrixXd& v_cols, const Eigen::MatrixXd& x_cols,
                          const KernelSet& kernels) {
    GramMatrix out = gram(x_rows, x_cols, kernels.x);
    if (!kernels.v.empty()) out.array() *= gram(v_rows, v_cols, kernels.v).array();
    return out;
}

void validate_blocks(const Observations& obs, const KernelSet& kernels, bool require_y, bool require_d,
                     bool require_w, bool require_z) {
    const Eigen::Index n = obs.size();
    if (n == 0) throw InputError("no observations");
    if (require_y && obs.y.size() != n) throw InputError("outcome length does not match the sample count");
    if (require_d && obs.d.cols() != 1) throw InputError("treatment block must have exactly one column");
    check_block(obs.d, kernels.d, n, "D", require_d);
    check_block(obs.v, kernels.v, n, "V", false);
    check_block(obs.x, kernels.x, n, "X", true);
    check_block(obs.w, kernels.w, n, "W", require_w);
    check_block(obs.z, kernels.z, n, "Z", require_z);
}

}  // namespace nckernel
