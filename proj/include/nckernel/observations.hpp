#pragma once

#include "nckernel/kernels.hpp"

#include <Eigen/Core>

namespace nckernel {

/// Role-separated numeric samples; one row per observation in every block.
///
/// `v` holds the heterogeneity covariates of CATE and may have zero columns.
/// Wherever the bridge talks about "the covariate block" it means (v, x).
/// `y` is empty for reweighting populations that carry no outcome.
struct Observations {
    Eigen::VectorXd y;
    Eigen::MatrixXd d;
    Eigen::MatrixXd v;
    Eigen::MatrixXd x;
    Eigen::MatrixXd w;
    Eigen::MatrixXd z;

    Eigen::Index size() const noexcept { return d.rows() > 0 ? d.rows() : x.rows(); }
    bool has_v() const noexcept { return v.cols() > 0; }

    /// Rows selected by `keep` (same length as size()).
    Observations subset(const std::vector<bool>& keep) const;
};

struct KernelSet {
    KernelSpec d;
    KernelSpec v;
    KernelSpec x;
    KernelSpec w;
    KernelSpec z;
};

/// K_V (.) K_X between two covariate blocks. An empty V block contributes ones.
GramMatrix covariate_gram(const Eigen::MatrixXd& v_rows, const Eigen::MatrixXd& x_rows,
                          const Eigen::MatrixXd& v_cols, const Eigen::MatrixXd& x_cols,
                          const KernelSet& kernels);

/// Checks block shapes against each other and against `kernels`. `require_y`,
/// `require_z` and `require_d` toggle which blocks must be present.
void validate_blocks(const Observations& obs, const KernelSet& kernels, bool require_y, bool require_d,
                     bool require_w, bool require_z);

}  // namespace nckernel
