#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace nckernel {

enum class KernelFamily { gaussian, indicator };

/// Kernel for one input column. Indicator columns ignore the lengthscale.
struct ColumnKernel {
    KernelFamily family = KernelFamily::gaussian;
    double lengthscale = 1.0;

    static ColumnKernel gaussian(double lengthscale);
    static ColumnKernel indicator();

    bool operator==(const ColumnKernel&) const = default;
};

/// Product kernel over the columns of one variable block.
///
/// Each column carries its own family, so a covariate block may mix
/// continuous (Gaussian) and categorical (indicator) columns. The product of
/// per-column Gaussian kernels is the Gaussian kernel with a diagonal
/// lengthscale matrix.
class KernelSpec {
public:
    KernelSpec() = default;
    explicit KernelSpec(std::vector<ColumnKernel> columns);

    static KernelSpec gaussian(const std::vector<double>& lengthscales);
    static KernelSpec indicator(std::size_t dims);

    std::size_t dims() const noexcept { return columns_.size(); }
    bool empty() const noexcept { return columns_.empty(); }
    const std::vector<ColumnKernel>& columns() const noexcept { return columns_; }
    const ColumnKernel& operator[](std::size_t j) const { return columns_[j]; }

    /// Lengthscales of the Gaussian columns; indicator columns report 0.
    std::vector<double> lengthscales() const;

    /// Columns [first, first + count).
    KernelSpec slice(std::size_t first, std::size_t count) const;
    KernelSpec concat(const KernelSpec& other) const;

    bool operator==(const KernelSpec&) const = default;

private:
    std::vector<ColumnKernel> columns_;
};

using GramMatrix = Eigen::MatrixXd;

/// prod_j exp(-(a_j - b_j)^2 / (2 sigma_j^2))
double gaussian_kernel(std::span<const double> a, std::span<const double> b,
                       std::span<const double> lengthscales);

double indicator_kernel(double a, double b) noexcept;

/// Product-kernel evaluation of two points under `spec`.
double evaluate(const KernelSpec& spec, std::span<const double> a, std::span<const double> b);

/// Cross Gram: entry (i, j) = k(rows_i, cols_j). Samples are matrix rows.
GramMatrix gram(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& cols, const KernelSpec& spec);

/// Square Gram of one sample set. Bit-identical under transposition.
GramMatrix gram(const Eigen::MatrixXd& samples, const KernelSpec& spec);

/// Kernel vector k(samples_i, query) as a column.
Eigen::VectorXd kernel_column(const Eigen::MatrixXd& samples, std::span<const double> query,
                              const KernelSpec& spec);

/// Median over pairs i < k of |a_ij - a_kj|. Even pair counts average the two
/// central order statistics. Throws DegenerateScaleError when every value in
/// the column is identical.
double median_heuristic(const Eigen::MatrixXd& samples, Eigen::Index column);

/// Gaussian spec with one median-heuristic lengthscale per column.
KernelSpec median_gaussian_spec(const Eigen::MatrixXd& samples);

}  // namespace nckernel
