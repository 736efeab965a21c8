#include "nckernel/kernels.hpp"

#include "nckernel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nckernel {

namespace {

void check_lengthscale(double value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ConfigError("kernel lengthscale must be positive and finite, got " +
                          std::to_string(value));
    }
}

void check_dims(const KernelSpec& spec, Eigen::Index cols, const char* what) {
    if (static_cast<std::size_t>(cols) != spec.dims()) {
        throw InputError(std::string(what) + " has " + std::to_string(cols) +
                         " columns but the kernel spec has " + std::to_string(spec.dims()));
    }
}

// Column-scaled copy so that the Gaussian exponent is a plain squared distance.
// Indicator columns are left untouched.
Eigen::MatrixXd scaled(const Eigen::MatrixXd& samples, const KernelSpec& spec) {
    Eigen::MatrixXd out = samples;
    for (std::size_t j = 0; j < spec.dims(); ++j) {
        if (spec[j].family == KernelFamily::gaussian) {
            out.col(static_cast<Eigen::Index>(j)) /= spec[j].lengthscale;
        }
    }
    return out;
}

inline double pair_value(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b,
                         Eigen::Index k, const KernelSpec& spec) {
    double exponent = 0.0;
    for (std::size_t j = 0; j < spec.dims(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        if (spec[j].family == KernelFamily::indicator) {
            if (a(i, col) != b(k, col)) return 0.0;
        } else {
            const double diff = a(i, col) - b(k, col);
            exponent += diff * diff;
        }
    }
    return std::exp(-0.5 * exponent);
}

}  // namespace

ColumnKernel ColumnKernel::gaussian(double lengthscale) {
    check_lengthscale(lengthscale);
    return {KernelFamily::gaussian, lengthscale};
}

ColumnKernel ColumnKernel::indicator() { return {KernelFamily::indicator, 0.0}; }

KernelSpec::KernelSpec(std::vector<ColumnKernel> columns) : columns_(std::move(columns)) {
    for (const auto& c : columns_) {
        if (c.family == KernelFamily::gaussian) check_lengthscale(c.lengthscale);
        if (c.family == KernelFamily::indicator && c.lengthscale != 0.0) {
            throw ConfigError("indicator kernel columns carry no lengthscale");
        }
    }
}

KernelSpec KernelSpec::gaussian(const std::vector<double>& lengthscales) {
    std::vector<ColumnKernel> cols;
    cols.reserve(lengthscales.size());
    for (double s : lengthscales) cols.push_back(ColumnKernel::gaussian(s));
    return KernelSpec(std::move(cols));
}

KernelSpec KernelSpec::indicator(std::size_t dims) {
    return KernelSpec(std::vector<ColumnKernel>(dims, ColumnKernel::indicator()));
}

std::vector<double> KernelSpec::lengthscales() const {
    std::vector<double> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.lengthscale);
    return out;
}

KernelSpec KernelSpec::slice(std::size_t first, std::size_t count) const {
    if (first + count > columns_.size()) throw InputError("kernel spec slice out of range");
    return KernelSpec(std::vector<ColumnKernel>(columns_.begin() + static_cast<long>(first),
                                                columns_.begin() + static_cast<long>(first + count)));
}

KernelSpec KernelSpec::concat(const KernelSpec& other) const {
    std::vector<ColumnKernel> cols = columns_;
    cols.insert(cols.end(), other.columns_.begin(), other.columns_.end());
    return KernelSpec(std::move(cols));
}

double gaussian_kernel(std::span<const double> a, std::span<const double> b,
                       std::span<const double> lengthscales) {
    if (a.size() != b.size() || a.size() != lengthscales.size()) {
        throw InputError("gaussian_kernel: argument lengths differ");
    }
    double exponent = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        check_lengthscale(lengthscales[j]);
        const double diff = (a[j] - b[j]) / lengthscales[j];
        exponent += diff * diff;
    }
    return std::exp(-0.5 * exponent);
}

double indicator_kernel(double a, double b) noexcept { return a == b ? 1.0 : 0.0; }

double evaluate(const KernelSpec& spec, std::span<const double> a, std::span<const double> b) {
    if (a.size() != spec.dims() || b.size() != spec.dims()) {
        throw InputError("kernel evaluation: point dimension does not match the kernel spec");
    }
    double exponent = 0.0;
    for (std::size_t j = 0; j < spec.dims(); ++j) {
        if (spec[j].family == KernelFamily::indicator) {
            if (a[j] != b[j]) return 0.0;
        } else {
            const double diff = a[j] / spec[j].lengthscale - b[j] / spec[j].lengthscale;
            exponent += diff * diff;
        }
    }
    return std::exp(-0.5 * exponent);
}

GramMatrix gram(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& cols, const KernelSpec& spec) {
    check_dims(spec, rows.cols(), "row samples");
    check_dims(spec, cols.cols(), "column samples");
    if (rows.rows() == 0 || cols.rows() == 0) throw InputError("gram: empty sample list");

    const Eigen::MatrixXd a = scaled(rows, spec);
    const Eigen::MatrixXd b = scaled(cols, spec);
    GramMatrix out(a.rows(), b.rows());
    for (Eigen::Index k = 0; k < b.rows(); ++k) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) out(i, k) = pair_value(a, i, b, k, spec);
    }
    return out;
}

GramMatrix gram(const Eigen::MatrixXd& samples, const KernelSpec& spec) {
    check_dims(spec, samples.cols(), "samples");
    if (samples.rows() == 0) throw InputError("gram: empty sample list");

    const Eigen::MatrixXd a = scaled(samples, spec);
    const Eigen::Index n = a.rows();
    GramMatrix out(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out(k, k) = 1.0;
        for (Eigen::Index i = k + 1; i < n; ++i) {
            const double v = pair_value(a, i, a, k, spec);
            out(i, k) = v;
            out(k, i) = v;
        }
    }
    return out;
}

Eigen::VectorXd kernel_column(const Eigen::MatrixXd& samples, std::span<const double> query,
                              const KernelSpec& spec) {
    const Eigen::Map<const Eigen::RowVectorXd> q(query.data(), static_cast<Eigen::Index>(query.size()));
    return gram(samples, Eigen::MatrixXd(q), spec).col(0);
}

double median_heuristic(const Eigen::MatrixXd& samples, Eigen::Index column) {
    if (column < 0 || column >= samples.cols()) throw InputError("median_heuristic: column out of range");
    const Eigen::Index n = samples.rows();
    if (n < 2) throw InputError("median_heuristic: need at least two samples");

    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = i + 1; k < n; ++k) {
            dist.push_back(std::abs(samples(i, column) - samples(k, column)));
        }
    }
    const std::size_t half = dist.size() / 2;
    std::nth_element(dist.begin(), dist.begin() + static_cast<long>(half), dist.end());
    double median = dist[half];
    if (dist.size() % 2 == 0) {
        const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<long>(half));
        median = 0.5 * (lower + median);
    }
    if (median == 0.0) {
        // A zero median with distinct values still cannot serve as a lengthscale.
        throw DegenerateScaleError("column " + std::to_string(column) +
                                       " has zero median interpoint distance; supply an explicit "
                                       "lengthscale or drop the column",
                                   static_cast<long>(column));
    }
    return median;
}

KernelSpec median_gaussian_spec(const Eigen::MatrixXd& samples) {
    std::vector<double> scales;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) scales.push_back(median_heuristic(samples, j));
    return KernelSpec::gaussian(scales);
}

}  // namespace nckernel
