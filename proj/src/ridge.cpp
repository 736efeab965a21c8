#include "nckernel/ridge.hpp"

#include "nckernel/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nckernel {

namespace {

constexpr double kJitterStart = 1e-12;
constexpr double kJitterGrowth = 10.0;
constexpr int kJitterRetries = 3;
constexpr double kOutputRankTolerance = 1e-14;

std::vector<double> sorted_grid(std::vector<double> grid) {
    if (grid.empty()) throw ConfigError("penalty grid is empty");
    for (double v : grid) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("penalty grid values must be positive");
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

// Smallest lambda among minimizers.
void select(TuneReport& report) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < report.losses.size(); ++i) {
        if (report.losses[i] < report.losses[best]) best = i;
    }
    report.selected_index = best;
    report.selected = report.grid[best];
}

void check_loss(double loss, double lambda) {
    if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "leave-one-out loss is not finite at lambda=" << lambda
            << "; raise the lower end of the penalty grid";
        throw NumericalError(msg.str());
    }
}

// Partial pivoted Cholesky: L ~ G G^T, stopping once every remaining
// diagonal entry of L - G G^T is below rel_tol times the largest diagonal of L.
Eigen::MatrixXd pivoted_cholesky(const Eigen::MatrixXd& l, double rel_tol) {
    const Eigen::Index n = l.rows();
    Eigen::VectorXd residual = l.diagonal();
    const double stop = rel_tol * (n > 0 ? residual.maxCoeff() : 0.0);
    Eigen::MatrixXd g(n, std::min<Eigen::Index>(n, 64));
    Eigen::Index rank = 0;
    while (rank < n) {
        Eigen::Index pivot = 0;
        const double top = residual.maxCoeff(&pivot);
        if (!(top > stop)) break;
        if (rank == g.cols()) g.conservativeResize(n, std::min<Eigen::Index>(n, 2 * g.cols()));
        Eigen::VectorXd column = l.col(pivot);
        if (rank > 0) column.noalias() -= g.leftCols(rank) * g.row(pivot).head(rank).transpose();
        column /= std::sqrt(top);
        g.col(rank) = column;
        residual -= column.cwiseAbs2();
        residual(pivot) = 0.0;
        ++rank;
    }
    return g.leftCols(rank);
}

}  // namespace

RidgeSystem::RidgeSystem(const Eigen::MatrixXd& k, double ridge) : order_(k.rows()), ridge_(ridge) {
    if (k.rows() != k.cols()) throw InputError("ridge system: matrix is not square");
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ConfigError("ridge penalty must be nonnegative");

    Eigen::MatrixXd system = k;
    system.diagonal().array() += ridge;
    if (!system.allFinite()) throw NumericalError("ridge system has non-finite entries");
    const double mean_diag = order_ > 0 ? system.diagonal().mean() : 1.0;

    std::vector<double> tried;
    double jitter = 0.0;
    for (int attempt = 0; attempt <= kJitterRetries; ++attempt) {
        if (attempt > 0) {
            jitter = attempt == 1 ? kJitterStart * std::abs(mean_diag) : jitter * kJitterGrowth;
            system.diagonal().array() += jitter - (tried.empty() ? 0.0 : tried.back());
        }
        tried.push_back(jitter);
        llt_.compute(system);
        if (llt_.info() == Eigen::Success) {
            jitter_ = jitter;
            return;
        }
    }
    std::ostringstream msg;
    msg << "Cholesky factorization failed for an order-" << order_ << " ridge system (ridge=" << ridge
        << ") after jitter levels";
    for (double j : tried) msg << ' ' << j;
    throw NumericalError(msg.str(), tried);
}

Eigen::MatrixXd RidgeSystem::solve(const Eigen::MatrixXd& rhs) const {
    if (rhs.rows() != order_) throw InputError("ridge solve: right-hand side has the wrong row count");
    return llt_.solve(rhs);
}

Eigen::VectorXd RidgeSystem::solve(const Eigen::VectorXd& rhs) const {
    if (rhs.size() != order_) throw InputError("ridge solve: right-hand side has the wrong length");
    return llt_.solve(rhs);
}

Eigen::MatrixXd solve_ridge(const Eigen::MatrixXd& k, double ridge, const Eigen::MatrixXd& rhs) {
    return RidgeSystem(k, ridge).solve(rhs);
}

Eigen::VectorXd krr_fit_predict(const GramMatrix& k_train, const Eigen::VectorXd& y, double lambda,
                                const GramMatrix& k_cross) {
    const Eigen::Index n = k_train.rows();
    if (y.size() != n) throw InputError("krr: target length does not match the training Gram");
    if (k_cross.rows() != n) throw InputError("krr: cross Gram rows must index training samples");
    if (!(lambda > 0.0)) throw ConfigError("krr: lambda must be positive");
    const Eigen::VectorXd coef = RidgeSystem(k_train, static_cast<double>(n) * lambda).solve(y);
    return k_cross.transpose() * coef;
}

std::string_view to_string(LossKind kind) {
    return kind == LossKind::scalar_loocv ? "scalar-loocv" : "embedding-loocv";
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi >= lo) || count == 0) throw ConfigError("log_grid: need 0 < lo <= hi and count >= 1");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return out;
}

std::vector<double> default_penalty_grid() { return log_grid(1e-8, 1e2, 20); }

SpectralRidge::SpectralRidge(const Eigen::MatrixXd& k) {
    if (k.rows() != k.cols()) throw InputError("spectral ridge: matrix is not square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition did not converge");
    eigenvalues_ = solver.eigenvalues().cwiseMax(0.0);
    eigenvectors_ = solver.eigenvectors();
}

Eigen::VectorXd SpectralRidge::residual_diagonal(double ridge) const {
    const Eigen::ArrayXd shrink = ridge / (eigenvalues_.array() + ridge);
    return (eigenvectors_.array().square().rowwise() * shrink.transpose()).rowwise().sum().matrix();
}

Eigen::VectorXd SpectralRidge::residual(double ridge, const Eigen::VectorXd& y) const {
    const Eigen::ArrayXd shrink = ridge / (eigenvalues_.array() + ridge);
    const Eigen::VectorXd coords = eigenvectors_.transpose() * y;
    return eigenvectors_ * (shrink * coords.array()).matrix();
}

TuneReport loocv_scalar(const GramMatrix& k, const Eigen::VectorXd& y, std::vector<double> grid) {
    if (k.rows() != k.cols()) throw InputError("loocv_scalar: Gram is not square");
    if (y.size() != k.rows()) throw InputError("loocv_scalar: target length does not match the Gram");

    TuneReport report;
    report.kind = LossKind::scalar_loocv;
    report.grid = sorted_grid(std::move(grid));

    const SpectralRidge spectral(k);
    const double n = static_cast<double>(k.rows());
    for (double lambda : report.grid) {
        const double ridge = n * lambda;
        const Eigen::VectorXd h_diag = spectral.residual_diagonal(ridge);
        if ((h_diag.array() == 0.0).any()) {
            throw NumericalError("loocv_scalar: zero diagonal entry of I - K(K + n lambda I)^{-1}; "
                                 "raise the lower end of the penalty grid");
        }
        const Eigen::VectorXd loo = spectral.residual(ridge, y).cwiseQuotient(h_diag);
        const double loss = loo.squaredNorm() / n;
        check_loss(loss, lambda);
        report.losses.push_back(loss);
    }
    select(report);
    return report;
}

TuneReport loocv_embedding(const GramMatrix& k_input, const GramMatrix& k_output, std::vector<double> grid) {
    if (k_input.rows() != k_input.cols() || k_output.rows() != k_output.cols()) {
        throw InputError("loocv_embedding: Grams must be square");
    }
    if (k_input.rows() != k_output.rows()) throw InputError("loocv_embedding: Grams differ in order");

    TuneReport report;
    report.kind = LossKind::embedding_loocv;
    report.grid = sorted_grid(std::move(grid));

    const SpectralRidge spectral(k_input);
    const Eigen::MatrixXd& q = spectral.eigenvectors();
    // With L ~ G G^T and I - R = Q diag(shrink) Q^T, the residual norms
    // diag((I - R) L (I - R)^T) are the squared row norms of Q diag(shrink) Q^T G.
    const Eigen::MatrixXd rotated = q.transpose() * pivoted_cholesky(k_output, kOutputRankTolerance);
    const double n = static_cast<double>(k_input.rows());

    for (double lambda : report.grid) {
        const double ridge = n * lambda;
        const Eigen::ArrayXd shrink = ridge / (spectral.eigenvalues().array() + ridge);
        const Eigen::MatrixXd projected = q * (rotated.array().colwise() * shrink).matrix();
        const Eigen::VectorXd residual_sq = projected.rowwise().squaredNorm();
        const Eigen::VectorXd one_minus_r = spectral.residual_diagonal(ridge);
        if ((one_minus_r.array() == 0.0).any()) {
            throw NumericalError("loocv_embedding: R_ii equals one; raise the lower end of the penalty grid");
        }
        const double loss = (residual_sq.array() / one_minus_r.array().square()).sum() / n;
        check_loss(loss, lambda);
        report.losses.push_back(loss);
    }
    select(report);
    return report;
}

}  // namespace nckernel
