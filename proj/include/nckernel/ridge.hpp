#pragma once

#include "nckernel/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstddef>
#include <string_view>
#include <vector>

namespace nckernel {

/// Factorized system (K + ridge * I) for a symmetric PSD K.
///
/// Factorization is a Cholesky decomposition. When it fails, diagonal jitter
/// is added, starting at 1e-12 times the mean diagonal of K + ridge * I and
/// growing tenfold for at most three retries. The jitter actually used is
/// recorded.
class RidgeSystem {
public:
    RidgeSystem(const Eigen::MatrixXd& k, double ridge);

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    Eigen::Index order() const noexcept { return order_; }
    double ridge() const noexcept { return ridge_; }
    double jitter() const noexcept { return jitter_; }

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::Index order_ = 0;
    double ridge_ = 0.0;
    double jitter_ = 0.0;
};

/// (K + ridge * I)^{-1} rhs. `ridge` is the already-scaled n * lambda.
Eigen::MatrixXd solve_ridge(const Eigen::MatrixXd& k, double ridge, const Eigen::MatrixXd& rhs);

/// Kernel ridge regression prediction y^T (K + n lambda I)^{-1} K_cross.
Eigen::VectorXd krr_fit_predict(const GramMatrix& k_train, const Eigen::VectorXd& y, double lambda,
                                const GramMatrix& k_cross);

enum class LossKind { scalar_loocv, embedding_loocv };

std::string_view to_string(LossKind kind);

struct TuneReport {
    std::vector<double> grid;    // ascending
    std::vector<double> losses;  // one per grid value
    std::size_t selected_index = 0;
    double selected = 0.0;
    LossKind kind = LossKind::scalar_loocv;
};

/// `count` logarithmically spaced values in [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t count);

/// 20 log-spaced penalties in [1e-8, 1e2].
std::vector<double> default_penalty_grid();

/// Eigendecomposition of a symmetric PSD base matrix, reused across ridge
/// penalties. Negative round-off eigenvalues are clamped to zero.
class SpectralRidge {
public:
    explicit SpectralRidge(const Eigen::MatrixXd& k);

    Eigen::Index order() const noexcept { return eigenvalues_.size(); }
    const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
    const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }

    /// diag(I - K (K + ridge I)^{-1}), computed without cancellation.
    Eigen::VectorXd residual_diagonal(double ridge) const;

    /// (I - K (K + ridge I)^{-1}) y
    Eigen::VectorXd residual(double ridge, const Eigen::VectorXd& y) const;

private:
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
};

/// Closed-form leave-one-out loss of kernel ridge regression for each lambda:
/// n^{-1} || diag(H)^{-1} H y ||^2 with H = I - K (K + n lambda I)^{-1}.
TuneReport loocv_scalar(const GramMatrix& k, const Eigen::VectorXd& y, std::vector<double> grid);

/// Closed-form leave-one-out loss of a conditional mean embedding for each
/// lambda: n^{-1} tr(S (L - 2 L R^T + R L R^T)) with R = K (K + n lambda I)^{-1},
/// S = diag((1 - R_ii)^{-2}) and L the output Gram.
TuneReport loocv_embedding(const GramMatrix& k_input, const GramMatrix& k_output,
                           std::vector<double> grid);

}  // namespace nckernel
