#pragma once

#include "nckernel/kernels.hpp"
#include "nckernel/observations.hpp"
#include "nckernel/ridge.hpp"

#include <Eigen/Core>

#include <memory>
#include <span>

namespace nckernel {

/// Empirical mean embedding of P(x, w) with uniform weights 1/n.
class MeanEmbedding {
public:
    MeanEmbedding(Eigen::MatrixXd x, Eigen::MatrixXd w, KernelSpec x_kernel, KernelSpec w_kernel);

    /// n^{-1} sum_i k(x_i, x) k(w_i, w)
    double operator()(std::span<const double> x, std::span<const double> w) const;

    Eigen::VectorXd weights() const;
    Eigen::Index size() const noexcept { return x_.rows(); }
    const Eigen::MatrixXd& x() const noexcept { return x_; }
    const Eigen::MatrixXd& w() const noexcept { return w_; }

private:
    Eigen::MatrixXd x_;
    Eigen::MatrixXd w_;
    KernelSpec x_kernel_;
    KernelSpec w_kernel_;
};

MeanEmbedding mean_embed(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, const KernelSpec& x_kernel,
                         const KernelSpec& w_kernel);

/// beta = (K_BB + n lambda I)^{-1} K_Bb, one column per query.
Eigen::MatrixXd cme_weights(const GramMatrix& k_bb, double lambda, const GramMatrix& k_bb_query);

/// Conditional mean embedding represented by its weight functional
/// beta(b) = (K_BB + n lambda I)^{-1} K_Bb. The embedding of the output
/// variable at b is then sum_i beta_i(b) phi(out_i).
class ConditionalEmbedding {
public:
    ConditionalEmbedding(Eigen::MatrixXd conditioning, KernelSpec kernel, double lambda);

    Eigen::VectorXd weights(std::span<const double> query) const;
    /// One weight column per query row.
    Eigen::MatrixXd weights(const Eigen::MatrixXd& queries) const;

    double lambda() const noexcept { return lambda_; }
    Eigen::Index size() const noexcept { return conditioning_.rows(); }
    const Eigen::MatrixXd& conditioning() const noexcept { return conditioning_; }
    const KernelSpec& kernel() const noexcept { return kernel_; }

private:
    Eigen::MatrixXd conditioning_;
    KernelSpec kernel_;
    double lambda_;
    std::shared_ptr<const RidgeSystem> system_;
};

/// mu(d): embedding of P(x, w | d) for ATT, conditioning on the treatment block.
ConditionalEmbedding cme_condition_on_treatment(const Observations& data, const KernelSet& kernels,
                                                double lambda1);

/// mu(v): embedding of P(x, w | v) for CATE, conditioning on the V block.
ConditionalEmbedding cme_condition_on_v(const Observations& data, const KernelSet& kernels, double lambda2);

/// Output Gram K_XX (.) K_WW of the (x, w) pairs that conditional embeddings
/// for ATT and CATE target; V is excluded.
GramMatrix reweighting_output_gram(const Observations& data, const KernelSet& kernels);

}  // namespace nckernel
