#include "nckernel/embeddings.hpp"

#include "nckernel/errors.hpp"

namespace nckernel {

MeanEmbedding::MeanEmbedding(Eigen::MatrixXd x, Eigen::MatrixXd w, KernelSpec x_kernel, KernelSpec w_kernel)
    : x_(std::move(x)), w_(std::move(w)), x_kernel_(std::move(x_kernel)), w_kernel_(std::move(w_kernel)) {
    if (x_.rows() == 0) throw InputError("mean embedding needs at least one reference sample");
    if (x_.rows() != w_.rows()) throw InputError("mean embedding: x and w reference counts differ");
    if (static_cast<std::size_t>(x_.cols()) != x_kernel_.dims() ||
        static_cast<std::size_t>(w_.cols()) != w_kernel_.dims()) {
        throw InputError("mean embedding: reference dimension does not match kernel");
    }
}

double MeanEmbedding::operator()(std::span<const double> x, std::span<const double> w) const {
    const Eigen::VectorXd kx = kernel_column(x_, x, x_kernel_);
    const Eigen::VectorXd kw = kernel_column(w_, w, w_kernel_);
    return kx.cwiseProduct(kw).sum() / static_cast<double>(x_.rows());
}

Eigen::VectorXd MeanEmbedding::weights() const {
    return Eigen::VectorXd::Constant(x_.rows(), 1.0 / static_cast<double>(x_.rows()));
}

MeanEmbedding mean_embed(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, const KernelSpec& x_kernel,
                         const KernelSpec& w_kernel) {
    return MeanEmbedding(x, w, x_kernel, w_kernel);
}

Eigen::MatrixXd cme_weights(const GramMatrix& k_bb, double lambda, const GramMatrix& k_bb_query) {
    if (!(lambda >= 0.0)) throw ConfigError("conditional embedding penalty must be nonnegative");
    const double n = static_cast<double>(k_bb.rows());
    return solve_ridge(k_bb, n * lambda, k_bb_query);
}

ConditionalEmbedding::ConditionalEmbedding(Eigen::MatrixXd conditioning, KernelSpec kernel, double lambda)
    : conditioning_(std::move(conditioning)), kernel_(std::move(kernel)), lambda_(lambda) {
    if (conditioning_.rows() == 0) throw InputError("conditional embedding needs samples");
    if (!(lambda_ > 0.0)) throw ConfigError("conditional embedding penalty must be positive");
    const GramMatrix k = gram(conditioning_, kernel_);
    system_ = std::make_shared<const RidgeSystem>(k, static_cast<double>(conditioning_.rows()) * lambda_);
}

Eigen::VectorXd ConditionalEmbedding::weights(std::span<const double> query) const {
    return system_->solve(kernel_column(conditioning_, query, kernel_));
}

Eigen::MatrixXd ConditionalEmbedding::weights(const Eigen::MatrixXd& queries) const {
    return system_->solve(gram(conditioning_, queries, kernel_));
}

ConditionalEmbedding cme_condition_on_treatment(const Observations& data, const KernelSet& kernels,
                                                double lambda1) {
    if (data.d.cols() == 0) throw InputError("ATT embedding needs a treatment block");
    return ConditionalEmbedding(data.d, kernels.d, lambda1);
}

ConditionalEmbedding cme_condition_on_v(const Observations& data, const KernelSet& kernels, double lambda2) {
    if (!data.has_v()) throw ConfigError("CATE requires a V block; none was provided");
    return ConditionalEmbedding(data.v, kernels.v, lambda2);
}

GramMatrix reweighting_output_gram(const Observations& data, const KernelSet& kernels) {
    GramMatrix out = gram(data.x, kernels.x);
    out.array() *= gram(data.w, kernels.w).array();
    return out;
}

}  // namespace nckernel
