#include "nckernel/bridge.hpp"

#include "nckernel/ridge.hpp"

#include <cmath>

namespace nckernel {

namespace {

GramMatrix instrument_gram(const Observations& rows, const Observations& cols, const KernelSet& k) {
    GramMatrix out = gram(rows.d, cols.d, k.d);
    out.array() *= covariate_gram(rows.v, rows.x, cols.v, cols.x, k).array();
    out.array() *= gram(rows.z, cols.z, k.z).array();
    return out;
}

GramMatrix covariate_block_gram(const Observations& sample, const KernelSet& k) {
    GramMatrix out = gram(sample.x, k.x);
    if (!k.v.empty()) out.array() *= gram(sample.v, k.v).array();
    return out;
}

GramMatrix instrument_gram(const Observations& sample, const KernelSet& k) {
    GramMatrix out = gram(sample.d, k.d);
    out.array() *= covariate_block_gram(sample, k).array();
    out.array() *= gram(sample.z, k.z).array();
    return out;
}

GramMatrix treatment_covariate_gram(const Observations& sample, const KernelSet& k) {
    GramMatrix out = gram(sample.d, k.d);
    out.array() *= covariate_block_gram(sample, k).array();
    return out;
}

void check_smoothness(double value, const char* name) {
    if (!(value > 1.0 && value <= 2.0)) {
        throw ConfigError(std::string("smoothness ") + name + " must lie in (1, 2], got " + std::to_string(value));
    }
}

Stage1Projection finish_projection(Stage1Projection p, const Observations& stage1, const Observations& stage2,
                                   const KernelSet& kernels, double lambda) {
    const double n = static_cast<double>(stage1.size());
    try {
        p.b = solve_ridge(p.a, n * lambda, p.reused ? p.a : p.a_dot);
    } catch (const NumericalError& e) {
        throw BridgeSolveError(1, e);
    }
    p.k_ww = gram(stage1.w, kernels.w);
    const Eigen::MatrixXd inner = p.b.transpose() * p.k_ww * p.b;
    p.m = treatment_covariate_gram(stage2, kernels);
    p.m.array() *= inner.array();
    const Eigen::MatrixXd sym = 0.5 * (p.m + p.m.transpose());
    p.m = sym;
    p.lambda = lambda;
    return p;
}

}  // namespace

Stage1Projection project_stage1(const Observations& stage1, const Observations& stage2,
                                const KernelSet& kernels, double lambda) {
    validate_blocks(stage1, kernels, false, true, true, true);
    validate_blocks(stage2, kernels, true, true, false, true);
    if (!(lambda > 0.0)) throw ConfigError("stage-1 penalty lambda must be positive");
    Stage1Projection p;
    p.a = instrument_gram(stage1, kernels);
    p.a_dot = instrument_gram(stage1, stage2, kernels);
    return finish_projection(std::move(p), stage1, stage2, kernels, lambda);
}

Stage1Projection project_stage1(const Observations& sample, const KernelSet& kernels, double lambda) {
    validate_blocks(sample, kernels, true, true, true, true);
    if (!(lambda > 0.0)) throw ConfigError("stage-1 penalty lambda must be positive");
    Stage1Projection p;
    p.reused = true;
    p.a = instrument_gram(sample, kernels);
    return finish_projection(std::move(p), sample, sample, kernels, lambda);
}

BridgeModel solve_stage2(Stage1Projection projection, const Observations& stage1, const Observations& stage2,
                         const KernelSet& kernels, double xi) {
    if (!(xi > 0.0)) throw ConfigError("stage-2 penalty xi must be positive");
    const Eigen::MatrixXd& m = projection.m;
    const double m_count = static_cast<double>(m.rows());

    Eigen::MatrixXd system = m * m.transpose();
    system = 0.5 * (system + system.transpose()).eval();
    system += m_count * xi * m;
    const Eigen::VectorXd rhs = m * stage2.y;

    BridgeModel model;
    try {
        model.alpha_ = RidgeSystem(system, 0.0).solve(rhs);
    } catch (const NumericalError& e) {
        throw BridgeSolveError(2, e);
    }
    if (!model.alpha_.allFinite()) {
        throw BridgeSolveError(2, NumericalError("bridge coefficients are not finite"));
    }
    model.bt_kww_ = projection.b.transpose() * projection.k_ww;
    model.stage1_ = stage1;
    model.stage2_ = stage2;
    model.kernels_ = kernels;
    model.projection_ = std::move(projection);
    model.xi_ = xi;
    return model;
}

BridgeModel fit_bridge(const Observations& stage1, const Observations& stage2, const KernelSet& kernels,
                       double lambda, double xi) {
    return solve_stage2(project_stage1(stage1, stage2, kernels, lambda), stage1, stage2, kernels, xi);
}

BridgeModel fit_bridge(const Observations& sample, const KernelSet& kernels, double lambda, double xi) {
    return solve_stage2(project_stage1(sample, kernels, lambda), sample, sample, kernels, xi);
}

Eigen::VectorXd BridgeModel::evaluate(const Eigen::MatrixXd& d, const Eigen::MatrixXd& v,
                                      const Eigen::MatrixXd& x, const Eigen::MatrixXd& w) const {
    GramMatrix features = gram(stage2_.d, d, kernels_.d);
    features.array() *= covariate_gram(stage2_.v, stage2_.x, v, x, kernels_).array();
    const Eigen::MatrixXd bw = projection_.b.transpose() * gram(stage1_.w, w, kernels_.w);
    features.array() *= bw.array();
    return features.transpose() * alpha_;
}

void BridgeModel::set_alpha(Eigen::VectorXd alpha) {
    if (alpha.size() != alpha_.size()) throw InputError("alpha has the wrong length");
    alpha_ = std::move(alpha);
}

double eval_bridge(const BridgeModel& model, const BridgeQuery& q) {
    auto row = [](const Eigen::VectorXd& v) { return Eigen::MatrixXd(v.transpose()); };
    Eigen::MatrixXd d(1, 1);
    d(0, 0) = q.d;
    Eigen::MatrixXd v = q.v.size() > 0 ? row(q.v) : Eigen::MatrixXd(1, 0);
    return model.evaluate(d, v, row(q.x), row(q.w))(0);
}

Eigen::VectorXd stage2_fitted_values(const BridgeModel& model) { return model.m().transpose() * model.alpha(); }

PenaltySchedule theoretical_schedule(Eigen::Index n, Eigen::Index m, double c0, double c, bool reuse) {
    if (n < 1 || m < 1) throw ConfigError("sample counts must be positive");
    check_smoothness(c0, "c0");
    check_smoothness(c, "c");
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    PenaltySchedule out;
    out.lambda = std::pow(nn, -1.0 / (c0 + 1.0));
    if (reuse) {
        out.xi = std::pow(nn, -(c0 - 1.0) / ((c0 + 1.0) * (c + 3.0)));
        return out;
    }
    if (m == 1) {
        out.xi = 1.0;
        return out;
    }
    const double a = (c0 - 1.0) * std::log(nn) / ((c0 + 1.0) * std::log(mm));
    if (a <= (c + 3.0) / (c + 1.0)) {
        out.xi = std::pow(mm, -a / (c + 3.0));
    } else {
        out.xi = std::pow(mm, -1.0 / (c + 1.0));
    }
    return out;
}

double embedding_schedule(Eigen::Index n, double c_j) {
    if (n < 1) throw ConfigError("sample count must be positive");
    check_smoothness(c_j, "c_j");
    return std::pow(static_cast<double>(n), -1.0 / (c_j + 1.0));
}

}  // namespace nckernel
