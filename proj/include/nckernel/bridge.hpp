#pragma once

#include "nckernel/errors.hpp"
#include "nckernel/kernels.hpp"
#include "nckernel/observations.hpp"

#include <Eigen/Core>

namespace nckernel {

/// Numerical failure inside the bridge fit, tagged with the stage (1 or 2).
class BridgeSolveError : public NumericalError {
public:
    BridgeSolveError(int stage, const NumericalError& cause)
        : NumericalError("bridge stage " + std::to_string(stage) + ": " + cause.what(),
                         cause.attempted_jitters()),
          stage_(stage) {}

    int stage() const noexcept { return stage_; }

private:
    int stage_;
};

/// Stage-1 quantities of the bridge. Only depends on lambda, so the stage-2
/// penalty can be tuned against a fixed projection.
///
///   A  = K_DD (.) K_XX (.) K_ZZ                       n x n
///   A' = K_DD' (.) K_XX' (.) K_ZZ'                    n x m
///   B  = (A + n lambda I)^{-1} A'                     n x m
///   M  = K_D'D' (.) K_X'X' (.) {B^T K_WW B}           m x m, symmetrized
///
/// Here X stands for the full covariate block (V, X).
struct Stage1Projection {
    Eigen::MatrixXd a;
    Eigen::MatrixXd a_dot;  // empty when samples are reused (A' == A)
    Eigen::MatrixXd b;
    Eigen::MatrixXd k_ww;
    Eigen::MatrixXd m;
    double lambda = 0.0;
    bool reused = false;
};

/// Stage-1 samples carry (D, V, X, W, Z); stage-2 samples carry (Y, D, V, X, Z).
Stage1Projection project_stage1(const Observations& stage1, const Observations& stage2,
                                const KernelSet& kernels, double lambda);

/// Reused-sample specialization: A' = A, B = (A + n lambda I)^{-1} A.
Stage1Projection project_stage1(const Observations& sample, const KernelSet& kernels, double lambda);

/// Fitted confounding bridge h(d, v, x, w) = alpha^T [K_D'd (.) K_X'x (.) {B^T K_Ww}].
class BridgeModel {
public:
    const Observations& stage1() const noexcept { return stage1_; }
    const Observations& stage2() const noexcept { return stage2_; }
    const KernelSet& kernels() const noexcept { return kernels_; }

    const Eigen::MatrixXd& a() const noexcept { return projection_.a; }
    const Eigen::MatrixXd& a_dot() const noexcept {
        return projection_.reused ? projection_.a : projection_.a_dot;
    }
    const Eigen::MatrixXd& b() const noexcept { return projection_.b; }
    const Eigen::MatrixXd& m() const noexcept { return projection_.m; }
    const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
    /// B^T K_WW over the stage-1 W samples (m x n).
    const Eigen::MatrixXd& bt_kww() const noexcept { return bt_kww_; }

    double lambda() const noexcept { return projection_.lambda; }
    double xi() const noexcept { return xi_; }
    bool reused() const noexcept { return projection_.reused; }
    Eigen::Index n() const noexcept { return stage1_.size(); }
    Eigen::Index m_count() const noexcept { return stage2_.size(); }

    /// One value per query row. `v` may have zero columns when the bridge has no V.
    Eigen::VectorXd evaluate(const Eigen::MatrixXd& d, const Eigen::MatrixXd& v, const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& w) const;

    /// Replaces alpha; used by tests that probe the evaluation map.
    void set_alpha(Eigen::VectorXd alpha);

private:
    friend BridgeModel solve_stage2(Stage1Projection, const Observations&, const Observations&,
                                    const KernelSet&, double);

    Observations stage1_;
    Observations stage2_;
    KernelSet kernels_;
    Stage1Projection projection_;
    Eigen::MatrixXd bt_kww_;
    Eigen::VectorXd alpha_;
    double xi_ = 0.0;
};

/// alpha = (M M^T + m xi M)^{-1} M Y'
BridgeModel solve_stage2(Stage1Projection projection, const Observations& stage1, const Observations& stage2,
                         const KernelSet& kernels, double xi);

BridgeModel fit_bridge(const Observations& stage1, const Observations& stage2, const KernelSet& kernels,
                       double lambda, double xi);

/// Both stages on the same sample.
BridgeModel fit_bridge(const Observations& sample, const KernelSet& kernels, double lambda, double xi);

struct BridgeQuery {
    double d = 0.0;
    Eigen::VectorXd v;
    Eigen::VectorXd x;
    Eigen::VectorXd w;
};

double eval_bridge(const BridgeModel& model, const BridgeQuery& query);

/// In-sample stage-2 predictions M^T alpha.
Eigen::VectorXd stage2_fitted_values(const BridgeModel& model);

struct PenaltySchedule {
    double lambda = 0.0;
    double xi = 0.0;
};

/// Rate-optimal penalties from the smoothness exponents c0 (stage-1
/// conditional embedding) and c (bridge), both in (1, 2].
///
/// lambda = n^{-1/(c0+1)}. With reused samples xi = n^{-(c0-1)/((c0+1)(c+3))}.
/// Otherwise, with a = (c0-1) log n / ((c0+1) log m): xi = m^{-a/(c+3)} when
/// a <= (c+3)/(c+1) and xi = m^{-1/(c+1)} beyond.
PenaltySchedule theoretical_schedule(Eigen::Index n, Eigen::Index m, double c0, double c, bool reuse);

/// n^{-1/(c_j+1)}, the schedule of the ATT / CATE embedding penalties.
double embedding_schedule(Eigen::Index n, double c_j);

}  // namespace nckernel
