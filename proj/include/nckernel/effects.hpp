#pragma once

#include "nckernel/bridge.hpp"
#include "nckernel/observations.hpp"
#include "nckernel/ridge.hpp"

#include <Eigen/Core>

#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace nckernel {

enum class EffectKind { ate, ds, att, cate };
enum class EstimatorTag { nc, te };

std::string_view to_string(EffectKind kind);
std::string_view to_string(EstimatorTag tag);
EffectKind parse_effect_kind(std::string_view text);

struct EffectPenalties {
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double xi = std::numeric_limits<double>::quiet_NaN();
    /// lambda1 for ATT, lambda2 for CATE.
    double extra = std::numeric_limits<double>::quiet_NaN();
};

struct EffectCurve {
    EffectKind kind = EffectKind::ate;
    EstimatorTag estimator = EstimatorTag::nc;
    std::vector<double> grid;
    std::vector<double> values;
    EffectPenalties penalties;
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    Eigen::Index n_alt = 0;
};

/// theta(d) = n^{-1} sum_i h(d, x_i, w_i) over the stage-1 (v, x, w) samples.
EffectCurve estimate_ate(const BridgeModel& model, const std::vector<double>& grid);

/// ATE reweighted by an alternative population; `alt` carries (v, x, w).
EffectCurve estimate_ds(const BridgeModel& model, const std::vector<double>& grid, const Observations& alt);

/// theta(d, d') over grid values d' for the population treated at `d_condition`.
EffectCurve estimate_att(const BridgeModel& model, const std::vector<double>& grid, double d_condition,
                         double lambda1);

/// theta(d, v). The bridge must have been fit with V in its covariate block.
EffectCurve estimate_cate(const BridgeModel& model, const std::vector<double>& grid,
                          const Eigen::VectorXd& v_condition, double lambda2);

struct BaselineFit {
    EffectCurve curve;
    std::optional<TuneReport> report;  // absent when the penalty was fixed
};

/// Regression comparator: kernel ridge regression of Y on (D, V, X, Z, W),
/// then curve(d) = n^{-1} sum_i gamma(d, v_i, x_i, z_i, w_i). The penalty is
/// fixed when `lambda` is given and tuned by closed-form LOOCV over `grid`
/// otherwise.
BaselineFit estimate_te_baseline(const Observations& data, const KernelSet& kernels,
                                 const std::vector<double>& grid, std::optional<double> lambda,
                                 const std::vector<double>& penalty_grid);

}  // namespace nckernel
