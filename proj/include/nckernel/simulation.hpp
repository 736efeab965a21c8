#pragma once

#include "nckernel/dataset.hpp"
#include "nckernel/effects.hpp"
#include "nckernel/pipeline.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nckernel {

enum class DesignKind { quadratic, sigmoid, peaked, no_confounding, discrete };

std::string_view to_string(DesignKind kind);
DesignKind parse_design_kind(std::string_view text);

struct SimDesign {
    DesignKind kind = DesignKind::quadratic;
    Eigen::Index n = 100;
    int dim_x = 5;
    int dim_z = 1;
    int dim_w = 1;

    /// 0.25, or 0.5 for the discrete design.
    double confounding_scale() const noexcept;
    bool continuous() const noexcept { return kind != DesignKind::discrete; }
    void validate() const;
};

/// [beta]_j = j^{-2}, j = 1..dim
Eigen::VectorXd decaying_coefficients(int dim);

/// 0.1 + 0.8 e^t / (1 + e^t)
double logistic_link(double t);

/// theta_0(d). The discrete design's curve is 2.2 d on {0, 1}.
double true_curve(DesignKind kind, double d);

/// One draw of the design. Every noise source has its own random stream keyed
/// by (seed, replicate, source), so changing a dimension or the sample size of
/// one block leaves the draws of the others untouched.
Dataset generate(const SimDesign& design, std::uint64_t seed, std::uint32_t replicate);

/// Where continuous curves are scored: 100 equally spaced points on
/// [0.1, 0.9]. The discrete design uses {0, 1}.
std::vector<double> evaluation_grid(const SimDesign& design);

/// Continuous designs: mean squared deviation of the curve from theta_0 on
/// the grid. Discrete design: the point estimate theta(1) - theta(0).
double score_curve(const SimDesign& design, const EffectCurve& curve);

struct ReplicateRecord {
    std::uint32_t replicate = 0;
    std::uint64_t seed = 0;
    double value = 0.0;
    EffectPenalties penalties;
    bool failed = false;
    std::string error;
};

struct Aggregate {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;  // n - 1 denominator; 0 for a single replicate
    double mse = 0.0;
    double median = 0.0;
};

/// Statistics over the values in replicate order. For the discrete design
/// mse is mean((value - truth)^2); for continuous designs the values are
/// already squared errors and mse is their mean.
Aggregate aggregate(const std::vector<double>& values, const SimDesign& design);

struct ReplicateReport {
    SimDesign design;
    EstimatorTag estimator = EstimatorTag::nc;
    std::vector<ReplicateRecord> records;
    Aggregate summary;
    std::vector<double> grid;
    std::size_t failed = 0;
};

struct ExperimentOptions {
    std::size_t replicates = 100;
    std::uint64_t seed = 0;
    bool run_nc = true;
    bool run_te = true;
    TuningConfig tuning;
    std::size_t workers = 1;
    /// Keep going past failed replicates and leave them out of the aggregates.
    bool skip_failed = false;
};

/// Replicates run on `workers` threads; results are folded in replicate order
/// so the reports do not depend on scheduling. One report per requested
/// estimator, N.C. first.
std::vector<ReplicateReport> run_experiment(const SimDesign& design, const ExperimentOptions& options);

/// A batch over design and penalty variants. Empty lists keep the base value.
struct SweepSpec {
    std::vector<Eigen::Index> n;
    std::vector<int> dim_x;
    std::vector<int> dim_z;
    std::vector<int> dim_w;
    std::vector<double> forced_lambda;
    std::vector<double> forced_xi;
};

struct SweepPoint {
    SimDesign design;
    TuningConfig tuning;
};

/// Cartesian product in the order n, dim_x, dim_z, dim_w, lambda, xi (the
/// last varies fastest). A forced penalty pins that penalty and leaves the
/// other to the base tuning mode.
std::vector<SweepPoint> expand_sweep(const SimDesign& base, const TuningConfig& tuning, const SweepSpec& sweep);

}  // namespace nckernel
