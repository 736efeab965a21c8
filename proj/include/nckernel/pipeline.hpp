#pragma once

#include "nckernel/effects.hpp"
#include "nckernel/errors.hpp"
#include "nckernel/kernels.hpp"
#include "nckernel/observations.hpp"
#include "nckernel/ridge.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nckernel {

enum class Role { y, d, v, x, w, z };

std::string_view to_string(Role role);

/// Per-block kernel choice. A column declared categorical gets an indicator
/// kernel; every other column gets a Gaussian kernel whose lengthscale is the
/// override when present and the median heuristic otherwise.
struct KernelPolicy {
    std::map<Role, std::vector<KernelFamily>> families;             // missing block => all Gaussian
    std::map<std::pair<Role, int>, double> lengthscale_overrides;  // (block, column index)
};

KernelSet choose_kernels(const Observations& data, const KernelPolicy& policy);

enum class TuningMode { loocv, theoretical, forced };

std::string_view to_string(TuningMode mode);
TuningMode parse_tuning_mode(std::string_view text);

/// Smoothness exponents of the theoretical schedule, each in (1, 2].
struct Smoothness {
    double c0 = 2.0;  // stage-1 conditional embedding
    double c = 2.0;   // confounding bridge
    double c1 = 2.0;  // ATT embedding
    double c2 = 2.0;  // CATE embedding
};

/// How the ridge penalties are chosen.
///
/// loocv: each penalty is tuned by closed-form leave-one-out, lambda first
/// and then xi given lambda. A value set here pins that penalty and the rest
/// are still tuned, which is how robustness sweeps force one penalty.
/// theoretical: rate schedules from `smoothness`.
/// forced: lambda and xi must be given; an unset ATT/CATE penalty is tuned.
struct TuningConfig {
    TuningMode mode = TuningMode::loocv;
    std::optional<double> lambda;
    std::optional<double> xi;
    std::optional<double> lambda_extra;
    Smoothness smoothness;
    std::vector<double> grid = default_penalty_grid();
};

struct EffectRequest {
    EffectKind kind = EffectKind::ate;
    std::vector<double> grid;  // empty => default grid from the observed treatment
    std::optional<Observations> alt;
    double d_condition = 0.0;
    Eigen::VectorXd v_condition;
    bool baseline = false;  // also run the regression comparator (ATE only)
};

struct NamedTuneReport {
    std::string penalty;  // lambda | xi | lambda1 | lambda2 | lambda_te
    TuneReport report;
};

struct PipelineResult {
    EffectCurve curve;
    std::optional<EffectCurve> baseline;
    KernelSet kernels;
    std::vector<NamedTuneReport> tuning;
};

/// Failure inside run_end_to_end, tagged with the step (1..5) it arose in.
/// Keeps the category of the underlying error.
class PipelineError : public Error {
public:
    PipelineError(int step, const Error& cause);

    int step() const noexcept { return step_; }

private:
    int step_;
};

/// 100 equally spaced points between the 1st and 99th percentile of the
/// treatment, or the sorted distinct codes of a categorical treatment.
std::vector<double> default_treatment_grid(const Eigen::MatrixXd& d, bool categorical, std::size_t points = 100);

/// Linear-interpolation sample quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Kernels, penalties, bridge on reused samples, embedding, combination.
PipelineResult run_end_to_end(const Observations& data, const KernelPolicy& policy, const EffectRequest& request,
                              const TuningConfig& tuning);

}  // namespace nckernel
