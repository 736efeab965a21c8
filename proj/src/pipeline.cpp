#include "nckernel/pipeline.hpp"

#include "nckernel/bridge.hpp"
#include "nckernel/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace nckernel {

namespace {

const char* step_name(int step) {
    switch (step) {
        case 1: return "kernels";
        case 2: return "penalties";
        case 3: return "bridge";
        case 4: return "embedding";
        case 5: return "combination";
    }
    return "?";
}

template <typename F>
auto in_step(int step, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const PipelineError&) {
        throw;
    } catch (const Error& e) {
        throw PipelineError(step, e);
    }
}

KernelSpec block_spec(const Eigen::MatrixXd& block, Role role, const KernelPolicy& policy) {
    std::vector<ColumnKernel> cols;
    const auto fam = policy.families.find(role);
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
        const bool categorical = fam != policy.families.end() && static_cast<std::size_t>(j) < fam->second.size() &&
                                 fam->second[static_cast<std::size_t>(j)] == KernelFamily::indicator;
        if (categorical) {
            cols.push_back(ColumnKernel::indicator());
            continue;
        }
        const auto override_it = policy.lengthscale_overrides.find({role, static_cast<int>(j)});
        if (override_it != policy.lengthscale_overrides.end()) {
            cols.push_back(ColumnKernel::gaussian(override_it->second));
            continue;
        }
        try {
            cols.push_back(ColumnKernel::gaussian(median_heuristic(block, j)));
        } catch (const DegenerateScaleError& e) {
            throw DegenerateScaleError("block " + std::string(to_string(role)) + ", column " + std::to_string(j) +
                                           ": all values identical; supply an explicit lengthscale or drop the column",
                                       e.column());
        }
    }
    return KernelSpec(std::move(cols));
}

bool is_categorical(const KernelPolicy& policy, Role role) {
    const auto fam = policy.families.find(role);
    return fam != policy.families.end() && !fam->second.empty() && fam->second.front() == KernelFamily::indicator;
}

}  // namespace

std::string_view to_string(Role role) {
    switch (role) {
        case Role::y: return "Y";
        case Role::d: return "D";
        case Role::v: return "V";
        case Role::x: return "X";
        case Role::w: return "W";
        case Role::z: return "Z";
    }
    return "?";
}

std::string_view to_string(TuningMode mode) {
    switch (mode) {
        case TuningMode::loocv: return "loocv";
        case TuningMode::theoretical: return "theoretical";
        case TuningMode::forced: return "forced";
    }
    return "?";
}

TuningMode parse_tuning_mode(std::string_view text) {
    if (text == "loocv") return TuningMode::loocv;
    if (text == "theoretical") return TuningMode::theoretical;
    if (text == "forced") return TuningMode::forced;
    throw ConfigError("unknown tuning mode '" + std::string(text) + "' (expected loocv, theoretical or forced)");
}

PipelineError::PipelineError(int step, const Error& cause)
    : Error(cause.category(), "step " + std::to_string(step) + " (" + step_name(step) + "): " + cause.what()),
      step_(step) {}

KernelSet choose_kernels(const Observations& data, const KernelPolicy& policy) {
    KernelSet k;
    k.d = block_spec(data.d, Role::d, policy);
    k.v = block_spec(data.v, Role::v, policy);
    k.x = block_spec(data.x, Role::x, policy);
    k.w = block_spec(data.w, Role::w, policy);
    k.z = block_spec(data.z, Role::z, policy);
    return k;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InputError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> default_treatment_grid(const Eigen::MatrixXd& d, bool categorical, std::size_t points) {
    if (d.rows() == 0 || d.cols() != 1) throw InputError("treatment must be a single nonempty column");
    std::vector<double> values(d.data(), d.data() + d.rows());
    if (categorical) {
        std::set<double> distinct(values.begin(), values.end());
        return {distinct.begin(), distinct.end()};
    }
    const double lo = quantile(values, 0.01);
    const double hi = quantile(values, 0.99);
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return grid;
}

PipelineResult run_end_to_end(const Observations& data, const KernelPolicy& policy, const EffectRequest& request,
                              const TuningConfig& tuning) {
    PipelineResult result;
    const Eigen::Index n = data.size();

    // 1. kernels
    result.kernels = in_step(1, [&] {
        const KernelSet k = choose_kernels(data, policy);
        validate_blocks(data, k, true, true, true, true);
        if (request.kind == EffectKind::cate && !data.has_v()) {
            throw ConfigError("CATE requires a V block; none was provided");
        }
        if (request.kind == EffectKind::ds && !request.alt) {
            throw ConfigError("distribution-shift effect requires an alternative population");
        }
        if (request.baseline && request.kind != EffectKind::ate) {
            throw ConfigError("the regression comparator is only defined for the ATE dose response");
        }
        return k;
    });
    const KernelSet& kernels = result.kernels;
    const std::vector<double> grid =
        request.grid.empty() ? in_step(1, [&] { return default_treatment_grid(data.d, is_categorical(policy, Role::d)); })
                             : request.grid;

    // 2. stage-1 penalty
    const double lambda = in_step(2, [&] {
        if (tuning.mode == TuningMode::theoretical) {
            return theoretical_schedule(n, n, tuning.smoothness.c0, tuning.smoothness.c, true).lambda;
        }
        if (tuning.mode == TuningMode::forced && !tuning.lambda) throw ConfigError("forced tuning requires lambda");
        if (tuning.lambda) {
            if (!(*tuning.lambda > 0.0)) throw ConfigError("forced lambda must be positive");
            return *tuning.lambda;
        }
        GramMatrix a = gram(data.d, kernels.d);
        a.array() *= covariate_gram(data.v, data.x, data.v, data.x, kernels).array();
        a.array() *= gram(data.z, kernels.z).array();
        TuneReport report = loocv_embedding(a, gram(data.w, kernels.w), tuning.grid);
        const double selected = report.selected;
        result.tuning.push_back({"lambda", std::move(report)});
        return selected;
    });

    // 3a. stage-1 projection
    Stage1Projection projection = in_step(3, [&] { return project_stage1(data, kernels, lambda); });

    // 2b. stage-2 penalty given lambda
    const double xi = in_step(2, [&] {
        if (tuning.mode == TuningMode::theoretical) {
            return theoretical_schedule(n, n, tuning.smoothness.c0, tuning.smoothness.c, true).xi;
        }
        if (tuning.mode == TuningMode::forced && !tuning.xi) throw ConfigError("forced tuning requires xi");
        if (tuning.xi) {
            if (!(*tuning.xi > 0.0)) throw ConfigError("forced xi must be positive");
            return *tuning.xi;
        }
        TuneReport report = loocv_scalar(projection.m, data.y, tuning.grid);
        const double selected = report.selected;
        result.tuning.push_back({"xi", std::move(report)});
        return selected;
    });

    // 3b. bridge coefficients
    const BridgeModel model =
        in_step(3, [&] { return solve_stage2(std::move(projection), data, data, kernels, xi); });

    // 4. embedding penalty for ATT / CATE
    double extra = std::numeric_limits<double>::quiet_NaN();
    if (request.kind == EffectKind::att || request.kind == EffectKind::cate) {
        const bool att = request.kind == EffectKind::att;
        extra = in_step(4, [&] {
            if (tuning.mode == TuningMode::theoretical) {
                return embedding_schedule(n, att ? tuning.smoothness.c1 : tuning.smoothness.c2);
            }
            if (tuning.lambda_extra) {
                if (!(*tuning.lambda_extra > 0.0)) throw ConfigError("forced embedding penalty must be positive");
                return *tuning.lambda_extra;
            }
            const GramMatrix input = att ? gram(data.d, kernels.d) : gram(data.v, kernels.v);
            TuneReport report = loocv_embedding(input, reweighting_output_gram(data, kernels), tuning.grid);
            const double selected = report.selected;
            result.tuning.push_back({att ? "lambda1" : "lambda2", std::move(report)});
            return selected;
        });
    }

    // 5. combination
    result.curve = in_step(5, [&] {
        switch (request.kind) {
            case EffectKind::ate: return estimate_ate(model, grid);
            case EffectKind::ds: return estimate_ds(model, grid, *request.alt);
            case EffectKind::att: return estimate_att(model, grid, request.d_condition, extra);
            case EffectKind::cate: return estimate_cate(model, grid, request.v_condition, extra);
        }
        throw ConfigError("unknown effect kind");
    });

    if (request.baseline) {
        BaselineFit te = in_step(5, [&] {
            std::optional<double> fixed;
            return estimate_te_baseline(data, kernels, grid, fixed, tuning.grid);
        });
        if (te.report) result.tuning.push_back({"lambda_te", std::move(*te.report)});
        result.baseline = std::move(te.curve);
    }
    return result;
}

}  // namespace nckernel
