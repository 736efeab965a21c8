#include "nckernel/effects.hpp"

#include "nckernel/embeddings.hpp"
#include "nckernel/errors.hpp"

#include <string>

namespace nckernel {

namespace {

Eigen::MatrixXd column_of(const std::vector<double>& values) {
    if (values.empty()) throw InputError("treatment grid is empty");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Eigen::Index>(i), 0) = values[i];
    return out;
}

// values_g = alpha^T [K_D'g (.) weights], one entry per grid point.
std::vector<double> combine(const BridgeModel& model, const std::vector<double>& grid,
                            const Eigen::VectorXd& weights) {
    const GramMatrix k_grid = gram(model.stage2().d, column_of(grid), model.kernels().d);
    const Eigen::VectorXd values = (k_grid.array().colwise() * weights.array()).matrix().transpose() * model.alpha();
    return {values.data(), values.data() + values.size()};
}

EffectCurve make_curve(const BridgeModel& model, EffectKind kind, const std::vector<double>& grid,
                       std::vector<double> values) {
    EffectCurve curve;
    curve.kind = kind;
    curve.estimator = EstimatorTag::nc;
    curve.grid = grid;
    curve.values = std::move(values);
    curve.penalties.lambda = model.lambda();
    curve.penalties.xi = model.xi();
    curve.n = model.n();
    curve.m = model.m_count();
    return curve;
}

}  // namespace

std::string_view to_string(EffectKind kind) {
    switch (kind) {
        case EffectKind::ate: return "ate";
        case EffectKind::ds: return "ds";
        case EffectKind::att: return "att";
        case EffectKind::cate: return "cate";
    }
    return "?";
}

std::string_view to_string(EstimatorTag tag) { return tag == EstimatorTag::nc ? "NC" : "TE"; }

EffectKind parse_effect_kind(std::string_view text) {
    if (text == "ate") return EffectKind::ate;
    if (text == "ds") return EffectKind::ds;
    if (text == "att") return EffectKind::att;
    if (text == "cate") return EffectKind::cate;
    throw ConfigError("unknown effect kind '" + std::string(text) + "' (expected ate, ds, att or cate)");
}

EffectCurve estimate_ds(const BridgeModel& model, const std::vector<double>& grid, const Observations& alt) {
    const KernelSet& k = model.kernels();
    if (alt.x.rows() == 0) throw InputError("alternative population is empty");
    if (alt.x.cols() != model.stage1().x.cols() || alt.w.cols() != model.stage1().w.cols() ||
        alt.v.cols() != model.stage1().v.cols()) {
        throw InputError("alternative population columns do not match the bridge covariates");
    }
    if (alt.w.rows() != alt.x.rows() || (alt.v.cols() > 0 && alt.v.rows() != alt.x.rows())) {
        throw InputError("alternative population blocks differ in length");
    }
    GramMatrix reweight = covariate_gram(model.stage2().v, model.stage2().x, alt.v, alt.x, k);
    reweight.array() *= (model.b().transpose() * gram(model.stage1().w, alt.w, k.w)).array();
    const Eigen::VectorXd weights = reweight.rowwise().mean();

    EffectCurve curve = make_curve(model, EffectKind::ds, grid, combine(model, grid, weights));
    curve.n_alt = alt.x.rows();
    return curve;
}

EffectCurve estimate_ate(const BridgeModel& model, const std::vector<double>& grid) {
    EffectCurve curve = estimate_ds(model, grid, model.stage1());
    curve.kind = EffectKind::ate;
    curve.n_alt = 0;
    return curve;
}

EffectCurve estimate_att(const BridgeModel& model, const std::vector<double>& grid, double d_condition,
                         double lambda1) {
    const Observations& s1 = model.stage1();
    const KernelSet& k = model.kernels();
    const ConditionalEmbedding embedding = cme_condition_on_treatment(s1, k, lambda1);
    const double query[1] = {d_condition};
    const Eigen::VectorXd beta = embedding.weights(std::span<const double>(query, 1));

    GramMatrix reweight = covariate_gram(model.stage2().v, model.stage2().x, s1.v, s1.x, k);
    reweight.array() *= model.bt_kww().array();
    const Eigen::VectorXd weights = reweight * beta;

    EffectCurve curve = make_curve(model, EffectKind::att, grid, combine(model, grid, weights));
    curve.penalties.extra = lambda1;
    return curve;
}

EffectCurve estimate_cate(const BridgeModel& model, const std::vector<double>& grid,
                          const Eigen::VectorXd& v_condition, double lambda2) {
    const Observations& s1 = model.stage1();
    const KernelSet& k = model.kernels();
    if (!s1.has_v()) throw ConfigError("CATE requires a bridge fit with a V block");
    if (v_condition.size() != s1.v.cols()) throw InputError("CATE conditioning value has the wrong dimension");

    const ConditionalEmbedding embedding = cme_condition_on_v(s1, k, lambda2);
    const std::span<const double> v_span(v_condition.data(), static_cast<std::size_t>(v_condition.size()));
    const Eigen::VectorXd beta = embedding.weights(v_span);

    GramMatrix reweight = gram(model.stage2().x, s1.x, k.x);
    reweight.array() *= model.bt_kww().array();
    Eigen::VectorXd weights = reweight * beta;
    weights.array() *= kernel_column(model.stage2().v, v_span, k.v).array();

    EffectCurve curve = make_curve(model, EffectKind::cate, grid, combine(model, grid, weights));
    curve.penalties.extra = lambda2;
    return curve;
}

BaselineFit estimate_te_baseline(const Observations& data, const KernelSet& kernels,
                                 const std::vector<double>& grid, std::optional<double> lambda,
                                 const std::vector<double>& penalty_grid) {
    validate_blocks(data, kernels, true, true, true, true);
    // Everything except D is treated as a covariate of the regression.
    GramMatrix rest = covariate_gram(data.v, data.x, data.v, data.x, kernels);
    rest.array() *= gram(data.z, kernels.z).array();
    rest.array() *= gram(data.w, kernels.w).array();
    GramMatrix k_full = gram(data.d, kernels.d);
    k_full.array() *= rest.array();

    BaselineFit fit;
    double chosen = 0.0;
    if (lambda) {
        chosen = *lambda;
    } else {
        fit.report = loocv_scalar(k_full, data.y, penalty_grid);
        chosen = fit.report->selected;
    }
    if (!(chosen > 0.0)) throw ConfigError("baseline penalty must be positive");

    const double n = static_cast<double>(data.size());
    const Eigen::VectorXd coef = RidgeSystem(k_full, n * chosen).solve(data.y);
    const Eigen::VectorXd weights = rest.rowwise().mean();
    const GramMatrix k_grid = gram(data.d, column_of(grid), kernels.d);
    const Eigen::VectorXd values = (k_grid.array().colwise() * weights.array()).matrix().transpose() * coef;

    fit.curve.kind = EffectKind::ate;
    fit.curve.estimator = EstimatorTag::te;
    fit.curve.grid = grid;
    fit.curve.values.assign(values.data(), values.data() + values.size());
    fit.curve.penalties.lambda = chosen;
    fit.curve.n = data.size();
    fit.curve.m = data.size();
    return fit;
}

}  // namespace nckernel
