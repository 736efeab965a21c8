#include "nckernel/simulation.hpp"

#include "nckernel/errors.hpp"
#include "nckernel/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace nckernel {

namespace {

// Substream ids of the noise sources.
enum Source : std::uint32_t { eps1 = 1, eps2, eps3, eps4, nu_z, nu_w, cov_x, treat };

std::vector<double> normals(std::uint64_t seed, std::uint32_t replicate, Source source, Eigen::Index n) {
    RandomStream rs(seed, replicate, source);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = rs.normal();
    return out;
}

Eigen::MatrixXd uniform_block(std::uint64_t seed, std::uint32_t replicate, Source source, Eigen::Index n,
                              int dim) {
    RandomStream rs(seed, replicate, source);
    Eigen::MatrixXd out(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) out(i, j) = rs.uniform(-1.0, 1.0);
    }
    return out;
}

Column make_column(std::string name, Role role, std::vector<double> values,
                   ColumnFamily family = ColumnFamily::continuous) {
    Column c;
    c.name = std::move(name);
    c.role = role;
    c.family = family;
    c.values = std::move(values);
    return c;
}

void add_block(Dataset& data, const std::string& prefix, Role role, const Eigen::MatrixXd& block) {
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
        std::vector<double> values(static_cast<std::size_t>(block.rows()));
        for (Eigen::Index i = 0; i < block.rows(); ++i) values[static_cast<std::size_t>(i)] = block(i, j);
        data.add_column(make_column(prefix + std::to_string(j + 1), role, std::move(values)));
    }
}

double sign(double t) { return static_cast<double>((t > 0.0) - (t < 0.0)); }

}  // namespace

std::string_view to_string(DesignKind kind) {
    switch (kind) {
        case DesignKind::quadratic: return "quadratic";
        case DesignKind::sigmoid: return "sigmoid";
        case DesignKind::peaked: return "peaked";
        case DesignKind::no_confounding: return "no-confounding";
        case DesignKind::discrete: return "discrete";
    }
    return "unknown";
}

DesignKind parse_design_kind(std::string_view text) {
    for (DesignKind k : {DesignKind::quadratic, DesignKind::sigmoid, DesignKind::peaked,
                         DesignKind::no_confounding, DesignKind::discrete}) {
        if (text == to_string(k)) return k;
    }
    if (text == "no_confounding") return DesignKind::no_confounding;
    throw ConfigError("unknown design '" + std::string(text) +
                      "' (expected quadratic, sigmoid, peaked, no-confounding or discrete)");
}

double SimDesign::confounding_scale() const noexcept { return kind == DesignKind::discrete ? 0.5 : 0.25; }

void SimDesign::validate() const {
    if (n < 1) throw ConfigError("design sample size must be at least 1");
    if (dim_x < 1 || dim_z < 1 || dim_w < 1) throw ConfigError("design dimensions must be at least 1");
}

Eigen::VectorXd decaying_coefficients(int dim) {
    Eigen::VectorXd beta(dim);
    for (int j = 0; j < dim; ++j) beta(j) = 1.0 / (static_cast<double>(j + 1) * static_cast<double>(j + 1));
    return beta;
}

double logistic_link(double t) { return 0.1 + 0.8 / (1.0 + std::exp(-t)); }

double true_curve(DesignKind kind, double d) {
    switch (kind) {
        case DesignKind::quadratic:
        case DesignKind::no_confounding: return d * d + 1.2 * d;
        case DesignKind::sigmoid: return std::log(std::abs(16.0 * d - 8.0) + 1.0) * sign(d - 0.5) + 1.2 * d;
        case DesignKind::peaked:
            return 2.0 * (std::pow(d, 4) / 600.0 + std::exp(-4.0 * d * d) + d / 10.0 - 2.0) + 1.2 * d;
        case DesignKind::discrete: return 2.2 * d;
    }
    return 0.0;
}

Dataset generate(const SimDesign& design, std::uint64_t seed, std::uint32_t replicate) {
    design.validate();
    const Eigen::Index n = design.n;
    const double scale = design.confounding_scale();
    const bool no_conf = design.kind == DesignKind::no_confounding;

    const auto e1 = normals(seed, replicate, eps1, n);
    const auto e2 = normals(seed, replicate, eps2, n);
    const auto e3 = normals(seed, replicate, eps3, n);
    std::vector<double> e4;
    if (no_conf) e4 = normals(seed, replicate, eps4, n);

    Eigen::VectorXd u_z(n), u_w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        u_z(i) = no_conf ? e1[k] + e2[k] : e1[k] + e3[k];
        u_w(i) = no_conf ? e3[k] + e4[k] : e2[k] + e3[k];
    }

    Eigen::MatrixXd z = uniform_block(seed, replicate, nu_z, n, design.dim_z);
    Eigen::MatrixXd w = uniform_block(seed, replicate, nu_w, n, design.dim_w);
    z.colwise() += scale * u_z;
    w.colwise() += scale * u_w;

    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(design.dim_x, design.dim_x);
    for (int j = 0; j + 1 < design.dim_x; ++j) sigma(j, j + 1) = sigma(j + 1, j) = 0.5;
    const Eigen::MatrixXd chol = sigma.llt().matrixL();
    Eigen::MatrixXd x(n, design.dim_x);
    {
        RandomStream rs(seed, replicate, cov_x);
        Eigen::VectorXd draw(design.dim_x);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int j = 0; j < design.dim_x; ++j) draw(j) = rs.normal();
            x.row(i) = (chol * draw).transpose();
        }
    }

    const Eigen::VectorXd xb = x * decaying_coefficients(design.dim_x);
    const Eigen::VectorXd zb = z * decaying_coefficients(design.dim_z);
    const Eigen::VectorXd wb = w * decaying_coefficients(design.dim_w);

    std::vector<double> d(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    RandomStream treatment(seed, replicate, treat);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        double di = 0.0;
        double yi = 0.0;
        switch (design.kind) {
            case DesignKind::quadratic:
            case DesignKind::sigmoid:
            case DesignKind::peaked:
                di = logistic_link(3.0 * xb(i) + 3.0 * zb(i)) + scale * u_w(i);
                yi = true_curve(design.kind, di) + 1.2 * (xb(i) + wb(i)) + di * x(i, 0) + scale * u_z(i);
                break;
            case DesignKind::no_confounding:
                di = logistic_link(3.0 * xb(i)) + scale * u_w(i);
                yi = true_curve(design.kind, di) + 1.2 * xb(i) + di * x(i, 0) + scale * u_z(i);
                break;
            case DesignKind::discrete:
                di = treatment.bernoulli(logistic_link(xb(i) + zb(i) + u_w(i))) ? 1.0 : 0.0;
                yi = true_curve(design.kind, di) + 1.2 * (xb(i) + wb(i)) + di * x(i, 0) + scale * u_z(i);
                break;
        }
        d[k] = di;
        y[k] = yi;
    }

    Dataset data;
    data.add_column(make_column("y", Role::y, std::move(y)));
    data.add_column(make_column("d", Role::d, std::move(d),
                                design.continuous() ? ColumnFamily::continuous : ColumnFamily::categorical));
    add_block(data, "x", Role::x, x);
    add_block(data, "w", Role::w, w);
    add_block(data, "z", Role::z, z);
    return data;
}

std::vector<double> evaluation_grid(const SimDesign& design) {
    if (!design.continuous()) return {0.0, 1.0};
    std::vector<double> grid(100);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 0.1 + 0.8 * static_cast<double>(i) / 99.0;
    return grid;
}

double score_curve(const SimDesign& design, const EffectCurve& curve) {
    if (!design.continuous()) {
        if (curve.values.size() != 2) throw InputError("discrete design expects a curve on {0, 1}");
        return curve.values[1] - curve.values[0];
    }
    if (curve.values.empty()) throw InputError("cannot score an empty curve");
    double total = 0.0;
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        const double e = curve.values[i] - true_curve(design.kind, curve.grid[i]);
        total += e * e;
    }
    return total / static_cast<double>(curve.values.size());
}

Aggregate aggregate(const std::vector<double>& values, const SimDesign& design) {
    Aggregate a;
    a.count = values.size();
    if (values.empty()) {
        a.mean = a.sd = a.mse = a.median = std::numeric_limits<double>::quiet_NaN();
        return a;
    }
    const double count = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / count;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.sd = std::sqrt(ss / (count - 1.0));
    }
    if (design.continuous()) {
        a.mse = a.mean;
    } else {
        const double truth = true_curve(design.kind, 1.0) - true_curve(design.kind, 0.0);
        double se = 0.0;
        for (double v : values) se += (v - truth) * (v - truth);
        a.mse = se / count;
    }
    a.median = quantile(values, 0.5);
    return a;
}

std::vector<ReplicateReport> run_experiment(const SimDesign& design, const ExperimentOptions& options) {
    design.validate();
    if (options.replicates < 1) throw ConfigError("replicates must be at least 1");
    if (!options.run_nc && !options.run_te) throw ConfigError("no estimator selected");

    const std::vector<double> grid = evaluation_grid(design);
    const std::size_t reps = options.replicates;
    std::vector<ReplicateRecord> nc(reps), te(reps);
    std::vector<std::exception_ptr> errors(reps);

    auto run_one = [&](std::size_t r) {
        const auto rep = static_cast<std::uint32_t>(r);
        nc[r].replicate = te[r].replicate = rep;
        nc[r].seed = te[r].seed = options.seed;
        try {
            const Dataset data = generate(design, options.seed, rep);
            const Observations obs = data.observations();
            const KernelPolicy policy = data.kernel_policy();
            if (options.run_nc) {
                EffectRequest request;
                request.grid = grid;
                request.baseline = options.run_te;
                const PipelineResult result = run_end_to_end(obs, policy, request, options.tuning);
                nc[r].value = score_curve(design, result.curve);
                nc[r].penalties = result.curve.penalties;
                if (result.baseline) {
                    te[r].value = score_curve(design, *result.baseline);
                    te[r].penalties = result.baseline->penalties;
                }
            } else {
                const KernelSet kernels = choose_kernels(obs, policy);
                const BaselineFit fit = estimate_te_baseline(obs, kernels, grid, std::nullopt, options.tuning.grid);
                te[r].value = score_curve(design, fit.curve);
                te[r].penalties = fit.curve.penalties;
            }
        } catch (const std::exception& e) {
            nc[r].failed = te[r].failed = true;
            nc[r].error = te[r].error = e.what();
            errors[r] = std::current_exception();
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, reps);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    auto worker = [&] {
        for (;;) {
            if (stop.load()) return;
            const std::size_t r = next.fetch_add(1);
            if (r >= reps) return;
            run_one(r);
            if (errors[r] && !options.skip_failed) stop.store(true);
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (!options.skip_failed) {
        for (std::size_t r = 0; r < reps; ++r) {
            if (errors[r]) {
                try {
                    std::rethrow_exception(errors[r]);
                } catch (const Error& e) {
                    throw Error(e.category(), "replicate " + std::to_string(r) + " (seed " +
                                                  std::to_string(options.seed) + ") failed: " + e.what());
                }
            }
        }
    }

    std::vector<ReplicateReport> reports;
    auto finish = [&](EstimatorTag tag, std::vector<ReplicateRecord>& records) {
        ReplicateReport report;
        report.design = design;
        report.estimator = tag;
        report.grid = grid;
        std::vector<double> values;
        for (const auto& rec : records) {
            if (rec.failed) {
                ++report.failed;
            } else {
                values.push_back(rec.value);
            }
        }
        report.summary = aggregate(values, design);
        report.records = std::move(records);
        reports.push_back(std::move(report));
    };
    if (options.run_nc) finish(EstimatorTag::nc, nc);
    if (options.run_te) finish(EstimatorTag::te, te);
    return reports;
}

std::vector<SweepPoint> expand_sweep(const SimDesign& base, const TuningConfig& tuning, const SweepSpec& sweep) {
    auto or_base = [](const auto& list, auto value) {
        using T = decltype(value);
        return list.empty() ? std::vector<T>{value} : std::vector<T>(list.begin(), list.end());
    };
    const auto ns = or_base(sweep.n, base.n);
    const auto dxs = or_base(sweep.dim_x, base.dim_x);
    const auto dzs = or_base(sweep.dim_z, base.dim_z);
    const auto dws = or_base(sweep.dim_w, base.dim_w);
    std::vector<std::optional<double>> lambdas{tuning.lambda};
    std::vector<std::optional<double>> xis{tuning.xi};
    if (!sweep.forced_lambda.empty()) lambdas.assign(sweep.forced_lambda.begin(), sweep.forced_lambda.end());
    if (!sweep.forced_xi.empty()) xis.assign(sweep.forced_xi.begin(), sweep.forced_xi.end());

    std::vector<SweepPoint> points;
    for (auto n : ns) {
        for (int dx : dxs) {
            for (int dz : dzs) {
                for (int dw : dws) {
                    for (const auto& lambda : lambdas) {
                        for (const auto& xi : xis) {
                            SweepPoint p;
                            p.design = base;
                            p.design.n = n;
                            p.design.dim_x = dx;
                            p.design.dim_z = dz;
                            p.design.dim_w = dw;
                            p.design.validate();
                            p.tuning = tuning;
                            p.tuning.lambda = lambda;
                            p.tuning.xi = xi;
                            points.push_back(std::move(p));
                        }
                    }
                }
            }
        }
    }
    return points;
}

}  // namespace nckernel
