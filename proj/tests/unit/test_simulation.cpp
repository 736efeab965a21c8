#include "doctest.h"

#include "nckernel/errors.hpp"
#include "nckernel/simulation.hpp"

#include <cmath>

using namespace nckernel;

namespace {

struct Moments {
    double mean = 0.0;
    double se = 0.0;
};

// Sample mean of the products a_i b_i and its standard error.
Moments product_mean(const std::vector<double>& a, const std::vector<double>& b, double ma = 0.0, double mb = 0.0) {
    const double n = static_cast<double>(a.size());
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double p = (a[i] - ma) * (b[i] - mb);
        s += p;
        s2 += p * p;
    }
    const double mean = s / n;
    return {mean, std::sqrt((s2 / n - mean * mean) / n)};
}

Moments mean_of(const std::vector<double>& a) {
    std::vector<double> ones(a.size(), 1.0);
    return product_mean(a, ones);
}

bool within(const Moments& m, double target) { return std::abs(m.mean - target) <= 3.0 * m.se; }

}  // namespace

TEST_CASE("design coefficients and curves") {
    const Eigen::VectorXd beta = decaying_coefficients(4);
    CHECK(beta(0) == 1.0);
    CHECK(beta(1) == 0.25);
    CHECK(beta(3) == 1.0 / 16.0);
    CHECK(logistic_link(0.0) == 0.5);
    CHECK(logistic_link(-50.0) == doctest::Approx(0.1));
    CHECK(logistic_link(50.0) == doctest::Approx(0.9));

    CHECK(true_curve(DesignKind::quadratic, 0.5) == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(true_curve(DesignKind::no_confounding, 0.5) == true_curve(DesignKind::quadratic, 0.5));
    CHECK(true_curve(DesignKind::sigmoid, 0.5) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(true_curve(DesignKind::sigmoid, 0.75) ==
          doctest::Approx(std::log(5.0) + 0.9).epsilon(1e-15));
    CHECK(true_curve(DesignKind::peaked, 0.0) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(true_curve(DesignKind::discrete, 1.0) - true_curve(DesignKind::discrete, 0.0) == doctest::Approx(2.2));
}

TEST_CASE("design names round-trip") {
    for (DesignKind k : {DesignKind::quadratic, DesignKind::sigmoid, DesignKind::peaked, DesignKind::no_confounding,
                         DesignKind::discrete}) {
        CHECK(parse_design_kind(to_string(k)) == k);
    }
    CHECK(parse_design_kind("no_confounding") == DesignKind::no_confounding);
    CHECK_THROWS_AS(parse_design_kind("linear"), ConfigError);
    SimDesign bad;
    bad.dim_w = 0;
    CHECK_THROWS_AS(generate(bad, 1, 0), ConfigError);
}

TEST_CASE("generation is deterministic and shaped by the design") {
    SimDesign design;
    design.n = 50;
    design.dim_x = 3;
    design.dim_z = 2;
    design.dim_w = 2;
    const Dataset a = generate(design, 9, 4);
    const Dataset b = generate(design, 9, 4);
    REQUIRE(a.columns().size() == 9);
    for (std::size_t c = 0; c < a.columns().size(); ++c) CHECK(a.columns()[c].values == b.columns()[c].values);
    CHECK(generate(design, 9, 5).column("y").values != a.column("y").values);
    CHECK(generate(design, 10, 4).column("y").values != a.column("y").values);

    const Observations obs = a.observations();
    CHECK(obs.size() == 50);
    CHECK(obs.x.cols() == 3);
    CHECK(obs.z.cols() == 2);
    CHECK(obs.w.cols() == 2);
    CHECK(obs.v.cols() == 0);
    CHECK(a.column("d").family == ColumnFamily::continuous);

    design.kind = DesignKind::discrete;
    const Dataset disc = generate(design, 9, 4);
    CHECK(disc.column("d").family == ColumnFamily::categorical);
    for (double d : disc.column("d").values) CHECK((d == 0.0 || d == 1.0));
}

TEST_CASE("noise streams do not depend on the other blocks") {
    SimDesign base;
    base.n = 40;
    const Dataset a = generate(base, 5, 2);

    SimDesign wider = base;
    wider.dim_x = 8;
    const Dataset b = generate(wider, 5, 2);
    CHECK(b.column("z1").values == a.column("z1").values);
    CHECK(b.column("w1").values == a.column("w1").values);

    SimDesign more_w = base;
    more_w.dim_w = 3;
    const Dataset c = generate(more_w, 5, 2);
    CHECK(c.column("z1").values == a.column("z1").values);
    CHECK(c.column("x1").values == a.column("x1").values);
    CHECK(c.column("y").values != a.column("y").values);

    SimDesign longer = base;
    longer.n = 80;
    const Dataset d = generate(longer, 5, 2);
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(d.column("x2").values[i] == a.column("x2").values[i]);
        CHECK(d.column("z1").values[i] == a.column("z1").values[i]);
        CHECK(d.column("y").values[i] == a.column("y").values[i]);
    }
}

TEST_CASE("population moments at n = 100000") {
    SimDesign design;
    design.n = 100000;
    design.dim_x = 3;
    const Dataset data = generate(design, 2024, 0);
    const auto& x1 = data.column("x1").values;
    const auto& x2 = data.column("x2").values;
    const auto& x3 = data.column("x3").values;
    const auto& z = data.column("z1").values;
    const auto& w = data.column("w1").values;

    CHECK(within(mean_of(x1), 0.0));
    CHECK(within(product_mean(x1, x1), 1.0));
    CHECK(within(product_mean(x1, x2), 0.5));
    CHECK(within(product_mean(x1, x3), 0.0));
    CHECK(within(mean_of(z), 0.0));
    // Var(Z) = 1/3 + 0.25^2 * 2, Cov(Z, W) = 0.25^2 through the shared source
    CHECK(within(product_mean(z, z), 1.0 / 3.0 + 0.125));
    CHECK(within(product_mean(w, w), 1.0 / 3.0 + 0.125));
    CHECK(within(product_mean(z, w), 0.0625));
    CHECK(within(product_mean(x1, w), 0.0));

    design.kind = DesignKind::no_confounding;
    const Dataset free = generate(design, 2024, 0);
    CHECK(within(product_mean(free.column("z1").values, free.column("w1").values), 0.0));
    CHECK(within(product_mean(free.column("z1").values, free.column("z1").values), 1.0 / 3.0 + 0.125));
}

TEST_CASE("evaluation grid and scoring") {
    SimDesign design;
    const std::vector<double> grid = evaluation_grid(design);
    CHECK(grid.size() == 100);
    CHECK(grid.front() == doctest::Approx(0.1));
    CHECK(grid.back() == doctest::Approx(0.9));

    EffectCurve exact;
    exact.grid = grid;
    for (double d : grid) exact.values.push_back(true_curve(design.kind, d));
    CHECK(score_curve(design, exact) == 0.0);
    for (double& v : exact.values) v += 0.5;
    CHECK(score_curve(design, exact) == doctest::Approx(0.25));

    design.kind = DesignKind::discrete;
    CHECK(evaluation_grid(design) == std::vector<double>{0.0, 1.0});
    EffectCurve disc;
    disc.grid = {0.0, 1.0};
    disc.values = {0.3, 2.6};
    CHECK(score_curve(design, disc) == doctest::Approx(2.3));
    disc.values.push_back(1.0);
    CHECK_THROWS_AS(score_curve(design, disc), InputError);
}

TEST_CASE("aggregate statistics") {
    SimDesign cont;
    const Aggregate a = aggregate({1.0, 2.0, 3.0, 10.0}, cont);
    CHECK(a.count == 4);
    CHECK(a.mean == 4.0);
    CHECK(a.sd == doctest::Approx(std::sqrt(50.0 / 3.0)));
    CHECK(a.mse == a.mean);
    CHECK(a.median == 2.5);

    SimDesign disc;
    disc.kind = DesignKind::discrete;
    const Aggregate b = aggregate({2.0, 2.4}, disc);
    CHECK(b.mean == doctest::Approx(2.2));
    // mse = bias^2 + (n - 1)/n sd^2
    CHECK(b.mse == doctest::Approx(0.04));
    CHECK(b.mse == doctest::Approx((b.mean - 2.2) * (b.mean - 2.2) + 0.5 * b.sd * b.sd));

    const Aggregate one = aggregate({2.7}, disc);
    CHECK(one.sd == 0.0);
    CHECK(one.median == 2.7);
    CHECK(std::isnan(aggregate({}, disc).mean));
}

TEST_CASE("experiments are reproducible and independent of worker count") {
    SimDesign design;
    design.n = 40;
    ExperimentOptions options;
    options.replicates = 4;
    options.seed = 3;
    options.tuning.grid = log_grid(1e-4, 1.0, 5);
    const auto serial = run_experiment(design, options);
    options.workers = 3;
    const auto parallel = run_experiment(design, options);

    REQUIRE(serial.size() == 2);
    CHECK(serial[0].estimator == EstimatorTag::nc);
    CHECK(serial[1].estimator == EstimatorTag::te);
    for (std::size_t e = 0; e < 2; ++e) {
        REQUIRE(serial[e].records.size() == 4);
        for (std::size_t r = 0; r < 4; ++r) {
            CHECK(serial[e].records[r].replicate == r);
            CHECK(serial[e].records[r].value == parallel[e].records[r].value);
        }
        CHECK(serial[e].summary.mean == parallel[e].summary.mean);
        CHECK(serial[e].summary.count == 4);
    }

    options.run_te = false;
    const auto nc_only = run_experiment(design, options);
    REQUIRE(nc_only.size() == 1);
    for (std::size_t r = 0; r < 4; ++r) CHECK(nc_only[0].records[r].value == serial[0].records[r].value);

    options.run_nc = false;
    CHECK_THROWS_AS(run_experiment(design, options), ConfigError);
}

TEST_CASE("a failing replicate keeps its category") {
    SimDesign design;
    design.n = 30;
    ExperimentOptions options;
    options.replicates = 2;
    options.tuning.mode = TuningMode::forced;
    options.tuning.lambda = 0.1;
    try {
        run_experiment(design, options);
        FAIL("expected a configuration failure");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::configuration);
        CHECK(std::string(e.what()).find("replicate 0") != std::string::npos);
    }

    options.skip_failed = true;
    const auto reports = run_experiment(design, options);
    CHECK(reports[0].failed == 2);
    CHECK(reports[0].summary.count == 0);
    CHECK(reports[0].records[1].failed);
    CHECK_FALSE(reports[0].records[1].error.empty());
}

TEST_CASE("sweep expansion") {
    SimDesign base;
    TuningConfig tuning;
    SweepSpec sweep;
    sweep.n = {100, 200};
    sweep.dim_w = {1, 2, 3};
    sweep.forced_xi = {0.1};
    const auto points = expand_sweep(base, tuning, sweep);
    REQUIRE(points.size() == 6);
    CHECK(points[0].design.n == 100);
    CHECK(points[0].design.dim_w == 1);
    CHECK(points[1].design.dim_w == 2);
    CHECK(points[3].design.n == 200);
    for (const auto& p : points) {
        CHECK(p.design.dim_x == 5);
        CHECK(p.tuning.xi == 0.1);
        CHECK_FALSE(p.tuning.lambda.has_value());
        CHECK(p.tuning.mode == TuningMode::loocv);
    }
    CHECK(expand_sweep(base, tuning, {}).size() == 1);
}
