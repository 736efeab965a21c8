// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Usage: acceptance [path-to-nckernel [criterion numbers...]]
// NCKERNEL_ACCEPT_FULL=1 adds the n=5000 discrete rows; NCKERNEL_WORKERS sets
// the simulation thread count.

#include "nckernel/bridge.hpp"
#include "nckernel/effects.hpp"
#include "nckernel/embeddings.hpp"
#include "nckernel/kernels.hpp"
#include "nckernel/pipeline.hpp"
#include "nckernel/ridge.hpp"
#include "nckernel/simulation.hpp"
#include "support.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>

using namespace nckernel;
namespace fs = std::filesystem;
using testsupport::relative_error;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;
    double limit_seconds = 0.0;  // 0: no runtime bound

    void note(const std::string& s) { details.push_back(s); }
    void require(bool ok, const std::string& s) {
        note(std::string(ok ? "ok   " : "FAIL ") + s);
        pass = pass && ok;
    }
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::size_t workers() {
    if (const char* env = std::getenv("NCKERNEL_WORKERS"); env && *env) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> values(const ReplicateReport& r) {
    std::vector<double> out;
    for (const auto& rec : r.records) out.push_back(rec.value);
    return out;
}

Outcome loocv_scalar_exact() {
    Outcome o;
    o.limit_seconds = 5.0;
    std::mt19937_64 rng(kSeed);
    std::uniform_int_distribution<int> size(3, 40), cols(1, 3);
    std::uniform_real_distribution<double> scale(0.3, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = size(rng);
        const int p = cols(rng);
        std::vector<double> ls(p);
        for (auto& l : ls) l = scale(rng);
        const GramMatrix k = gram(testsupport::normal_block(rng, n, p), KernelSpec::gaussian(ls));
        const Eigen::VectorXd y = testsupport::normal_block(rng, n, 1).col(0);
        const TuneReport report = loocv_scalar(k, y, log_grid(1e-6, 1.0, 5));
        for (std::size_t i = 0; i < report.grid.size(); ++i) {
            worst = std::max(worst, relative_error(report.losses[i], oracle::loo_scalar(k, y, report.grid[i])));
        }
    }
    o.require(worst <= 1e-8, "50 instances x 5 penalties, worst relative error " + fmt("%.2e", worst));
    return o;
}

Outcome loocv_embedding_exact() {
    Outcome o;
    o.limit_seconds = 10.0;
    std::mt19937_64 rng(kSeed + 1);
    std::uniform_int_distribution<int> size(3, 30), cols(1, 3);
    std::uniform_real_distribution<double> scale(0.3, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = size(rng);
        const int p = cols(rng), q = cols(rng);
        std::vector<double> ls_in(p), ls_out(q);
        for (auto& l : ls_in) l = scale(rng);
        for (auto& l : ls_out) l = scale(rng);
        const GramMatrix k_in = gram(testsupport::normal_block(rng, n, p), KernelSpec::gaussian(ls_in));
        const GramMatrix k_out = gram(testsupport::normal_block(rng, n, q), KernelSpec::gaussian(ls_out));
        const TuneReport report = loocv_embedding(k_in, k_out, log_grid(1e-6, 1.0, 5));
        for (std::size_t i = 0; i < report.grid.size(); ++i) {
            worst = std::max(worst,
                             relative_error(report.losses[i], oracle::loo_embedding(k_in, k_out, report.grid[i])));
        }
    }
    o.require(worst <= 1e-8, "50 instances x 5 penalties, worst relative error " + fmt("%.2e", worst));
    return o;
}

Outcome dense_oracle() {
    Outcome o;
    o.limit_seconds = 10.0;
    std::mt19937_64 rng(kSeed + 2);
    std::uniform_int_distribution<int> size(10, 40);
    std::uniform_real_distribution<double> penalty(0.002, 0.05), u(-1.0, 1.0);
    const std::vector<double> grid{-1.0, -0.4, 0.0, 0.5, 1.1};
    double w_bridge = 0.0, w_ate = 0.0, w_ds = 0.0, w_att = 0.0, w_cate = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const testsupport::Dims dims{1, 1 + trial % 2, 1 + trial % 3, 1 + trial % 2, 1};
        const Observations s = testsupport::random_observations(rng, size(rng), dims);
        const KernelSet k = testsupport::median_kernels(s);
        const double lambda = penalty(rng), xi = penalty(rng) / 5.0, extra = penalty(rng);
        const BridgeModel model = fit_bridge(s, k, lambda, xi);
        const oracle::Bridge ref =
            oracle::fit(testsupport::sample(s), testsupport::sample(s), testsupport::scales(k), lambda, xi);
        w_bridge = std::max({w_bridge, relative_error(model.b(), ref.b), relative_error(model.m(), ref.m),
                             relative_error(Eigen::MatrixXd(model.alpha()), Eigen::MatrixXd(ref.alpha))});

        w_ate = std::max(w_ate, relative_error(estimate_ate(model, grid).values, oracle::ate(ref, grid)));

        Observations alt;
        alt.v = testsupport::normal_block(rng, 17, dims.v);
        alt.x = testsupport::normal_block(rng, 17, dims.x) + Eigen::MatrixXd::Constant(17, dims.x, 0.5);
        alt.w = testsupport::normal_block(rng, 17, dims.w);
        oracle::Sample pop;
        pop.v = alt.v;
        pop.x = alt.x;
        pop.w = alt.w;
        w_ds = std::max(w_ds, relative_error(estimate_ds(model, grid, alt).values, oracle::ds(ref, grid, pop)));

        const double d0 = u(rng);
        w_att = std::max(w_att, relative_error(estimate_att(model, grid, d0, extra).values,
                                               oracle::att(ref, grid, d0, extra)));

        Eigen::VectorXd v(dims.v);
        for (auto& x : v) x = u(rng);
        w_cate = std::max(w_cate, relative_error(estimate_cate(model, grid, v, extra).values,
                                                 oracle::cate(ref, grid, v, extra)));
    }
    o.require(w_bridge <= 1e-8, "bridge B, M, alpha: " + fmt("%.2e", w_bridge));
    o.require(w_ate <= 1e-8, "ATE: " + fmt("%.2e", w_ate));
    o.require(w_ds <= 1e-8, "DS: " + fmt("%.2e", w_ds));
    o.require(w_att <= 1e-8, "ATT: " + fmt("%.2e", w_att));
    o.require(w_cate <= 1e-8, "CATE: " + fmt("%.2e", w_cate));
    return o;
}

Outcome table_one() {
    Outcome o;
    o.limit_seconds = 1800.0;
    struct Row {
        Eigen::Index n;
        double te, nc, tol_te, tol_nc;
        std::size_t reps;
    };
    std::vector<Row> rows{{100, 2.61, 3.07, 0.10, 0.15, 100},
                          {500, 2.59, 2.62, 0.10, 0.15, 100},
                          {1000, 2.55, 2.42, 0.10, 0.15, 100}};
    if (const char* full = std::getenv("NCKERNEL_ACCEPT_FULL"); full && std::string(full) == "1") {
        rows.push_back({5000, 2.42, 1.99, 0.15, 0.15, 25});
    } else {
        o.note("n=5000 rows not run (set NCKERNEL_ACCEPT_FULL=1)");
    }
    for (const Row& row : rows) {
        SimDesign design;
        design.kind = DesignKind::discrete;
        design.n = row.n;
        ExperimentOptions opt;
        opt.replicates = row.reps;
        opt.seed = kSeed;
        opt.workers = workers();
        const auto reports = run_experiment(design, opt);
        const double nc = reports[0].summary.mean, te = reports[1].summary.mean;
        const std::string n = "n=" + std::to_string(row.n) + " (" + std::to_string(row.reps) + " reps) ";
        o.require(std::abs(te - row.te) <= row.tol_te,
                  n + "T.E. mean " + fmt("%.4f", te) + " vs " + fmt("%.2f", row.te) + fmt(" +/- %.2f", row.tol_te));
        o.require(std::abs(nc - row.nc) <= row.tol_nc,
                  n + "N.C. mean " + fmt("%.4f", nc) + " vs " + fmt("%.2f", row.nc) + fmt(" +/- %.2f", row.tol_nc));
    }
    return o;
}

Outcome orderings() {
    Outcome o;
    o.limit_seconds = 1200.0;
    ExperimentOptions opt;
    opt.replicates = 50;
    opt.seed = kSeed;
    opt.workers = workers();
    for (DesignKind kind : {DesignKind::quadratic, DesignKind::no_confounding}) {
        SimDesign design;
        design.kind = kind;
        design.n = 1000;
        const auto reports = run_experiment(design, opt);
        const double nc = median(values(reports[0])), te = median(values(reports[1]));
        const std::string text = std::string(to_string(kind)) + ": median curve MSE N.C. " + fmt("%.4f", nc) +
                                 ", T.E. " + fmt("%.4f", te);
        if (kind == DesignKind::quadratic) {
            o.require(nc < te, text + " (want N.C. < T.E.)");
        } else {
            o.require(te <= nc, text + " (want T.E. <= N.C.)");
        }
    }
    return o;
}

Outcome discrete_v_cate() {
    Outcome o;
    o.limit_seconds = 5.0;
    std::mt19937_64 rng(kSeed + 3);
    const Eigen::Index n = 200;
    Observations s = testsupport::random_observations(rng, n);
    s.v = testsupport::code_block(rng, n, 1, 3);
    s.y += 0.7 * s.v.col(0);
    KernelSet k = testsupport::median_kernels(s);
    k.v = KernelSpec::indicator(1);
    const double lambda = 0.01, xi = 0.002;
    const BridgeModel model = fit_bridge(s, k, lambda, xi);
    const std::vector<double> grid = default_treatment_grid(s.d, false, 25);
    double worst = 0.0;
    for (double level : {0.0, 1.0, 2.0}) {
        std::vector<bool> keep(n);
        for (Eigen::Index i = 0; i < n; ++i) keep[static_cast<std::size_t>(i)] = s.v(i, 0) == level;
        const Observations sub = s.subset(keep);
        // Subsample penalties rescaled so that n_v * lambda_v = n * lambda.
        const double share = static_cast<double>(n) / static_cast<double>(sub.size());
        const BridgeModel sub_model = fit_bridge(sub, k, lambda * share, xi * share);
        const EffectCurve cate = estimate_cate(model, grid, Eigen::VectorXd::Constant(1, level), 1e-12);
        const double err = relative_error(cate.values, estimate_ate(sub_model, grid).values);
        o.note("v=" + fmt("%.0f", level) + " (" + std::to_string(sub.size()) + " rows): " + fmt("%.2e", err));
        worst = std::max(worst, err);
    }
    o.require(worst <= 1e-6, "worst relative gap " + fmt("%.2e", worst));
    return o;
}

Outcome invariants() {
    Outcome o;
    o.limit_seconds = 30.0;
    std::mt19937_64 rng(kSeed + 4);

    bool gram_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd a = testsupport::normal_block(rng, 25, 1 + trial % 3);
        std::vector<double> ls(static_cast<std::size_t>(a.cols()), 0.5 + 0.1 * trial);
        const GramMatrix g = gram(a, KernelSpec::gaussian(ls));
        const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().minCoeff();
        gram_ok = gram_ok && g == g.transpose() && min_eig >= -1e-10 && g.maxCoeff() <= 1.0 && g.minCoeff() >= 0.0 &&
                  (g.diagonal().array() == 1.0).all();
    }
    o.require(gram_ok, "Gram symmetric, PSD, entries in [0, 1] with unit diagonal (20 instances)");

    double interp = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd a = testsupport::normal_block(rng, 15, 2);
        const GramMatrix k = gram(a, KernelSpec::gaussian({0.5, 0.5}));
        const Eigen::VectorXd y = testsupport::normal_block(rng, 15, 1).col(0);
        interp = std::max(interp, (krr_fit_predict(k, y, 1e-12, k) - y).cwiseAbs().maxCoeff());
    }
    o.require(interp <= 1e-4, "KRR at lambda=1e-12 reproduces targets, worst " + fmt("%.2e", interp));

    bool shrink = true;
    {
        const Eigen::MatrixXd a = testsupport::normal_block(rng, 30, 2);
        const GramMatrix k = gram(a, KernelSpec::gaussian({1.0, 1.0}));
        const Eigen::VectorXd y = testsupport::normal_block(rng, 30, 1).col(0);
        double prev = std::numeric_limits<double>::infinity();
        for (double lambda : log_grid(1e-8, 1e2, 20)) {
            const double norm = krr_fit_predict(k, y, lambda, k).norm();
            shrink = shrink && norm <= prev;
            prev = norm;
        }
        const Observations s = testsupport::random_observations(rng, 30);
        const KernelSet ks = testsupport::median_kernels(s);
        prev = std::numeric_limits<double>::infinity();
        for (double xi : log_grid(1e-6, 1e2, 12)) {
            const double norm = fit_bridge(s, ks, 0.01, xi).alpha().norm();
            shrink = shrink && norm <= prev * (1.0 + 1e-12);
            prev = norm;
        }
    }
    o.require(shrink, "prediction norm and bridge coefficient norm nonincreasing in the penalty");

    bool ds_ok = true;
    for (int trial = 0; trial < 5; ++trial) {
        const Observations s = testsupport::random_observations(rng, 30 + 5 * trial, {1, trial % 2, 2, 1, 1});
        const BridgeModel model = fit_bridge(s, testsupport::median_kernels(s), 0.01, 0.001);
        const std::vector<double> grid{-0.5, 0.0, 0.7};
        ds_ok = ds_ok && estimate_ds(model, grid, s).values == estimate_ate(model, grid).values;
    }
    o.require(ds_ok, "DS on the stage-1 population equals ATE bit for bit");

    const PenaltySchedule sched = theoretical_schedule(10000, 10000, 2.0, 2.0, true);
    const double expected_xi = std::pow(10000.0, -1.0 / 15.0);
    o.require(std::abs(sched.lambda - 0.0464159) <= 1e-7 && std::abs(sched.xi - expected_xi) <= 1e-12,
              "schedule n=10000, c0=c=2: lambda " + fmt("%.7f", sched.lambda) + ", xi " + fmt("%.7f", sched.xi));
    const double emb = embedding_schedule(1000, 2.0);
    o.require(std::abs(emb - 0.1) <= 1e-12, "embedding schedule n=1000, c=2: " + fmt("%.7f", emb));
    return o;
}

// ---- determinism through the command line ----

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int shell(const std::string& cli, const std::string& args) {
    const std::string cmd = "'" + cli + "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

using Snapshot = std::map<std::string, std::string>;

Snapshot snapshot(const fs::path& dir) {
    Snapshot out;
    for (const auto& entry : fs::directory_iterator(dir)) out[entry.path().filename().string()] = slurp(entry.path());
    return out;
}

// Every file must match byte for byte, except that manifests are compared
// with their timings removed.
void compare(const Snapshot& before, const Snapshot& after, Outcome& o, const std::string& label) {
    bool ok = before.size() > 1 && before.size() == after.size();
    for (const auto& [name, text] : before) {
        const auto it = after.find(name);
        if (it == after.end()) {
            ok = false;
        } else if (name == "manifest.json") {
            auto a = nlohmann::json::parse(text), b = nlohmann::json::parse(it->second);
            a.erase("timings");
            b.erase("timings");
            ok = ok && a == b;
        } else {
            ok = ok && text == it->second;
        }
    }
    o.require(ok, label + ": " + std::to_string(before.size()) + " files compared");
}

Outcome determinism(const std::string& cli) {
    Outcome o;
    if (cli.empty() || !fs::exists(cli)) {
        o.require(false, "nckernel binary not found (pass its path as the first argument)");
        return o;
    }
    const fs::path root = fs::temp_directory_path() / "nckernel_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto p = [&](const char* sub) { return "'" + (root / sub).string() + "'"; };

    o.require(shell(cli, "simulate --design discrete --n 120 --replicates 4 --workers 2 --seed 3 --out " + p("sim1")) ==
                  0,
              "simulate ran");
    const Snapshot sim = snapshot(root / "sim1");
    o.require(shell(cli, "simulate --config " + p("sim1/manifest.json")) == 0, "simulate rerun from its manifest");
    compare(sim, snapshot(root / "sim1"), o, "simulate rerun");
    o.require(shell(cli, "simulate --config " + p("sim1/manifest.json") + " --workers 1 --out " + p("sim3")) == 0,
              "simulate rerun on one worker");
    {
        // The worker count is recorded in the manifest, so only the data files are compared.
        bool same = true;
        for (const char* f : {"replicates.csv", "summary.csv", "table.txt"}) {
            same = same && slurp(root / "sim1" / f) == slurp(root / "sim3" / f);
        }
        o.require(same, "simulate output independent of the worker count");
    }

    o.require(shell(cli, "generate --design quadratic --n 150 --seed 5 --out " + p("gen")) == 0, "generate ran");
    const auto gen = nlohmann::ordered_json::parse(slurp(root / "gen" / "manifest.json"));
    std::ofstream(root / "estimate.json") << gen["resolved"]["estimate_config"].dump(2);
    o.require(shell(cli, "estimate --config " + p("estimate.json") + " --effect ate --baseline --out " + p("est1")) ==
                  0,
              "estimate ran");
    const Snapshot est = snapshot(root / "est1");
    o.require(shell(cli, "estimate --config " + p("est1/manifest.json")) == 0, "estimate rerun from its manifest");
    compare(est, snapshot(root / "est1"), o, "estimate rerun");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"scalar LOOCV equals brute-force refits", loocv_scalar_exact},
        {"embedding LOOCV equals brute-force refits", loocv_embedding_exact},
        {"bridge and effects equal the dense oracle", dense_oracle},
        {"discrete design means near the reference table", table_one},
        {"MSE orderings at n=1000", orderings},
        {"discrete-V CATE equals subset ATE", discrete_v_cate},
        {"invariant suite", invariants},
        {"reruns from a manifest are byte-identical", [&] { return determinism(cli); }},
    };
    std::cout << "seed " << kSeed << ", workers " << workers() << "\n";
    int failed = 0;
    std::vector<bool> selected(criteria.size(), argc <= 2);
    for (int a = 2; a < argc; ++a) {
        const long k = std::strtol(argv[a], nullptr, 10);
        if (k >= 1 && k <= static_cast<long>(criteria.size())) selected[static_cast<std::size_t>(k - 1)] = true;
    }
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i]) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.require(false, std::string("threw: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string timing = fmt("%.1fs", secs);
        if (o.limit_seconds > 0.0) {
            const bool in_time = secs < o.limit_seconds;
            timing += fmt(in_time ? " (limit %.0fs)" : " (over limit %.0fs)", o.limit_seconds);
            o.pass = o.pass && in_time;
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << "  " << timing
                  << "\n";
        for (const auto& d : o.details) std::cout << "       " << d << "\n";
        std::cout.flush();
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
    return failed == 0 ? 0 : 1;
}
