#include "cli_commands.hpp"
#include "cli_config.hpp"

#include "nckernel/csv.hpp"
#include "nckernel/errors.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>

using namespace nckernel;
using namespace nckernel::cli;

namespace {

// Flag values are collected here and applied on top of the file config, so
// the precedence is defaults < config file < NCKERNEL_WORKERS < flags.
struct Flags {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    bool print_config = false;

    std::string data, population, y, d;
    std::vector<std::string> v, x, w, z, categorical, lengthscales;

    std::string effect;
    std::vector<double> grid;
    std::size_t grid_points = 100;
    std::string d_condition;
    std::vector<std::string> v_condition;
    bool baseline = false;

    std::string tuning;
    double lambda = 0, xi = 0, lambda_extra = 0;
    double c0 = 2, c = 2, c1 = 2, c2 = 2;
    double grid_lo = 0, grid_hi = 0;
    std::size_t grid_count = 0;

    std::string design;
    long long n = 0;
    int dim_x = 0, dim_z = 0, dim_w = 0;
    std::size_t replicates = 0;
    std::uint32_t replicate = 0;
    std::vector<std::string> estimators;
    bool skip_failed = false;
    std::vector<long long> sweep_n;
    std::vector<int> sweep_dim_x, sweep_dim_z, sweep_dim_w;
    std::vector<double> sweep_lambda, sweep_xi;
};

using Apply = std::function<void(RunConfig&)>;

struct Registry {
    std::vector<std::pair<CLI::Option*, Apply>> entries;

    template <typename T>
    CLI::Option* add(CLI::App* app, const std::string& name, T& target, const std::string& help, Apply apply) {
        CLI::Option* opt = app->add_option(name, target, help);
        entries.emplace_back(opt, std::move(apply));
        return opt;
    }
    CLI::Option* flag(CLI::App* app, const std::string& name, bool& target, const std::string& help, Apply apply) {
        CLI::Option* opt = app->add_flag(name, target, help);
        entries.emplace_back(opt, std::move(apply));
        return opt;
    }
    void apply(RunConfig& config) const {
        for (const auto& [opt, fn] : entries) {
            if (opt->count() > 0) fn(config);
        }
    }
};

void common_options(CLI::App* app, Flags& f, Registry& r) {
    app->add_option("--config", f.config, "JSON config file or manifest from an earlier run");
    app->add_flag("--print-config", f.print_config, "Print the resolved configuration and exit");
    r.add(app, "--out", f.out, "Output directory", [&f](RunConfig& c) { c.out = f.out; });
    r.add(app, "--seed", f.seed, "Random seed", [&f](RunConfig& c) { c.seed = f.seed; });
    r.add(app, "--workers", f.workers, "Worker threads (also NCKERNEL_WORKERS)",
          [&f](RunConfig& c) { c.workers = f.workers; });
    r.add(app, "--tuning", f.tuning, "Penalty selection: loocv, theoretical or forced",
          [&f](RunConfig& c) { c.tuning.mode = parse_tuning_mode(f.tuning); });
    r.add(app, "--lambda", f.lambda, "Fix the stage-1 penalty", [&f](RunConfig& c) { c.tuning.lambda = f.lambda; });
    r.add(app, "--xi", f.xi, "Fix the stage-2 penalty", [&f](RunConfig& c) { c.tuning.xi = f.xi; });
    r.add(app, "--lambda-extra", f.lambda_extra, "Fix the ATT/CATE embedding penalty",
          [&f](RunConfig& c) { c.tuning.lambda_extra = f.lambda_extra; });
    r.add(app, "--c0", f.c0, "Smoothness of the stage-1 embedding (theoretical mode)",
          [&f](RunConfig& c) { c.tuning.smoothness.c0 = f.c0; });
    r.add(app, "--c", f.c, "Smoothness of the bridge (theoretical mode)",
          [&f](RunConfig& c) { c.tuning.smoothness.c = f.c; });
    r.add(app, "--c1", f.c1, "Smoothness of the ATT embedding (theoretical mode)",
          [&f](RunConfig& c) { c.tuning.smoothness.c1 = f.c1; });
    r.add(app, "--c2", f.c2, "Smoothness of the CATE embedding (theoretical mode)",
          [&f](RunConfig& c) { c.tuning.smoothness.c2 = f.c2; });
    r.add(app, "--grid-lo", f.grid_lo, "Smallest LOOCV penalty", [&f](RunConfig& c) { c.penalty_grid.lo = f.grid_lo; });
    r.add(app, "--grid-hi", f.grid_hi, "Largest LOOCV penalty", [&f](RunConfig& c) { c.penalty_grid.hi = f.grid_hi; });
    r.add(app, "--grid-count", f.grid_count, "Number of LOOCV penalties",
          [&f](RunConfig& c) { c.penalty_grid.count = f.grid_count; });
}

void data_options(CLI::App* app, Flags& f, Registry& r) {
    r.add(app, "--data", f.data, "Input CSV with a header row", [&f](RunConfig& c) { c.data.path = f.data; });
    r.add(app, "--population", f.population, "Population CSV for distribution shift",
          [&f](RunConfig& c) { c.data.population = f.population; });
    r.add(app, "--y", f.y, "Outcome column", [&f](RunConfig& c) { c.data.schema.y = f.y; });
    r.add(app, "--d", f.d, "Treatment column", [&f](RunConfig& c) { c.data.schema.d = f.d; });
    r.add(app, "--v", f.v, "Heterogeneity columns (CATE)", [&f](RunConfig& c) { c.data.schema.v = f.v; })
        ->delimiter(',');
    r.add(app, "--x", f.x, "Covariate columns", [&f](RunConfig& c) { c.data.schema.x = f.x; })->delimiter(',');
    r.add(app, "--w", f.w, "Negative control outcome columns", [&f](RunConfig& c) { c.data.schema.w = f.w; })
        ->delimiter(',');
    r.add(app, "--z", f.z, "Negative control treatment columns", [&f](RunConfig& c) { c.data.schema.z = f.z; })
        ->delimiter(',');
    r.add(app, "--categorical", f.categorical, "Columns with an indicator kernel",
          [&f](RunConfig& c) { c.data.schema.categorical = {f.categorical.begin(), f.categorical.end()}; })
        ->delimiter(',');
    r.add(app, "--lengthscale", f.lengthscales, "Explicit lengthscale, as column=value (repeatable)",
         [&f](RunConfig& c) {
             for (const std::string& item : f.lengthscales) {
                 const auto eq = item.find('=');
                 double value = 0.0;
                 if (eq == std::string::npos || !csv::parse_double(item.substr(eq + 1), value)) {
                     throw ConfigError("--lengthscale expects column=value, got '" + item + "'");
                 }
                 c.data.lengthscales[item.substr(0, eq)] = value;
             }
         });
    r.add(app, "--effect", f.effect, "ate, ds, att or cate",
          [&f](RunConfig& c) { c.effect.kind = parse_effect_kind(f.effect); });
    r.add(app, "--grid", f.grid, "Treatment values to evaluate", [&f](RunConfig& c) { c.effect.grid = f.grid; })
        ->delimiter(',');
    r.add(app, "--grid-points", f.grid_points, "Size of the default treatment grid",
          [&f](RunConfig& c) { c.effect.grid_points = f.grid_points; });
    r.add(app, "--d-condition", f.d_condition, "Treatment value conditioned on (ATT)",
          [&f](RunConfig& c) { c.effect.d_condition = f.d_condition; });
    r.add(app, "--v-condition", f.v_condition, "V values conditioned on (CATE)",
          [&f](RunConfig& c) { c.effect.v_condition = f.v_condition; })
        ->delimiter(',');
    r.flag(app, "--baseline", f.baseline, "Also run the regression comparator (ATE)",
           [&f](RunConfig& c) { c.effect.baseline = f.baseline; });
}

void design_options(CLI::App* app, Flags& f, Registry& r) {
    r.add(app, "--design", f.design, "quadratic, sigmoid, peaked, no-confounding or discrete",
          [&f](RunConfig& c) { c.simulation.design.kind = parse_design_kind(f.design); });
    r.add(app, "--n", f.n, "Sample size", [&f](RunConfig& c) { c.simulation.design.n = f.n; });
    r.add(app, "--dim-x", f.dim_x, "Covariate dimension", [&f](RunConfig& c) { c.simulation.design.dim_x = f.dim_x; });
    r.add(app, "--dim-z", f.dim_z, "Negative control treatment dimension",
          [&f](RunConfig& c) { c.simulation.design.dim_z = f.dim_z; });
    r.add(app, "--dim-w", f.dim_w, "Negative control outcome dimension",
          [&f](RunConfig& c) { c.simulation.design.dim_w = f.dim_w; });
}

void simulate_options(CLI::App* app, Flags& f, Registry& r) {
    r.add(app, "--replicates", f.replicates, "Number of replicates",
          [&f](RunConfig& c) { c.simulation.replicates = f.replicates; });
    r.add(app, "--estimators", f.estimators, "nc, te or both",
          [&f](RunConfig& c) {
              c.simulation.run_nc = c.simulation.run_te = false;
              for (const auto& e : f.estimators) {
                  if (e == "nc") {
                      c.simulation.run_nc = true;
                  } else if (e == "te") {
                      c.simulation.run_te = true;
                  } else {
                      throw ConfigError("unknown estimator '" + e + "' (expected nc or te)");
                  }
              }
          })
        ->delimiter(',');
    r.flag(app, "--skip-failed", f.skip_failed, "Leave failed replicates out of the aggregates",
           [&f](RunConfig& c) { c.simulation.skip_failed = f.skip_failed; });
    r.add(app, "--sweep-n", f.sweep_n, "Sample sizes to sweep", [&f](RunConfig& c) {
         c.simulation.sweep.n.assign(f.sweep_n.begin(), f.sweep_n.end());
     })->delimiter(',');
    r.add(app, "--sweep-dim-x", f.sweep_dim_x, "Covariate dimensions to sweep",
          [&f](RunConfig& c) { c.simulation.sweep.dim_x = f.sweep_dim_x; })
        ->delimiter(',');
    r.add(app, "--sweep-dim-z", f.sweep_dim_z, "Negative control treatment dimensions to sweep",
          [&f](RunConfig& c) { c.simulation.sweep.dim_z = f.sweep_dim_z; })
        ->delimiter(',');
    r.add(app, "--sweep-dim-w", f.sweep_dim_w, "Negative control outcome dimensions to sweep",
          [&f](RunConfig& c) { c.simulation.sweep.dim_w = f.sweep_dim_w; })
        ->delimiter(',');
    r.add(app, "--sweep-lambda", f.sweep_lambda, "Forced stage-1 penalties to sweep",
          [&f](RunConfig& c) { c.simulation.sweep.forced_lambda = f.sweep_lambda; })
        ->delimiter(',');
    r.add(app, "--sweep-xi", f.sweep_xi, "Forced stage-2 penalties to sweep",
          [&f](RunConfig& c) { c.simulation.sweep.forced_xi = f.sweep_xi; })
        ->delimiter(',');
}

RunConfig resolve(const Flags& f, const Registry& r) {
    RunConfig config = f.config.empty() ? RunConfig{} : load_config_file(f.config);
    if (const char* env = std::getenv("NCKERNEL_WORKERS"); env && *env) {
        double value = 0.0;
        if (!csv::parse_double(env, value) || value < 1 || value != std::floor(value)) {
            throw ConfigError(std::string("NCKERNEL_WORKERS must be a positive integer, got '") + env + "'");
        }
        config.workers = static_cast<std::size_t>(value);
    }
    r.apply(config);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel negative-control estimators of dose response curves"};
    app.require_subcommand(1);
    Flags flags;
    Registry registry;

    CLI::App* estimate = app.add_subcommand("estimate", "Estimate a treatment effect curve from a CSV file");
    CLI::App* tune = app.add_subcommand("tune", "Report the leave-one-out loss of every penalty candidate");
    CLI::App* simulate = app.add_subcommand("simulate", "Run replicated simulations and aggregate them");
    CLI::App* gen = app.add_subcommand("generate", "Write one simulated dataset as CSV");

    for (CLI::App* sub : {estimate, tune, simulate, gen}) common_options(sub, flags, registry);
    for (CLI::App* sub : {estimate, tune}) data_options(sub, flags, registry);
    for (CLI::App* sub : {simulate, gen}) design_options(sub, flags, registry);
    simulate_options(simulate, flags, registry);
    registry.add(gen, "--replicate", flags.replicate, "Replicate index of the draw",
                 [&flags](RunConfig& c) { c.simulation.replicate = flags.replicate; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const RunConfig config = resolve(flags, registry);
        if (flags.print_config) {
            std::cout << to_json(config).dump(2) << '\n';
            return 0;
        }
        std::vector<std::string> written;
        if (estimate->parsed()) {
            written = cmd_estimate(config);
        } else if (tune->parsed()) {
            written = cmd_tune(config);
        } else if (simulate->parsed()) {
            written = cmd_simulate(config);
        } else {
            written = cmd_generate(config);
        }
        for (const auto& path : written) std::cout << path << '\n';
        return 0;
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        std::string category = "error";
        if (const auto* err = dynamic_cast<const Error*>(&e)) {
            switch (err->category()) {
                case ErrorCategory::input: category = "input error"; break;
                case ErrorCategory::configuration: category = "configuration error"; break;
                case ErrorCategory::numerical: category = "numerical error"; break;
                case ErrorCategory::ingestion: category = "ingestion error"; break;
            }
        }
        std::cerr << "nckernel: " << category << ": " << e.what() << '\n';
        return code;
    }
}
