#include "cli_commands.hpp"

#include "nckernel/csv.hpp"
#include "nckernel/errors.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

namespace nckernel::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr const char* kVersion = "0.1.0";

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) { return std::isfinite(v) ? csv::format_double(v) : "NA"; }

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    return out;
}

std::string output_path(const RunConfig& config, const std::string& name) {
    std::error_code ec;
    fs::create_directories(config.out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + config.out + "': " + ec.message());
    return (fs::path(config.out) / name).string();
}

void write_manifest(const RunConfig& config, const std::string& command, Json resolved,
                    const std::vector<std::string>& outputs, Json timings, std::vector<std::string>& written) {
    Json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["config"] = to_json(config);
    m["resolved"] = std::move(resolved);
    m["outputs"] = outputs;
    m["timings"] = std::move(timings);
    const std::string path = output_path(config, "manifest.json");
    open_output(path) << m.dump(2) << '\n';
    written.push_back(path);
}

Json lengthscales_json(const KernelSet& k) {
    auto block = [](const KernelSpec& spec) { return Json(spec.lengthscales()); };
    return Json{{"d", block(k.d)}, {"v", block(k.v)}, {"x", block(k.x)}, {"w", block(k.w)}, {"z", block(k.z)}};
}

Json tuning_json(const std::vector<NamedTuneReport>& reports) {
    Json out = Json::object();
    for (const auto& r : reports) out[r.penalty] = r.report.selected;
    return out;
}

// Every Gaussian column gets an explicit lengthscale here, so that a
// degenerate column is reported by name.
KernelPolicy build_policy(const Dataset& data, const std::map<std::string, double>& overrides) {
    KernelPolicy policy = data.kernel_policy();
    std::set<std::string> used;
    for (Role role : {Role::d, Role::v, Role::x, Role::w, Role::z}) {
        const auto columns = data.role_columns(role);
        for (std::size_t j = 0; j < columns.size(); ++j) {
            const Column& c = *columns[j];
            if (c.family == ColumnFamily::categorical) continue;
            double scale = 0.0;
            if (auto it = overrides.find(c.name); it != overrides.end()) {
                scale = it->second;
                used.insert(c.name);
            } else {
                const Eigen::Map<const Eigen::MatrixXd> values(c.values.data(), static_cast<Eigen::Index>(c.values.size()),
                                                               1);
                try {
                    scale = median_heuristic(values, 0);
                } catch (const DegenerateScaleError&) {
                    throw ConfigError("column '" + c.name + "' (role " + std::string(to_string(role)) +
                                      ") has zero median interpoint distance, so the median heuristic gives no "
                                      "lengthscale; set one with --lengthscale " + c.name +
                                      "=<value> or drop the column");
                }
            }
            policy.lengthscale_overrides[{role, static_cast<int>(j)}] = scale;
        }
    }
    for (const auto& [name, value] : overrides) {
        if (!used.contains(name)) {
            throw ConfigError("lengthscale given for '" + name + "', which is not a continuous column in the schema");
        }
    }
    return policy;
}

double parse_value(const Dataset& data, const Column& column, const std::string& text, const char* what) {
    if (column.family == ColumnFamily::categorical) return data.code_of(column, text);
    double v = 0.0;
    if (!csv::parse_double(text, v)) throw ConfigError(std::string(what) + " '" + text + "' is not a number");
    return v;
}

EffectRequest build_request(const RunConfig& config, const Dataset& data) {
    EffectRequest request;
    request.kind = config.effect.kind;
    request.baseline = config.effect.baseline;
    const Column& d = *data.role_columns(Role::d).front();
    if (config.effect.grid.empty()) {
        const Observations obs = data.observations();
        request.grid = default_treatment_grid(obs.d, d.family == ColumnFamily::categorical, config.effect.grid_points);
    } else {
        request.grid = config.effect.grid;
    }
    if (request.kind == EffectKind::att) {
        request.d_condition = parse_value(data, d, config.effect.d_condition, "treatment condition");
    }
    if (request.kind == EffectKind::cate) {
        const auto v_cols = data.role_columns(Role::v);
        if (config.effect.v_condition.size() != v_cols.size()) {
            throw ConfigError("CATE needs one conditioning value per V column (" + std::to_string(v_cols.size()) +
                              "), got " + std::to_string(config.effect.v_condition.size()));
        }
        request.v_condition.resize(static_cast<Eigen::Index>(v_cols.size()));
        for (std::size_t j = 0; j < v_cols.size(); ++j) {
            request.v_condition(static_cast<Eigen::Index>(j)) =
                parse_value(data, *v_cols[j], config.effect.v_condition[j], "V condition");
        }
    }
    if (request.kind == EffectKind::ds) {
        if (config.data.population.empty()) {
            throw ConfigError("distribution shift needs a population file (--population)");
        }
        Schema pop;
        pop.v = config.data.schema.v;
        pop.x = config.data.schema.x;
        pop.w = config.data.schema.w;
        for (const auto& name : config.data.schema.categorical) {
            if (std::find(pop.v.begin(), pop.v.end(), name) != pop.v.end() ||
                std::find(pop.x.begin(), pop.x.end(), name) != pop.x.end() ||
                std::find(pop.w.begin(), pop.w.end(), name) != pop.w.end()) {
                pop.categorical.insert(name);
            }
        }
        pop.population_only = true;
        request.alt = ingest(config.data.population, pop).observations();
    }
    return request;
}

std::string treatment_label(const Column& d, double value) {
    if (auto it = d.labels.find(value); it != d.labels.end()) return csv::escape(it->second);
    return csv::format_double(value);
}

void write_curve_rows(std::ostream& out, const EffectCurve& curve, const Column& d, const std::string& digest) {
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        out << treatment_label(d, curve.grid[i]) << ',' << num(curve.values[i]) << ',' << to_string(curve.estimator)
            << ',' << curve.n << ',' << curve.m << ',' << num(curve.penalties.lambda) << ','
            << num(curve.penalties.xi) << ',' << num(curve.penalties.extra) << ',' << digest << '\n';
    }
}

Schema simulation_schema(const SimDesign& design) {
    Schema s;
    s.y = "y";
    s.d = "d";
    for (int j = 1; j <= design.dim_x; ++j) s.x.push_back("x" + std::to_string(j));
    for (int j = 1; j <= design.dim_w; ++j) s.w.push_back("w" + std::to_string(j));
    for (int j = 1; j <= design.dim_z; ++j) s.z.push_back("z" + std::to_string(j));
    if (!design.continuous()) s.categorical.insert("d");
    return s;
}

std::string estimator_title(EstimatorTag tag) { return tag == EstimatorTag::nc ? "N.C." : "T.E."; }

}  // namespace

std::string lengthscale_digest(const KernelSet& kernels) {
    std::uint64_t h = 14695981039346656037ull;
    for (const KernelSpec* spec : {&kernels.d, &kernels.v, &kernels.x, &kernels.w, &kernels.z}) {
        for (double v : spec->lengthscales()) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 1099511628211ull;
            }
        }
        // block separator
        h ^= 0xff;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

EstimateRun run_estimate(const RunConfig& config) {
    validate(config);
    if (config.data.path.empty()) throw ConfigError("no data file given (--data)");
    EstimateRun run;
    run.data = ingest(config.data.path, config.data.schema);
    const KernelPolicy policy = build_policy(run.data, config.data.lengthscales);
    const EffectRequest request = build_request(config, run.data);
    run.result = run_end_to_end(run.data.observations(), policy, request, config.resolved_tuning());
    return run;
}

std::vector<std::string> cmd_estimate(const RunConfig& config) {
    const auto start = Clock::now();
    const EstimateRun run = run_estimate(config);
    const double estimate_seconds = seconds_since(start);

    std::vector<std::string> written;
    const std::string digest = lengthscale_digest(run.result.kernels);
    const Column& d = *run.data.role_columns(Role::d).front();
    const std::string curve_path = output_path(config, "curve.csv");
    {
        std::ofstream out = open_output(curve_path);
        out << "d,estimate,estimator,n,m,lambda,xi,extra_penalty,lengthscale_digest\n";
        write_curve_rows(out, run.result.curve, d, digest);
        if (run.result.baseline) write_curve_rows(out, *run.result.baseline, d, digest);
    }
    written.push_back(curve_path);

    const EffectCurve& c = run.result.curve;
    Json resolved;
    resolved["effect"] = std::string(to_string(c.kind));
    resolved["n"] = c.n;
    resolved["lambda"] = c.penalties.lambda;
    resolved["xi"] = c.penalties.xi;
    if (std::isfinite(c.penalties.extra)) resolved["extra_penalty"] = c.penalties.extra;
    if (run.result.baseline) resolved["lambda_te"] = run.result.baseline->penalties.lambda;
    resolved["tuned"] = tuning_json(run.result.tuning);
    resolved["lengthscales"] = lengthscales_json(run.result.kernels);
    resolved["lengthscale_digest"] = digest;
    resolved["grid_size"] = c.grid.size();
    write_manifest(config, "estimate", std::move(resolved), written,
                   Json{{"estimate_seconds", estimate_seconds}, {"total_seconds", seconds_since(start)}}, written);
    return written;
}

std::vector<std::string> cmd_tune(const RunConfig& config) {
    const auto start = Clock::now();
    const EstimateRun run = run_estimate(config);
    std::vector<std::string> written;
    const std::string path = output_path(config, "tuning.csv");
    {
        std::ofstream out = open_output(path);
        out << "penalty,candidate,loss,selected\n";
        for (const auto& named : run.result.tuning) {
            const TuneReport& r = named.report;
            for (std::size_t i = 0; i < r.grid.size(); ++i) {
                out << named.penalty << ',' << num(r.grid[i]) << ',' << num(r.losses[i]) << ','
                    << (i == r.selected_index ? 1 : 0) << '\n';
            }
        }
    }
    written.push_back(path);
    Json resolved;
    resolved["tuned"] = tuning_json(run.result.tuning);
    resolved["lengthscales"] = lengthscales_json(run.result.kernels);
    write_manifest(config, "tune", std::move(resolved), written, Json{{"total_seconds", seconds_since(start)}},
                   written);
    return written;
}

std::vector<std::string> cmd_simulate(const RunConfig& config) {
    validate(config);
    const auto start = Clock::now();
    const SimulationConfig& sim = config.simulation;
    const std::vector<SweepPoint> points = expand_sweep(sim.design, config.resolved_tuning(), sim.sweep);

    std::vector<std::string> written;
    const std::string rep_path = output_path(config, "replicates.csv");
    const std::string sum_path = output_path(config, "summary.csv");
    const std::string table_path = output_path(config, "table.txt");
    std::ofstream reps = open_output(rep_path);
    std::ofstream summary = open_output(sum_path);
    std::ofstream table = open_output(table_path);
    reps << "design,n,dim_x,dim_z,dim_w,forced_lambda,forced_xi,estimator,replicate,seed,value,lambda,xi,failed,"
            "error\n";
    summary << "design,n,dim_x,dim_z,dim_w,forced_lambda,forced_xi,estimator,count,failed,mean,sd,mse,median\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-15s %6s %5s %5s %5s %-9s %10s %10s %10s\n", "design", "n", "dx", "dz", "dw",
                  "estimator", "Mean", "S.D.", "M.S.E.");
    table << line;

    Json per_point = Json::array();
    for (const SweepPoint& point : points) {
        ExperimentOptions options;
        options.replicates = sim.replicates;
        options.seed = config.seed;
        options.run_nc = sim.run_nc;
        options.run_te = sim.run_te;
        options.tuning = point.tuning;
        options.workers = config.workers;
        options.skip_failed = sim.skip_failed;
        const auto point_start = Clock::now();
        const std::vector<ReplicateReport> reports = run_experiment(point.design, options);
        per_point.push_back(seconds_since(point_start));

        const SimDesign& dz = point.design;
        std::string prefix = std::string(to_string(dz.kind)) + ',' + std::to_string(dz.n) + ',' +
                             std::to_string(dz.dim_x) + ',' + std::to_string(dz.dim_z) + ',' +
                             std::to_string(dz.dim_w) + ',' + num(point.tuning.lambda.value_or(NAN)) + ',' +
                             num(point.tuning.xi.value_or(NAN));
        for (const ReplicateReport& report : reports) {
            const std::string est(to_string(report.estimator));
            for (const ReplicateRecord& r : report.records) {
                reps << prefix << ',' << est << ',' << r.replicate << ',' << r.seed << ','
                     << (r.failed ? "NA" : num(r.value)) << ',' << num(r.penalties.lambda) << ','
                     << num(r.penalties.xi) << ',' << (r.failed ? 1 : 0) << ',' << csv::escape(r.error) << '\n';
            }
            const Aggregate& a = report.summary;
            summary << prefix << ',' << est << ',' << a.count << ',' << report.failed << ',' << num(a.mean) << ','
                    << num(a.sd) << ',' << num(a.mse) << ',' << num(a.median) << '\n';
            std::snprintf(line, sizeof line, "%-15s %6lld %5d %5d %5d %-9s %10.4f %10.4f %10.4f\n",
                          std::string(to_string(dz.kind)).c_str(), static_cast<long long>(dz.n), dz.dim_x, dz.dim_z,
                          dz.dim_w, estimator_title(report.estimator).c_str(), a.mean, a.sd, a.mse);
            table << line;
        }
    }
    reps.close();
    summary.close();
    table.close();
    written = {rep_path, sum_path, table_path};

    Json resolved;
    resolved["sweep_points"] = points.size();
    resolved["replicates"] = sim.replicates;
    write_manifest(config, "simulate", std::move(resolved), written,
                   Json{{"per_point_seconds", per_point}, {"total_seconds", seconds_since(start)}}, written);
    return written;
}

std::vector<std::string> cmd_generate(const RunConfig& config) {
    validate(config);
    const auto start = Clock::now();
    const SimDesign& design = config.simulation.design;
    const Dataset data = generate(design, config.seed, config.simulation.replicate);
    std::vector<std::string> written;
    const std::string path = output_path(config, "data.csv");
    write_dataset_csv(data, path);
    written.push_back(path);

    // The manifest doubles as a ready-made estimate config for the file.
    RunConfig follow_up = config;
    follow_up.data.path = path;
    follow_up.data.schema = simulation_schema(design);
    Json resolved;
    resolved["rows"] = data.rows();
    resolved["estimate_config"] = to_json(follow_up);
    write_manifest(config, "generate", std::move(resolved), written, Json{{"total_seconds", seconds_since(start)}},
                   written);
    return written;
}

int exit_code_for(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->category()) {
            case ErrorCategory::configuration:
            case ErrorCategory::ingestion: return 2;
            case ErrorCategory::input:
            case ErrorCategory::numerical: return 1;
        }
    }
    return 1;
}

}  // namespace nckernel::cli
