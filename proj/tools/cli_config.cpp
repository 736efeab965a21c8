#include "cli_config.hpp"

#include "nckernel/csv.hpp"
#include "nckernel/errors.hpp"
#include "nckernel/ridge.hpp"

#include <fstream>
#include <set>

namespace nckernel::cli {

namespace {

void reject_unknown(const Json& obj, const std::set<std::string>& known, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (!known.contains(key)) throw ConfigError("unknown key '" + where + "." + key + "'");
    }
}

template <typename T>
void read(const Json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("'" + where + "." + key + "' has the wrong type");
    }
}

template <typename T>
void read_optional(const Json& obj, const char* key, std::optional<T>& out, const std::string& where) {
    if (!obj.contains(key)) return;
    if (obj.at(key).is_null()) {
        out.reset();
        return;
    }
    T value{};
    read(obj, key, value, where);
    out = value;
}

// Numbers and strings both become text.
std::string text_of(const Json& value, const std::string& where) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number()) {
        const double v = value.get<double>();
        return csv::format_double(v);
    }
    throw ConfigError("'" + where + "' must be a number or a string");
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

Json schema_json(const Schema& s) {
    Json out;
    out["y"] = s.y;
    out["d"] = s.d;
    out["v"] = s.v;
    out["x"] = s.x;
    out["w"] = s.w;
    out["z"] = s.z;
    out["categorical"] = std::vector<std::string>(s.categorical.begin(), s.categorical.end());
    return out;
}

void merge_schema(Schema& s, const Json& obj) {
    const std::string where = "data.schema";
    reject_unknown(obj, {"y", "d", "v", "x", "w", "z", "categorical"}, where);
    read(obj, "y", s.y, where);
    read(obj, "d", s.d, where);
    read(obj, "v", s.v, where);
    read(obj, "x", s.x, where);
    read(obj, "w", s.w, where);
    read(obj, "z", s.z, where);
    std::vector<std::string> cat(s.categorical.begin(), s.categorical.end());
    read(obj, "categorical", cat, where);
    s.categorical = {cat.begin(), cat.end()};
}

void merge_data(DataConfig& d, const Json& obj) {
    reject_unknown(obj, {"path", "schema", "population", "lengthscales"}, "data");
    read(obj, "path", d.path, "data");
    read(obj, "population", d.population, "data");
    if (obj.contains("schema")) merge_schema(d.schema, obj.at("schema"));
    if (obj.contains("lengthscales")) {
        const Json& ls = obj.at("lengthscales");
        if (!ls.is_object()) throw ConfigError("'data.lengthscales' must map column names to numbers");
        d.lengthscales.clear();
        for (const auto& [name, value] : ls.items()) {
            if (!value.is_number()) throw ConfigError("'data.lengthscales." + name + "' must be a number");
            d.lengthscales[name] = value.get<double>();
        }
    }
}

void merge_effect(EffectConfig& e, const Json& obj) {
    const std::string where = "effect";
    reject_unknown(obj, {"kind", "grid", "grid_points", "d_condition", "v_condition", "baseline"}, where);
    if (obj.contains("kind")) {
        std::string kind;
        read(obj, "kind", kind, where);
        e.kind = parse_effect_kind(kind);
    }
    read(obj, "grid", e.grid, where);
    read(obj, "grid_points", e.grid_points, where);
    if (obj.contains("d_condition")) e.d_condition = text_of(obj.at("d_condition"), "effect.d_condition");
    if (obj.contains("v_condition")) {
        const Json& v = obj.at("v_condition");
        if (!v.is_array()) throw ConfigError("'effect.v_condition' must be a list");
        e.v_condition.clear();
        for (const auto& item : v) e.v_condition.push_back(text_of(item, "effect.v_condition"));
    }
    read(obj, "baseline", e.baseline, where);
}

void merge_tuning(RunConfig& c, const Json& obj) {
    const std::string where = "tuning";
    reject_unknown(obj, {"mode", "lambda", "xi", "lambda_extra", "smoothness", "grid"}, where);
    if (obj.contains("mode")) {
        std::string mode;
        read(obj, "mode", mode, where);
        c.tuning.mode = parse_tuning_mode(mode);
    }
    read_optional(obj, "lambda", c.tuning.lambda, where);
    read_optional(obj, "xi", c.tuning.xi, where);
    read_optional(obj, "lambda_extra", c.tuning.lambda_extra, where);
    if (obj.contains("smoothness")) {
        const Json& s = obj.at("smoothness");
        reject_unknown(s, {"c0", "c", "c1", "c2"}, "tuning.smoothness");
        read(s, "c0", c.tuning.smoothness.c0, "tuning.smoothness");
        read(s, "c", c.tuning.smoothness.c, "tuning.smoothness");
        read(s, "c1", c.tuning.smoothness.c1, "tuning.smoothness");
        read(s, "c2", c.tuning.smoothness.c2, "tuning.smoothness");
    }
    if (obj.contains("grid")) {
        const Json& g = obj.at("grid");
        reject_unknown(g, {"lo", "hi", "count"}, "tuning.grid");
        read(g, "lo", c.penalty_grid.lo, "tuning.grid");
        read(g, "hi", c.penalty_grid.hi, "tuning.grid");
        read(g, "count", c.penalty_grid.count, "tuning.grid");
    }
}

void merge_simulation(SimulationConfig& s, const Json& obj) {
    const std::string where = "simulation";
    reject_unknown(obj, {"design", "n", "dim_x", "dim_z", "dim_w", "replicates", "estimators", "skip_failed", "sweep",
                         "replicate"},
                   where);
    if (obj.contains("design")) {
        std::string design;
        read(obj, "design", design, where);
        s.design.kind = parse_design_kind(design);
    }
    read(obj, "n", s.design.n, where);
    read(obj, "dim_x", s.design.dim_x, where);
    read(obj, "dim_z", s.design.dim_z, where);
    read(obj, "dim_w", s.design.dim_w, where);
    read(obj, "replicates", s.replicates, where);
    read(obj, "skip_failed", s.skip_failed, where);
    read(obj, "replicate", s.replicate, where);
    if (obj.contains("estimators")) {
        std::vector<std::string> names;
        read(obj, "estimators", names, where);
        s.run_nc = s.run_te = false;
        for (const auto& name : names) {
            if (name == "nc") {
                s.run_nc = true;
            } else if (name == "te") {
                s.run_te = true;
            } else {
                throw ConfigError("unknown estimator '" + name + "' (expected nc or te)");
            }
        }
    }
    if (obj.contains("sweep")) {
        const Json& sw = obj.at("sweep");
        const std::string w = "simulation.sweep";
        reject_unknown(sw, {"n", "dim_x", "dim_z", "dim_w", "lambda", "xi"}, w);
        read(sw, "n", s.sweep.n, w);
        read(sw, "dim_x", s.sweep.dim_x, w);
        read(sw, "dim_z", s.sweep.dim_z, w);
        read(sw, "dim_w", s.sweep.dim_w, w);
        read(sw, "lambda", s.sweep.forced_lambda, w);
        read(sw, "xi", s.sweep.forced_xi, w);
    }
}

}  // namespace

TuningConfig RunConfig::resolved_tuning() const {
    TuningConfig t = tuning;
    t.grid = log_grid(penalty_grid.lo, penalty_grid.hi, penalty_grid.count);
    return t;
}

Json to_json(const RunConfig& c) {
    Json out;
    out["seed"] = c.seed;
    out["workers"] = c.workers;
    out["out"] = c.out;

    Json data;
    data["path"] = c.data.path;
    data["schema"] = schema_json(c.data.schema);
    data["population"] = c.data.population;
    data["lengthscales"] = Json::object();
    for (const auto& [name, value] : c.data.lengthscales) data["lengthscales"][name] = value;
    out["data"] = data;

    Json effect;
    effect["kind"] = std::string(to_string(c.effect.kind));
    effect["grid"] = c.effect.grid;
    effect["grid_points"] = c.effect.grid_points;
    effect["d_condition"] = c.effect.d_condition;
    effect["v_condition"] = c.effect.v_condition;
    effect["baseline"] = c.effect.baseline;
    out["effect"] = effect;

    Json tuning;
    tuning["mode"] = std::string(to_string(c.tuning.mode));
    tuning["lambda"] = optional_json(c.tuning.lambda);
    tuning["xi"] = optional_json(c.tuning.xi);
    tuning["lambda_extra"] = optional_json(c.tuning.lambda_extra);
    tuning["smoothness"] = {{"c0", c.tuning.smoothness.c0},
                            {"c", c.tuning.smoothness.c},
                            {"c1", c.tuning.smoothness.c1},
                            {"c2", c.tuning.smoothness.c2}};
    tuning["grid"] = {{"lo", c.penalty_grid.lo}, {"hi", c.penalty_grid.hi}, {"count", c.penalty_grid.count}};
    out["tuning"] = tuning;

    const SimulationConfig& s = c.simulation;
    Json sim;
    sim["design"] = std::string(to_string(s.design.kind));
    sim["n"] = s.design.n;
    sim["dim_x"] = s.design.dim_x;
    sim["dim_z"] = s.design.dim_z;
    sim["dim_w"] = s.design.dim_w;
    sim["replicates"] = s.replicates;
    std::vector<std::string> estimators;
    if (s.run_nc) estimators.emplace_back("nc");
    if (s.run_te) estimators.emplace_back("te");
    sim["estimators"] = estimators;
    sim["skip_failed"] = s.skip_failed;
    sim["replicate"] = s.replicate;
    sim["sweep"] = {{"n", s.sweep.n},         {"dim_x", s.sweep.dim_x},          {"dim_z", s.sweep.dim_z},
                    {"dim_w", s.sweep.dim_w}, {"lambda", s.sweep.forced_lambda}, {"xi", s.sweep.forced_xi}};
    out["simulation"] = sim;
    return out;
}

void merge_json(RunConfig& c, const Json& doc) {
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    if (doc.contains("config") && doc.contains("command")) {
        merge_json(c, doc.at("config"));
        return;
    }
    reject_unknown(doc, {"seed", "workers", "out", "data", "effect", "tuning", "simulation"}, "config");
    read(doc, "seed", c.seed, "config");
    read(doc, "workers", c.workers, "config");
    read(doc, "out", c.out, "config");
    if (doc.contains("data")) merge_data(c.data, doc.at("data"));
    if (doc.contains("effect")) merge_effect(c.effect, doc.at("effect"));
    if (doc.contains("tuning")) merge_tuning(c, doc.at("tuning"));
    if (doc.contains("simulation")) merge_simulation(c.simulation, doc.at("simulation"));
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    RunConfig config;
    merge_json(config, doc);
    return config;
}

void validate(const RunConfig& c) {
    if (c.workers < 1) throw ConfigError("workers must be at least 1");
    if (c.tuning.lambda && !(*c.tuning.lambda > 0.0)) throw ConfigError("forced lambda must be positive");
    if (c.tuning.xi && !(*c.tuning.xi > 0.0)) throw ConfigError("forced xi must be positive");
    if (c.tuning.lambda_extra && !(*c.tuning.lambda_extra > 0.0)) {
        throw ConfigError("forced embedding penalty must be positive");
    }
    if (c.tuning.mode == TuningMode::forced && (!c.tuning.lambda || !c.tuning.xi)) {
        throw ConfigError("tuning mode 'forced' needs both lambda and xi");
    }
    if (c.effect.grid_points < 1) throw ConfigError("grid_points must be at least 1");
    for (const auto& [name, value] : c.data.lengthscales) {
        if (!(value > 0.0)) throw ConfigError("lengthscale for '" + name + "' must be positive");
    }
    c.resolved_tuning();  // grid bounds
    c.simulation.design.validate();
    if (c.simulation.replicates < 1) throw ConfigError("replicates must be at least 1");
}

}  // namespace nckernel::cli
