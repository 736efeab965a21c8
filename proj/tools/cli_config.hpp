#pragma once

#include "nckernel/dataset.hpp"
#include "nckernel/effects.hpp"
#include "nckernel/pipeline.hpp"
#include "nckernel/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nckernel::cli {

using Json = nlohmann::ordered_json;

struct DataConfig {
    std::string path;
    Schema schema;
    /// Reweighting population for distribution shift; carries the V, X, W columns.
    std::string population;
    /// Explicit Gaussian lengthscales by column name; the rest use the median heuristic.
    std::map<std::string, double> lengthscales;
};

struct EffectConfig {
    EffectKind kind = EffectKind::ate;
    std::vector<double> grid;  // empty: default grid from the treatment column
    std::size_t grid_points = 100;
    /// Text so categorical labels work; numbers are parsed.
    std::string d_condition = "0";
    std::vector<std::string> v_condition;
    bool baseline = false;
};

struct PenaltyGrid {
    double lo = 1e-8;
    double hi = 1e2;
    std::size_t count = 20;
};

struct SimulationConfig {
    SimDesign design;
    std::size_t replicates = 100;
    bool run_nc = true;
    bool run_te = true;
    bool skip_failed = false;
    SweepSpec sweep;
    /// Replicate index used by `generate`.
    std::uint32_t replicate = 0;
};

struct RunConfig {
    DataConfig data;
    EffectConfig effect;
    TuningConfig tuning;
    PenaltyGrid penalty_grid;
    SimulationConfig simulation;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string out = "nckernel-out";

    /// TuningConfig with the grid filled in from penalty_grid.
    TuningConfig resolved_tuning() const;
};

Json to_json(const RunConfig& config);

/// Overlays the keys present in `doc` onto `config`. Unknown keys and
/// ill-typed values are configuration errors. A manifest is accepted too:
/// its "config" section is used.
void merge_json(RunConfig& config, const Json& doc);

RunConfig load_config_file(const std::string& path);

/// Checks that apply to every command.
void validate(const RunConfig& config);

}  // namespace nckernel::cli
