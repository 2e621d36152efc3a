#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lqswitch/mpp.hpp"
#include "lqswitch/regime_field.hpp"

namespace lqswitch {

struct Violation {
    std::string path;    ///< JSON path of the offending field
    std::string message;
};

struct SolverSettings {
    std::string backend = "direct"; ///< direct | picard | both
    double tol = 1e-10;
    int max_iter = 50;
};

struct MonteCarloSettings {
    int n_paths = 10000;
    double dt_sim = 1e-3;
    std::uint64_t root_seed = 1;
};

struct ExperimentSpec {
    std::string id;
    std::string kind; ///< value_check | fundamental_relation | optimality |
                      ///< compensator | moment | convergence
    nlohmann::json params;
};

/// A fully built experiment configuration. Construct via load_config, which
/// validates first; the raw JSON is kept for the run manifest.
struct ExperimentConfig {
    nlohmann::json raw;
    SwitchingLaw law;
    CoefficientSet coeffs;
    std::optional<Grid> grid;
    SolverSettings solver;
    MonteCarloSettings mc;
    std::vector<ExperimentSpec> experiments;
    std::string output_dir = "out";
};

/// Structural validation; empty result iff the config is runnable. Each
/// violation names the JSON path and the broken invariant.
std::vector<Violation> validate_config(const nlohmann::json& j);

/// Validates and builds. Throws std::invalid_argument listing the violations
/// when validation fails.
ExperimentConfig load_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

} // namespace lqswitch
