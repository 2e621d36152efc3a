#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lqswitch/config.hpp"

namespace lqswitch {

struct RunOptions {
    std::string output_dir_override; ///< empty keeps the config value
    std::optional<std::uint64_t> seed_override;
    unsigned threads = 0; ///< 0 resolves via env / hardware
};

struct RunOutcome {
    bool all_passed = true;
    int n_experiments = 0;
    std::string output_dir;
    std::vector<std::string> output_files; ///< names relative to output_dir
};

/// Executes the configured experiments in order and writes the P-field CSVs,
/// the Picard diagnostics CSV (when that backend runs), the results CSV and
/// plot script (when there are experiments), and the run manifest with a
/// content hash per output file. Fully deterministic for a fixed config and
/// seed: two runs produce byte-identical CSVs.
RunOutcome run_experiments(const ExperimentConfig& cfg, const RunOptions& opts = {});

} // namespace lqswitch
