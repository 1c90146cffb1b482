#pragma once

// Run configuration for the CLI: JSON file with a documented schema; command
// line flags override file values. Validation collects every problem with
// its field path before reporting.

#include <optional>
#include <string>
#include <vector>

#include "mrcdm/harness.hpp"
#include "mrcdm/pipeline.hpp"

namespace mrcdm {

struct RunConfig {
    DatasetSpec dataset;
    SplitSpec split;
    ModelConfig model;
    std::vector<std::uint64_t> seeds = {42, 43, 44};
    std::string out_dir = "out";
    bool plot = false;

    // protocol knobs
    std::vector<int> horizons = {24, 48, 96, 192};
    std::vector<int> seq_lens = {48, 96, 192};
    std::vector<std::string> ablation_variants;  ///< empty = all
};

/// Parses a config JSON file. Unknown keys and invalid values are reported
/// together as a ConfigError listing every field path.
RunConfig load_run_config(const std::string& path);

/// Validates ranges (n_points, fractions, positive lengths, ...); throws a
/// ConfigError enumerating all violations.
void validate_run_config(const RunConfig& cfg);

/// Canonical JSON of the full run configuration (for manifests and hashing).
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace mrcdm
