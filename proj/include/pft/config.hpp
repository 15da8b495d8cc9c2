#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pft/experiments.hpp"
#include "pft/synth.hpp"
#include "pft/training.hpp"

namespace pft {

/// Environment variable naming the default output root.
inline constexpr const char* kOutDirEnvVar = "PFT_OUT_DIR";

/// Everything a run needs, resolved from defaults, an optional config file
/// and flag overrides. All randomness downstream of this flows from `seed`.
struct RunConfig {
    std::uint64_t seed = 42;
    std::string out_dir;  // resolved against kOutDirEnvVar, then "pft-out"

    // synthetic data
    std::size_t dim = 16;
    std::size_t shared_dim = 8;
    double transfer_strength = 0.9;
    double noise_scale = 1.4;

    // model / optimizer
    std::size_t hidden_dim = 32;
    OptimizerConfig opt;

    // training schedules
    std::size_t prefinetune_max_epochs = 200;
    std::size_t prefinetune_patience = 3;
    std::size_t finetune_max_epochs = 200;
    std::size_t finetune_patience = 30;

    // grid
    GridDims grid;
    std::size_t parallelism = 1;
};

RunConfig default_config();

/// Parses a JSON config document. Unknown keys are rejected with the full
/// dotted path; values replace the defaults. `origin` names the source in
/// error messages.
RunConfig parse_config(const std::string& text, const std::string& origin);

RunConfig load_config(const std::filesystem::path& path);

/// Throws std::invalid_argument naming the offending field.
void validate_config(const RunConfig& config);

/// Canonical serialization (stable key order, full precision).
std::string serialize_config(const RunConfig& config);

/// Hash of the canonical serialization; identical hash means identical
/// resolved settings.
std::string config_hash(const RunConfig& config);

/// The synthetic-suite spec this config describes (default five corpora).
SynthSpec synth_spec_of(const RunConfig& config);

}  // namespace pft
