#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stokpp/config.hpp"

namespace stokpp {

/// What a run did, sufficient to reproduce every CSV it wrote.
struct RunManifest {
    RunConfig config;
    std::map<std::string, std::uint32_t> streams;  // role -> stream id
    std::size_t replicates = 0;                     // replicate ids 0..replicates-1
    double wall_clock_seconds = 0.0;
    std::string version = kVersion;
    std::vector<std::string> files;                 // relative to the output directory

    /// JSON with the config echoed as INI text under "config".
    std::string to_json() const;
};

/// Defaults tuned for each command's reference experiment.
RunConfig preset(Command command);

/// The output directory: $STOKPP_OUTPUT_DIR if set and nonempty, else config.output.dir.
std::filesystem::path output_dir(const RunConfig& config);

/// Validates, runs the command, writes its CSVs and manifest.json into `dir`.
/// Throws ConfigError on an invalid config and NoSurvivors when a conditioned
/// estimate has no surviving replicate.
RunManifest run(const RunConfig& config, const std::filesystem::path& dir);
RunManifest run(const RunConfig& config);

enum ExitStatus : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitNoSurvivors = 3,
};

} // namespace stokpp
