#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ommap/io.hpp"

namespace ommap {

struct RunOptions {
    std::optional<std::uint64_t> seed;          // overrides the config seed
    std::optional<std::filesystem::path> out;   // overrides the config output directory
    int threads = 0;
};

struct RunSummary {
    std::string kind;
    std::filesystem::path out_dir;
    json results;
    std::vector<std::string> files;
};

/// Kinds: ball_ratio, classify_mode, m_property, gamma_check, map_solve,
/// perturbation, small_noise, counterexample.
const std::vector<std::string>& experiment_kinds();

/// Full schema check without running anything. Throws ConfigError.
void validate_config(const json& cfg);

/// Writes results.json plus one CSV per table into the output directory.
RunSummary run_config(const json& cfg, const RunOptions& opts = {});

const std::vector<std::string>& figure_ids();

/// Plot-ready grids for fig1a, fig1b, figB1 or figB3. Returns the files written.
std::vector<std::string> reproduce_figure(const std::string& id, const std::filesystem::path& out_dir);

}  // namespace ommap
