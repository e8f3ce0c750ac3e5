#pragma once

/// Experiment files: JSON documents with nested sections. Parsing fills every
/// default and keeps a normalized copy (sorted keys, canonical expressions,
/// numbers as doubles) that parses back to itself.

#include "evolab/error.hpp"
#include "evolab/harness.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evolab::cli {

/// Malformed or inconsistent experiment file.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct OutputOptions {
    std::string dir = "evolab-out";
    bool svg = false;
};

struct ExperimentConfig {
    HarnessSetup setup;
    std::vector<std::string> checks;
    bool compactness = false;
    bool tightness_family = false;
    int workers = 1;
    OutputOptions output;
    nlohmann::json normalized;
};

/// Command-line values that replace their config counterparts before parsing.
struct Overrides {
    std::optional<int> workers;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
};

/// Syntax errors are reported with line and column.
nlohmann::json read_json(std::string_view text, const std::string& origin);
nlohmann::json read_json_file(const std::filesystem::path& path);

void apply_overrides(nlohmann::json& doc, const Overrides& o);

/// Field errors name the offending path, e.g. "window.pairs[0].t".
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Two-space indented dump of the normalized form.
std::string normalized_text(const ExperimentConfig& cfg);

}  // namespace evolab::cli
