#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pnsim/simkit.hpp"

namespace pnsim {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Strict JSON: unknown keys and missing physical parameters are errors.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully resolved configuration; parse_run_config(to_json_text(c)) == c.
std::string to_json_text(const RunConfig& cfg, int indent = 2);

/// FNV-1a of the compact resolved JSON, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

enum class ScenarioPreset { Fig3Distributed, Fig4DvbDistributed, Fig5Concentrated, KnownPhase, AllPilots };

const char* to_string(ScenarioPreset p);
ScenarioPreset preset_from_string(std::string_view s);
std::vector<std::string> preset_names();

/// Preset expanded to a complete configuration. The variant, when given,
/// replaces the detector with the scenario's tuning for that variant.
RunConfig make_preset(ScenarioPreset p, std::optional<DetectorVariant> variant = std::nullopt);

/// "a:step:b" (inclusive) or a comma-separated list.
std::vector<double> parse_ebn0_list(std::string_view s);

}  // namespace pnsim
