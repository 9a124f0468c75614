#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kitwpa/cme.hpp"
#include "kitwpa/config.hpp"
#include "kitwpa/device_model.hpp"
#include "kitwpa/noise.hpp"

namespace kitwpa {

inline constexpr const char* tool_version = "1.0.0";

/// Process exit codes.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 2;
inline constexpr int config = 3;
inline constexpr int missing_input = 4;
inline constexpr int schema = 5;
inline constexpr int numerical = 6;
inline constexpr int internal = 1;
}  // namespace exit_code

struct RunRequest {
    /// A subcommand, or "synth" with `kind` set.
    std::string subcommand;
    std::string kind;
    std::string config_path;
    std::vector<std::string> inputs;
    std::optional<std::string> output_dir;
    std::optional<std::string> format;
    unsigned jobs = 1;
};

struct RunOutcome {
    int status = exit_code::ok;
    std::vector<std::string> files;
    /// Machine-readable error record, empty on success.
    std::string error_json;
};

/// Executes one request. Never throws; failures are reported in the outcome.
RunOutcome run(const RunRequest& request);

/// Same as run() with the configuration already in memory. `config_text`
/// is what the provenance hash is computed over.
RunOutcome run_with_config(const RunRequest& request, const std::string& config_text);

/// The subcommand names accepted by run().
const std::vector<std::string>& subcommands();
const std::vector<std::string>& synth_kinds();

/// Builders from configuration sections, exposed for reuse and testing.
DeviceSpec device_from_config(const Config& cfg);
PumpConfig pump_from_config(const Config& cfg, const DeviceSpec& spec);
NoiseChain noise_chain_from_config(const Config& cfg);
std::vector<double> sweep_axis_from_config(const Config& cfg, Dimension dim);

}  // namespace kitwpa
