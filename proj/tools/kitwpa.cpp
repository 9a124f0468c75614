#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kitwpa/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Simulation and analysis toolkit for kinetic-inductance traveling-wave parametric amplifiers"};
    app.set_version_flag("--version", std::string("kitwpa ") + kitwpa::tool_version);

    std::string command;
    std::string kind;
    kitwpa::RunRequest request;
    std::string output_dir;
    std::string format;

    std::string names;
    for (const auto& n : kitwpa::subcommands()) names += (names.empty() ? "" : ", ") + n;
    app.add_option("command", command, "One of: " + names + ", synth")->required();
    app.add_option("kind", kind, "Synthetic dataset for synth: noise-traces, bandgap-data, power-sweep");
    app.add_option("-c,--config", request.config_path, "Configuration file")->required();
    app.add_option("-i,--input", request.inputs, "Input CSV file");
    app.add_option("-o,--output-dir", output_dir, "Output directory (overrides KITWPA_OUTPUT_DIR and the config)");
    app.add_option("-f,--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("-j,--jobs", request.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        nlohmann::ordered_json record;
        record["status"] = kitwpa::exit_code::usage;
        record["error"] = "usage";
        record["message"] = e.what();
        std::cerr << record.dump() << '\n';
        return kitwpa::exit_code::usage;
    }

    request.subcommand = command;
    request.kind = kind;
    if (!output_dir.empty()) request.output_dir = output_dir;
    if (!format.empty()) request.format = format;

    const kitwpa::RunOutcome outcome = kitwpa::run(request);
    if (outcome.status != kitwpa::exit_code::ok) {
        std::cerr << outcome.error_json << '\n';
        return outcome.status;
    }
    for (const auto& f : outcome.files) std::cout << f << '\n';
    return 0;
}
