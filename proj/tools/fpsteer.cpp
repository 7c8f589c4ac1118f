// Scenario runner CLI. Configs are flat JSON objects (see README); outputs
// land in $FPSTEER_OUT/<scenario name>/ (default: current directory).

#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpsteer/scenario.hpp"

namespace {

int run_with_mode(const std::string& config_path, const std::string& expected_mode) {
    try {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open " + config_path);
        const auto j = nlohmann::json::parse(in);
        if (j.value("mode", std::string()) != expected_mode) {
            std::fprintf(stderr, "config error: expected mode '%s'\n", expected_mode.c_str());
            return 2;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    return fpsteer::run_scenario(config_path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fpsteer: density steering laboratory for the controlled "
                 "Fokker-Planck equation on [0,1]"};
    app.require_subcommand(1);

    std::string config;
    auto add = [&](const std::string& name, const std::string& desc) {
        auto* cmd = app.add_subcommand(name, desc);
        cmd->add_option("config", config, "scenario config (JSON)")->required();
        return cmd;
    };
    auto* cmd_run = add("run", "run a scenario (mode from config)");
    auto* cmd_spectrum = add("spectrum", "eigenvalues and spectral gap of the weighted operator");
    auto* cmd_particles = add("particles", "reflected-diffusion ensemble simulation");
    auto* cmd_convergence = add("convergence", "grid/time-step self-convergence study");
    auto* cmd_replay = add("replay", "open-loop replay check of a recorded drift");

    CLI11_PARSE(app, argc, argv);

    if (cmd_run->parsed()) return fpsteer::run_scenario(config);
    if (cmd_spectrum->parsed()) return run_with_mode(config, "spectrum");
    if (cmd_particles->parsed()) return run_with_mode(config, "particles");
    if (cmd_convergence->parsed()) return fpsteer::run_convergence(config);
    if (cmd_replay->parsed()) return run_with_mode(config, "replay");
    return 2;
}
