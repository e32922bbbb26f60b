// Command-line front end: one JSON config per run, reports on stdout or to a
// file, plans and sweep tables as CSV.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "et/config.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    int depth = 0;
    int workers = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "problem config (JSON)")->required();
    cmd->add_option("--out", args.out_path, "report output path (default: stdout)");
    cmd->add_option("--depth", args.depth, "override the config depth(s)");
    cmd->add_option("--workers", args.workers, "worker threads for zeta pair solves");
    cmd->add_option("--seed", args.seed, "RNG seed for perturbation probes")
        ->each([&](const std::string&) { args.seed_set = true; });
}

int run_command(const CommonArgs& args, const std::string& command) {
    std::ifstream in(args.config_path);
    if (!in) {
        std::cerr << "error: cannot read config '" << args.config_path << "'\n";
        return 1;
    }
    std::stringstream buf;
    buf << in.rdbuf();

    et::Config cfg;
    try {
        cfg = et::parse_config(buf.str());
    } catch (const et::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    using et::ProblemKind;
    bool match = (command == "solve" && (cfg.problem == ProblemKind::p1 ||
                                         cfg.problem == ProblemKind::p2)) ||
                 (command == "dual" && (cfg.problem == ProblemKind::p1 ||
                                        cfg.problem == ProblemKind::p2)) ||
                 (command == "zeta" && (cfg.problem == ProblemKind::zeta_p1 ||
                                        cfg.problem == ProblemKind::zeta_p2)) ||
                 (command == "eo" && cfg.problem == ProblemKind::eo) ||
                 (command == "certify" && cfg.problem == ProblemKind::certify);
    if (!match) {
        std::cerr << "error: command '" << command << "' does not match config problem '"
                  << et::problem_kind_name(cfg.problem) << "'\n";
        return 1;
    }
    if (command == "dual") cfg.refine_dual = true;
    if (args.depth > 0) cfg.depth_x = cfg.depth_y = args.depth;
    if (args.workers >= 0) cfg.workers = args.workers;
    if (args.seed_set) cfg.seed = args.seed;
    if (!args.out_path.empty()) cfg.out_path = args.out_path;

    try {
        et::RunResult result = et::run(cfg);
        if (cfg.out_path.empty()) {
            std::cout << result.report.dump(2) << "\n";
        } else {
            std::cout << "report written to " << cfg.out_path << "\n";
            if (result.report.contains("zeta") && result.report["zeta"].contains("csv"))
                std::cout << "zeta table written to "
                          << result.report["zeta"]["csv"].get<std::string>() << "\n";
            if (result.report.contains("certificate"))
                std::cout << "certificate: "
                          << result.report["certificate"]["status"].get<std::string>() << "\n";
        }
        return result.exit_code;
    } catch (const et::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const et::ResourceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergodic transport solver"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string chosen;
    for (const char* name : {"solve", "dual", "zeta", "certify", "eo"}) {
        CLI::App* cmd = app.add_subcommand(
            name, name == std::string("solve")   ? "solve a p1/p2 instance with value brackets"
                  : name == std::string("dual")  ? "solve and refine the dual pair"
                  : name == std::string("zeta")  ? "run a zeta sweep"
                  : name == std::string("certify") ? "re-check a stored plan and dual pair"
                                                   : "ergodic optimization over periodic orbits");
        add_common(cmd, args);
        cmd->callback([&chosen, name] { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);
    return run_command(args, chosen);
}
