#pragma once

// JSON problem configs, report assembly, and the batch driver behind the CLI.

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "et/zeta.hpp"

namespace et {

enum class ProblemKind { p1, p2, eo, zeta_p1, zeta_p2, certify };

std::string problem_kind_name(ProblemKind k);

struct ZetaConfig {
    std::vector<double> betas{0.0};
    std::vector<int> ns{2};
    PeriodMode period_mode = PeriodMode::dividing;
    int report_depth = 4;
    bool auto_flip = true;  // replace c by (sup c + margin) - c before maximizing
    double margin = 1.0;
};

struct Config {
    ProblemKind problem = ProblemKind::p1;
    int alphabet = 2;
    double lambda = 0.5;
    int depth_x = 6;
    int depth_y = 6;
    double tolerance = 1e-9;
    std::uint64_t word_cap = std::uint64_t{1} << 22;
    int workers = 0;  // 0 = hardware concurrency
    std::uint64_t seed = 0;

    std::optional<FiniteMeasure> mu_finite;
    std::optional<CylinderMeasure> mu_cylinder;
    std::optional<CostSpec> cost;

    ZetaConfig zeta;
    int eo_n_max = 8;
    std::string certify_report;  // path of a stored report to re-check

    bool probe = false;
    std::optional<double> perturb_r;
    bool refine_dual = false;  // set by the `dual` command

    std::string out_path;  // empty = stdout
    std::string plan_csv;
    std::string zeta_csv;

    nlohmann::json raw;  // echoed into reports
};

// Parses and validates one JSON config object; throws ConfigError with
// line/field diagnostics.
Config parse_config(const std::string& text);

struct RunResult {
    nlohmann::json report;
    int exit_code = 0;  // 0 ok, 1 config error, 2 solver non-convergence
};

// Dispatches to the solvers, writes the report (and CSV dumps when
// configured) and returns it.
RunResult run(const Config& cfg);

// Serialization helpers shared by run(), certify reload, and tests.
nlohmann::json plan_to_json(const TransportPlan& plan);
TransportPlan plan_from_json(const nlohmann::json& j, int alphabet);
nlohmann::json dual_to_json(const DualPair& dp);
DualPair dual_from_json(const nlohmann::json& j, int alphabet);

}  // namespace et
