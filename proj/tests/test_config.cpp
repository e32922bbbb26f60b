#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "et/config.hpp"

using namespace et;
using nlohmann::json;

namespace {

const char* kP1Config = R"({
  "problem": "p1",
  "alphabet": 2,
  "depth": 4,
  "mu": [["x0", 0.5], ["x1", 0.5]],
  "cost": {"variant": "sq_dist_to_points",
           "anchors": [["x0", "|01"], ["x1", "|10"]]}
})";

std::string temp_path(const std::string& name) {
    return std::string("/tmp/et_test_") + name;
}

}  // namespace

TEST_CASE("parse a minimal p1 config with defaults") {
    Config cfg = parse_config(kP1Config);
    CHECK(cfg.problem == ProblemKind::p1);
    CHECK(cfg.alphabet == 2);
    CHECK(cfg.lambda == 0.5);
    CHECK(cfg.depth_y == 4);
    CHECK(cfg.tolerance == 1e-9);
    REQUIRE(cfg.mu_finite.has_value());
    CHECK(cfg.mu_finite->atoms.size() == 2);
    REQUIRE(cfg.cost.has_value());
    CHECK(std::holds_alternative<SqDistToPoints>(cfg.cost->variant));
}

TEST_CASE("semantic errors name the offending field") {
    std::string bad_mass = R"({"problem":"p1","depth":3,
        "mu":[["x0",0.5],["x1",0.4]],
        "cost":{"variant":"pair_sq_dist"}})";
    CHECK_THROWS_WITH_AS(parse_config(bad_mass),
                         doctest::Contains("mu"), ConfigError);

    std::string bad_variant = R"({"problem":"p1","depth":3,
        "mu":[["x0",1.0]],
        "cost":{"variant":"mystery"}})";
    CHECK_THROWS_WITH_AS(parse_config(bad_variant),
                         doctest::Contains("unknown variant"), ConfigError);

    std::string syntax = "{\n  \"problem\": \"p1\",\n  oops\n}";
    CHECK_THROWS_WITH_AS(parse_config(syntax), doctest::Contains("line 3"), ConfigError);
}

TEST_CASE("zeta config without flip must be strictly positive") {
    std::string cfg_text = R"({"problem":"zeta-p1",
        "mu":[["x0",0.5],["x1",0.5]],
        "cost":{"variant":"sq_dist_to_points",
                "anchors":[["x0","|01"],["x1","|10"]]},
        "zeta":{"betas":[1.0],"ns":[2],"flip":"none","report_depth":3}})";
    CHECK_THROWS_WITH_AS(parse_config(cfg_text),
                         doctest::Contains("strictly positive"), ConfigError);
    // the diagnostic cites the first failing cylinder pair
    try {
        parse_config(cfg_text);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("x0") != std::string::npos);
        CHECK(std::string(e.what()).find("010") != std::string::npos);
    }
}

TEST_CASE("run p1 produces a certified report and is deterministic") {
    Config cfg = parse_config(kP1Config);
    RunResult first = run(cfg);
    RunResult second = run(cfg);
    CHECK(first.exit_code == 0);
    CHECK(first.report["certificate"]["status"] == "certified");
    CHECK(first.report["value_bracket"]["lo"].get<double>() == doctest::Approx(0.0));
    CHECK(first.report["value_bracket"]["hi"].get<double>() <= std::pow(2.0, -8) + 1e-9);

    json a = first.report, b = second.report;
    a.erase("timings_ms");
    b.erase("timings_ms");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("reports round trip losslessly through the serializer") {
    Config cfg = parse_config(kP1Config);
    RunResult res = run(cfg);
    std::string text = res.report.dump(2);
    json reparsed = json::parse(text);
    CHECK(reparsed.dump(2) == text);
}

TEST_CASE("plan and dual serialization round trips") {
    Config cfg = parse_config(kP1Config);
    RunResult res = run(cfg);
    TransportPlan plan = plan_from_json(res.report["plan"], 2);
    CHECK(plan_to_json(plan).dump() == res.report["plan"].dump());
    DualPair dual = dual_from_json(res.report["dual"], 2);
    CHECK(dual_to_json(dual).dump() == res.report["dual"].dump());
}

TEST_CASE("certify command re-checks a stored report") {
    std::string report_path = temp_path("report.json");
    Config cfg = parse_config(kP1Config);
    cfg.out_path = report_path;
    RunResult solved = run(cfg);
    CHECK(solved.exit_code == 0);

    std::string certify_text =
        std::string(R"({"problem":"certify","certify":{"report":")") + report_path + "\"}}";
    Config certify_cfg = parse_config(certify_text);
    RunResult checked = run(certify_cfg);
    CHECK(checked.exit_code == 0);
    CHECK(checked.report["certificate"]["status"] == "certified");

    // corrupting the stored dual flips the certificate
    std::ifstream in(report_path);
    json stored = json::parse(in);
    in.close();
    for (auto& [key, value] : stored["dual"]["psi"].items()) {
        stored["dual"]["psi"][key] = value.get<double>() + 0.5;
        break;
    }
    std::ofstream out(report_path);
    out << stored.dump(2);
    out.close();
    RunResult rechecked = run(certify_cfg);
    CHECK(rechecked.report["certificate"]["status"] == "gap-reported");
    std::remove(report_path.c_str());
}

TEST_CASE("run zeta writes the csv table") {
    std::string csv_path = temp_path("zeta.csv");
    std::string cfg_text = std::string(R"({"problem":"zeta-p1",
        "mu":[["x0",0.5],["x1",0.5]],
        "cost":{"variant":"sq_dist_to_points",
                "anchors":[["x0","|01"],["x1","|10"]]},
        "zeta":{"betas":[0.0,25.0],"ns":[2],"report_depth":3},
        "csv":{"zeta":")") + csv_path + "\"}}";
    Config cfg = parse_config(cfg_text);
    RunResult res = run(cfg);
    CHECK(res.exit_code == 0);
    CHECK(res.report["zeta"]["table"].size() == 2);
    // auto flip reports both scales
    CHECK(res.report.contains("zeta_flip"));
    std::ifstream csv(csv_path);
    REQUIRE(csv.good());
    std::string header;
    std::getline(csv, header);
    CHECK(header == "beta,n,value,res_x,res_y,gap");
    int lines = 0;
    for (std::string line; std::getline(csv, line);)
        if (!line.empty()) ++lines;
    CHECK(lines == 2);
    std::remove(csv_path.c_str());
}

TEST_CASE("run eo reports the minimizing orbit") {
    std::string cfg_text = R"({"problem":"eo",
        "cost":{"variant":"sq_dist_to_points","anchors":[["x0","|01"]]},
        "eo":{"n_max":6}})";
    Config cfg = parse_config(cfg_text);
    RunResult res = run(cfg);
    CHECK(res.report["eo"]["value"].get<double>() == doctest::Approx(0.25));
    CHECK(res.report["eo"]["orbit"] == "0");
}

TEST_CASE("dual refinement through run") {
    Config cfg = parse_config(kP1Config);
    cfg.refine_dual = true;
    RunResult res = run(cfg);
    CHECK(res.exit_code == 0);
    CHECK(res.report["refine"]["converged"] == true);
    CHECK(res.report["refine"]["residual"].get<double>() <= 1e-10);
    CHECK(res.report.contains("refined_dual"));
}

TEST_CASE("probe and perturbation through run") {
    std::string cfg_text = R"({"problem":"p2","depths":[3,3],
        "cost":{"variant":"min_sum_sq",
                "contacts":[["|01","|001"],["|10","|010"],["|01","|100"],["|10","|100"]]},
        "probe": true, "perturb": {"r": 1e-3}, "seed": 7})";
    Config cfg = parse_config(cfg_text);
    RunResult res = run(cfg);
    CHECK(res.report["uniqueness"]["unique"] == true);
    CHECK(res.report["perturbed"]["uniqueness"]["unique"] == true);
}
