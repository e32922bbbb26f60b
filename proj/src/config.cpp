#include "et/config.hpp"

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace et {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
}

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& field) {
    if (!j.is_number_integer()) fail(field, "expected an integer");
    return j.get<int>();
}

// A cell string is a point when it contains '|', otherwise a label.
Cell parse_x_cell(const std::string& text, int d) {
    if (text.find('|') != std::string::npos) return Point::parse(text, d);
    return Label{text};
}

FiniteMeasure parse_finite_measure(const json& j, const std::string& field, int d) {
    if (!j.is_array()) fail(field, "expected an array of [atom, mass] pairs");
    FiniteMeasure m;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& entry = j[i];
        std::string where = field + "[" + std::to_string(i) + "]";
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string())
            fail(where, "expected [\"atom\", mass]");
        m.atoms.emplace_back(parse_x_cell(entry[0].get<std::string>(), d),
                             get_number(entry[1], where + ".mass"));
    }
    try {
        m.validate(1e-9);
    } catch (const Error& e) {
        fail(field, e.what());
    }
    return m;
}

CylinderMeasure parse_cylinder_measure(const json& j, const std::string& field, int d) {
    if (!j.contains("depth") || !j.contains("masses")) fail(field, "expected {depth, masses}");
    CylinderMeasure m;
    m.depth = get_int(j["depth"], field + ".depth");
    m.alphabet = d;
    m.mass.assign(ipow(d, m.depth), 0.0);
    for (const auto& [word, mass] : j["masses"].items()) {
        Word w = Word::parse(word, d);
        if (w.size() != m.depth) fail(field + ".masses." + word, "word length != depth");
        m.mass[w.index()] = get_number(mass, field + ".masses." + word);
    }
    try {
        m.validate(1e-9);
    } catch (const Error& e) {
        fail(field, e.what());
    }
    return m;
}

CostSpec parse_cost(const json& j, const std::string& field, int d, double lambda) {
    if (!j.is_object() || !j.contains("variant")) fail(field, "expected {variant, ...}");
    CostSpec c;
    c.alphabet = d;
    c.metric.lambda = lambda;
    std::string variant = j["variant"].get<std::string>();
    if (variant == "table") {
        TableCost t;
        t.kx = j.contains("kx") ? get_int(j["kx"], field + ".kx") : 0;
        t.ky = get_int(j.at("ky"), field + ".ky");
        const json& values = j.at("values");
        if (!values.is_array()) fail(field + ".values", "expected rows of numbers");
        for (std::size_t r = 0; r < values.size(); ++r) {
            if (!values[r].is_array()) fail(field + ".values", "expected rows of numbers");
            for (std::size_t cidx = 0; cidx < values[r].size(); ++cidx)
                t.values.push_back(get_number(values[r][cidx], field + ".values"));
        }
        c.variant = std::move(t);
    } else if (variant == "sq_dist_to_points") {
        SqDistToPoints s;
        for (const json& a : j.at("anchors")) {
            if (!a.is_array() || a.size() != 2) fail(field + ".anchors", "expected [label, point]");
            s.anchors.emplace_back(a[0].get<std::string>(),
                                   Point::parse(a[1].get<std::string>(), d));
        }
        c.variant = std::move(s);
    } else if (variant == "min_sum_sq") {
        MinSumSq m;
        for (const json& z : j.at("contacts")) {
            if (!z.is_array() || z.size() != 2) fail(field + ".contacts", "expected [x, y] points");
            m.contacts.emplace_back(Point::parse(z[0].get<std::string>(), d),
                                    Point::parse(z[1].get<std::string>(), d));
        }
        c.variant = std::move(m);
    } else if (variant == "pair_sq_dist") {
        c.variant = PairSqDist{};
    } else if (variant == "affine") {
        AffineCost a;
        a.scale = get_number(j.at("scale"), field + ".scale");
        a.offset = j.contains("offset") ? get_number(j["offset"], field + ".offset") : 0.0;
        a.inner = std::make_shared<const CostSpec>(
            parse_cost(j.at("inner"), field + ".inner", d, lambda));
        c.variant = std::move(a);
    } else {
        fail(field + ".variant", "unknown variant '" + variant + "'");
    }
    try {
        c.validate();
    } catch (const Error& e) {
        fail(field, e.what());
    }
    return c;
}

// Sup of the cost over the report grid; used by the automatic zeta flip.
double cost_grid_sup(const CostSpec& cost, const std::vector<Cell>& x_cells, int depth) {
    double sup = -std::numeric_limits<double>::infinity();
    std::uint64_t ny = ipow(cost.alphabet, depth);
    for (const Cell& u : x_cells)
        for (std::uint64_t v = 0; v < ny; ++v)
            sup = std::max(sup,
                           cost_bracket(cost, u, Cylinder(word_from_index(v, depth, cost.alphabet))).hi);
    return sup;
}

std::vector<Cell> zeta_x_cells(const Config& cfg) {
    if (cfg.problem == ProblemKind::zeta_p1) {
        std::vector<Cell> cells;
        for (const auto& [cell, mass] : cfg.mu_finite->atoms) cells.push_back(cell);
        return cells;
    }
    std::vector<Cell> cells;
    for (std::uint64_t i = 0; i < ipow(cfg.alphabet, cfg.zeta.report_depth); ++i)
        cells.emplace_back(Cylinder(word_from_index(i, cfg.zeta.report_depth, cfg.alphabet)));
    return cells;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string problem_kind_name(ProblemKind k) {
    switch (k) {
        case ProblemKind::p1: return "p1";
        case ProblemKind::p2: return "p2";
        case ProblemKind::eo: return "eo";
        case ProblemKind::zeta_p1: return "zeta-p1";
        case ProblemKind::zeta_p2: return "zeta-p2";
        case ProblemKind::certify: return "certify";
    }
    return "?";
}

Config parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line/column for the diagnostic
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("config parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");

    Config cfg;
    cfg.raw = j;

    std::string problem = j.value("problem", std::string("p1"));
    if (problem == "p1") cfg.problem = ProblemKind::p1;
    else if (problem == "p2") cfg.problem = ProblemKind::p2;
    else if (problem == "eo") cfg.problem = ProblemKind::eo;
    else if (problem == "zeta-p1") cfg.problem = ProblemKind::zeta_p1;
    else if (problem == "zeta-p2") cfg.problem = ProblemKind::zeta_p2;
    else if (problem == "certify") cfg.problem = ProblemKind::certify;
    else fail("problem", "unknown problem '" + problem + "'");

    cfg.alphabet = j.contains("alphabet") ? get_int(j["alphabet"], "alphabet") : 2;
    if (cfg.alphabet < 2 || cfg.alphabet > 10) fail("alphabet", "expected 2 <= d <= 10");
    cfg.lambda = j.contains("lambda") ? get_number(j["lambda"], "lambda") : 0.5;
    if (!(cfg.lambda > 0 && cfg.lambda < 1)) fail("lambda", "expected 0 < lambda < 1");

    if (j.contains("depths")) {
        if (!j["depths"].is_array() || j["depths"].size() != 2) fail("depths", "expected [kx, ky]");
        cfg.depth_x = get_int(j["depths"][0], "depths[0]");
        cfg.depth_y = get_int(j["depths"][1], "depths[1]");
    } else if (j.contains("depth")) {
        cfg.depth_x = cfg.depth_y = get_int(j["depth"], "depth");
    }
    cfg.tolerance = j.contains("tolerance") ? get_number(j["tolerance"], "tolerance") : 1e-9;
    if (j.contains("caps") && j["caps"].contains("fix_words"))
        cfg.word_cap = j["caps"]["fix_words"].get<std::uint64_t>();
    cfg.workers = j.contains("workers") ? get_int(j["workers"], "workers") : 0;
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.probe = j.value("probe", false);
    if (j.contains("perturb")) cfg.perturb_r = get_number(j["perturb"].at("r"), "perturb.r");
    cfg.out_path = j.value("out", std::string{});
    if (j.contains("csv")) {
        cfg.plan_csv = j["csv"].value("plan", std::string{});
        cfg.zeta_csv = j["csv"].value("zeta", std::string{});
    }

    if (j.contains("mu")) {
        if (j["mu"].is_array())
            cfg.mu_finite = parse_finite_measure(j["mu"], "mu", cfg.alphabet);
        else
            cfg.mu_cylinder = parse_cylinder_measure(j["mu"], "mu", cfg.alphabet);
    }
    if (j.contains("cost"))
        cfg.cost = parse_cost(j["cost"], "cost", cfg.alphabet, cfg.lambda);

    if (j.contains("zeta")) {
        const json& z = j["zeta"];
        if (z.contains("betas")) cfg.zeta.betas = z["betas"].get<std::vector<double>>();
        if (z.contains("ns")) cfg.zeta.ns = z["ns"].get<std::vector<int>>();
        if (z.contains("period_mode")) {
            std::string mode = z["period_mode"].get<std::string>();
            if (mode == "dividing") cfg.zeta.period_mode = PeriodMode::dividing;
            else if (mode == "exact") cfg.zeta.period_mode = PeriodMode::exact;
            else fail("zeta.period_mode", "expected 'dividing' or 'exact'");
        }
        if (z.contains("report_depth"))
            cfg.zeta.report_depth = get_int(z["report_depth"], "zeta.report_depth");
        if (z.contains("flip")) {
            std::string flip = z["flip"].get<std::string>();
            if (flip == "auto") cfg.zeta.auto_flip = true;
            else if (flip == "none") cfg.zeta.auto_flip = false;
            else fail("zeta.flip", "expected 'auto' or 'none'");
        }
        if (z.contains("margin")) cfg.zeta.margin = get_number(z["margin"], "zeta.margin");
    }
    if (j.contains("eo") && j["eo"].contains("n_max"))
        cfg.eo_n_max = get_int(j["eo"]["n_max"], "eo.n_max");
    if (j.contains("certify") && j["certify"].contains("report"))
        cfg.certify_report = j["certify"]["report"].get<std::string>();

    // Problem-specific semantic checks.
    switch (cfg.problem) {
        case ProblemKind::p1:
            if (!cfg.cost) fail("cost", "required for p1");
            if (!cfg.mu_finite && !cfg.mu_cylinder) fail("mu", "required for p1");
            break;
        case ProblemKind::p2:
            if (!cfg.cost) fail("cost", "required for p2");
            break;
        case ProblemKind::eo:
            if (!cfg.cost) fail("cost", "required for eo");
            if (!cost_is_y_only(*cfg.cost)) fail("cost", "eo requires a y-only cost");
            break;
        case ProblemKind::zeta_p1:
            if (!cfg.cost) fail("cost", "required for zeta-p1");
            if (!cfg.mu_finite) fail("mu", "zeta-p1 requires a finite-support mu");
            break;
        case ProblemKind::zeta_p2:
            if (!cfg.cost) fail("cost", "required for zeta-p2");
            break;
        case ProblemKind::certify:
            if (cfg.certify_report.empty()) fail("certify.report", "required for certify");
            break;
    }

    // Without the automatic flip, a zeta cost must already be positive on the
    // report grid; name the first offending pair otherwise.
    if ((cfg.problem == ProblemKind::zeta_p1 || cfg.problem == ProblemKind::zeta_p2) &&
        !cfg.zeta.auto_flip) {
        std::uint64_t ny = ipow(cfg.alphabet, cfg.zeta.report_depth);
        for (const Cell& u : zeta_x_cells(cfg)) {
            for (std::uint64_t v = 0; v < ny; ++v) {
                Cylinder vc(word_from_index(v, cfg.zeta.report_depth, cfg.alphabet));
                if (cost_bracket(*cfg.cost, u, vc).lo <= 0)
                    fail("cost", "zeta requires a strictly positive cost; first failing pair (" +
                                     cell_str(u) + ", " + vc.word.str() + ")");
            }
        }
    }
    return cfg;
}

json plan_to_json(const TransportPlan& plan) {
    json atoms = json::array();
    for (const auto& atom : plan.atoms)
        atoms.push_back({{"x", cell_str(atom.x)}, {"y", cell_str(atom.y)}, {"mass", atom.mass}});
    return {{"value", plan.value}, {"atoms", atoms}};
}

namespace {

Cell parse_plan_cell(const std::string& text, int d) {
    if (text.find('|') != std::string::npos) return Point::parse(text, d);
    if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos)
        return Cylinder(Word::parse(text, d));
    return Label{text};
}

}  // namespace

TransportPlan plan_from_json(const json& j, int alphabet) {
    TransportPlan plan;
    plan.value = j.at("value").get<double>();
    for (const json& a : j.at("atoms"))
        plan.atoms.push_back({parse_plan_cell(a.at("x").get<std::string>(), alphabet),
                              parse_plan_cell(a.at("y").get<std::string>(), alphabet),
                              a.at("mass").get<double>()});
    return plan;
}

json dual_to_json(const DualPair& dp) {
    json phi = json::object();
    for (std::size_t i = 0; i < dp.phi_keys.size(); ++i)
        phi[cell_str(dp.phi_keys[i])] = dp.phi[i];
    json psi = json::object();
    int d = 2;
    if (!dp.phi_keys.empty()) {
        if (const auto* cyl = std::get_if<Cylinder>(&dp.phi_keys.front()))
            d = cyl->word.alphabet;
        else if (const auto* pt = std::get_if<Point>(&dp.phi_keys.front()))
            d = pt->alphabet();
    }
    if (dp.psi_depth >= 1) {
        std::uint64_t guessed = dp.psi.size();
        // recover d from the psi table size when the keys carry no alphabet
        for (int base = 2; base <= 10; ++base)
            if (ipow(base, dp.psi_depth) == guessed) {
                d = base;
                break;
            }
    }
    for (std::uint64_t w = 0; w < dp.psi.size(); ++w)
        psi[word_from_index(w, dp.psi_depth, d).str()] = dp.psi[w];
    return {{"phi", phi},
            {"psi", psi},
            {"psi_depth", dp.psi_depth},
            {"alpha", dp.alpha},
            {"p2_form", dp.p2_form}};
}

DualPair dual_from_json(const json& j, int alphabet) {
    DualPair dp;
    dp.psi_depth = j.at("psi_depth").get<int>();
    dp.alpha = j.at("alpha").get<double>();
    dp.p2_form = j.at("p2_form").get<bool>();
    for (const auto& [key, value] : j.at("phi").items()) {
        dp.phi_keys.push_back(parse_plan_cell(key, alphabet));
        dp.phi.push_back(value.get<double>());
    }
    dp.psi.assign(ipow(alphabet, dp.psi_depth), 0.0);
    for (const auto& [key, value] : j.at("psi").items())
        dp.psi[Word::parse(key, alphabet).index()] = value.get<double>();
    return dp;
}

namespace {

json certificate_to_json(const Certificate& cert) {
    return {{"status", cert.status == CertStatus::certified ? "certified" : "gap-reported"},
            {"duality_gap", cert.duality_gap},
            {"max_admissibility_violation", cert.max_admissibility_violation},
            {"max_support_slack", cert.max_support_slack}};
}

json lp_diagnostics(const LpSolution& s) {
    return {{"iterations", s.iterations},
            {"primal_residual", s.primal_residual},
            {"dual_residual", s.dual_residual},
            {"complementary_slackness", s.complementary_slackness},
            {"duality_gap", s.duality_gap}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

void dump_plan_csv(const std::string& path, const TransportPlan& plan) {
    std::ostringstream os;
    os << "x,y,mass\n";
    for (const auto& atom : plan.atoms)
        os << cell_str(atom.x) << "," << cell_str(atom.y) << "," << format_double(atom.mass)
           << "\n";
    write_text(path, os.str());
}

void dump_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "beta,n,value,res_x,res_y,gap\n";
    for (const SweepRow& r : rows)
        os << format_double(r.beta) << "," << r.n << "," << format_double(r.value) << ","
           << format_double(r.res_x) << "," << format_double(r.res_y) << ","
           << format_double(r.gap) << "\n";
    write_text(path, os.str());
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

json uniqueness_to_json(const UniquenessReport& rep) {
    return {{"unique", rep.unique},
            {"zero_reduced_cost_columns", rep.zero_reduced_cost_columns},
            {"alternative_mass", rep.alternative_mass}};
}

}  // namespace

RunResult run(const Config& cfg) {
    RunResult result;
    json& report = result.report;
    report["config"] = cfg.raw;
    report["problem"] = problem_kind_name(cfg.problem);
    Timer total;
    json timings = json::object();

    int workers = cfg.workers > 0 ? cfg.workers
                                  : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;

    switch (cfg.problem) {
        case ProblemKind::p1:
        case ProblemKind::p2: {
            SolveResult sr;
            Timer solve_timer;
            bool is_p1 = cfg.problem == ProblemKind::p1;
            P1Instance p1;
            P2Instance p2;
            if (is_p1) {
                if (cfg.mu_finite)
                    p1 = P1Instance{*cfg.mu_finite, *cfg.cost, cfg.depth_y};
                else
                    p1 = P1Instance{*cfg.mu_cylinder, *cfg.cost, cfg.depth_y};
                sr = solve_p1(p1);
            } else {
                p2 = P2Instance{*cfg.cost, cfg.depth_x, cfg.depth_y};
                sr = solve_p2(p2);
            }
            timings["solve_ms"] = solve_timer.ms();
            report["value_bracket"] = {{"lo", sr.bracket.lo}, {"hi", sr.bracket.hi}};
            report["plan"] = plan_to_json(sr.bracket.plan_lo);
            report["plan_hi"] = plan_to_json(sr.bracket.plan_hi);
            report["dual"] = dual_to_json(sr.dual);
            Certificate cert =
                certify_slackness(sr.bracket.plan_lo, sr.dual, *cfg.cost, cfg.tolerance);
            report["certificate"] = certificate_to_json(cert);
            report["diagnostics"] = {{"lo", lp_diagnostics(sr.lo_solution)},
                                     {"hi", lp_diagnostics(sr.hi_solution)}};
            if (cfg.probe || cfg.perturb_r) {
                Timer probe_timer;
                LpProblem lp = is_p1 ? assemble_p1(p1, Bound::lo) : assemble_p2(p2, Bound::lo);
                if (cfg.probe)
                    report["uniqueness"] =
                        uniqueness_to_json(optimal_face_probe(lp, sr.lo_solution));
                if (cfg.perturb_r) {
                    std::mt19937_64 rng(cfg.seed);
                    std::uniform_real_distribution<double> unif(0.0, 1.0);
                    for (Eigen::Index i = 0; i < lp.objective.size(); ++i)
                        lp.objective(i) += *cfg.perturb_r * unif(rng);
                    LpSolution psol = lp_solve(lp);
                    report["perturbed"] = {
                        {"r", *cfg.perturb_r},
                        {"value", psol.objective},
                        {"uniqueness", uniqueness_to_json(optimal_face_probe(lp, psol))}};
                }
                timings["probe_ms"] = probe_timer.ms();
            }
            if (cfg.refine_dual) {
                if (!is_p1 && cfg.depth_x != cfg.depth_y)
                    throw ConfigError("dual refinement requires equal depths");
                Timer refine_timer;
                RefineResult rr = lax_oleinik_refine(
                    *cfg.cost, sr.dual, is_p1 ? RefineMode::p1 : RefineMode::p2, cfg.depth_y);
                timings["refine_ms"] = refine_timer.ms();
                report["refined_dual"] = dual_to_json(rr.dual);
                report["refine"] = {{"converged", rr.converged},
                                    {"iterations", rr.iterations},
                                    {"residual", rr.residual}};
                if (!rr.converged) result.exit_code = 2;
            }
            if (!cfg.plan_csv.empty()) dump_plan_csv(cfg.plan_csv, sr.bracket.plan_lo);
            break;
        }
        case ProblemKind::eo: {
            EoResult eo = eo_min(*cfg.cost, cfg.eo_n_max,
                                 EnumOptions{PeriodMode::exact, cfg.word_cap, false});
            report["eo"] = {{"value", eo.value}, {"orbit", eo.orbit.primitive.str()}};
            break;
        }
        case ProblemKind::zeta_p1:
        case ProblemKind::zeta_p2: {
            bool is_p1 = cfg.problem == ProblemKind::zeta_p1;
            CostSpec max_cost = *cfg.cost;
            double flip_level = 0;
            if (cfg.zeta.auto_flip) {
                flip_level =
                    cost_grid_sup(*cfg.cost, zeta_x_cells(cfg), cfg.zeta.report_depth) +
                    cfg.zeta.margin;
                max_cost = affine_cost(-1.0, flip_level, *cfg.cost);
                report["zeta_flip"] = {{"level", flip_level}, {"margin", cfg.zeta.margin}};
            }
            ZetaProblem problem;
            if (is_p1) problem.mu = *cfg.mu_finite;
            problem.cost = max_cost;
            ZetaParams base;
            base.period_mode = cfg.zeta.period_mode;
            base.word_cap = cfg.word_cap;
            Timer sweep_timer;
            std::vector<SweepRow> rows =
                zeta_sweep(problem, cfg.zeta.betas, cfg.zeta.ns, cfg.zeta.report_depth, base,
                           workers);
            timings["sweep_ms"] = sweep_timer.ms();
            json table = json::array();
            for (const SweepRow& r : rows) {
                json row = {{"beta", r.beta}, {"n", r.n},       {"value", r.value},
                            {"res_x", r.res_x}, {"res_y", r.res_y}, {"gap", r.gap}};
                if (cfg.zeta.auto_flip) row["value_min_scale"] = flip_level - r.value;
                table.push_back(row);
            }
            report["zeta"] = {{"table", table}};
            // the finest grid point also reports its measure
            ZetaParams last = base;
            last.beta = cfg.zeta.betas.back();
            last.n = cfg.zeta.ns.back();
            ZetaResult zr = is_p1
                                ? zeta_p1(*cfg.mu_finite, max_cost, last, cfg.zeta.report_depth)
                                : zeta_p2(max_cost, last, cfg.zeta.report_depth, workers);
            report["zeta"]["measure"] = plan_to_json(zr.measure);
            report["zeta"]["value"] = zr.value;
            if (cfg.zeta.auto_flip) report["zeta"]["value_min_scale"] = flip_level - zr.value;
            if (!cfg.zeta_csv.empty()) {
                dump_sweep_csv(cfg.zeta_csv, rows);
                report["zeta"]["csv"] = cfg.zeta_csv;
            }
            if (!cfg.plan_csv.empty()) dump_plan_csv(cfg.plan_csv, zr.measure);
            break;
        }
        case ProblemKind::certify: {
            std::ifstream in(cfg.certify_report);
            if (!in) throw ConfigError("certify: cannot read '" + cfg.certify_report + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            json stored = json::parse(buf.str());
            Config stored_cfg = parse_config(stored.at("config").dump());
            if (!stored_cfg.cost) throw ConfigError("certify: stored report has no cost");
            TransportPlan plan = plan_from_json(stored.at("plan"), stored_cfg.alphabet);
            DualPair dual = dual_from_json(stored.at("dual"), stored_cfg.alphabet);
            Certificate cert = certify_slackness(plan, dual, *stored_cfg.cost, cfg.tolerance);
            report["certificate"] = certificate_to_json(cert);
            break;
        }
    }

    timings["total_ms"] = total.ms();
    report["timings_ms"] = timings;

    std::string text = report.dump(2) + "\n";
    if (!cfg.out_path.empty()) write_text(cfg.out_path, text);
    return result;
}

}  // namespace et
