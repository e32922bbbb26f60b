#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>

#include "et/transport.hpp"

using namespace et;

namespace {

Word w(const std::string& digits, int d = 2) { return Word::parse(digits, d); }
Point pt(const std::string& text, int d = 2) { return Point::parse(text, d); }

CostSpec anchor_cost() {
    CostSpec c;
    c.variant = SqDistToPoints{{{"x0", pt("|01")}, {"x1", pt("|10")}}};
    return c;
}

CostSpec single_anchor_cost(const std::string& anchor = "|01") {
    CostSpec c;
    c.variant = SqDistToPoints{{{"x0", pt(anchor)}}};
    return c;
}

CostSpec contact_cost() {
    CostSpec c;
    c.variant = MinSumSq{{{pt("|01"), pt("|001")},
                          {pt("|10"), pt("|010")},
                          {pt("|01"), pt("|100")},
                          {pt("|10"), pt("|100")}}};
    return c;
}

CostSpec constant_cost(double value, int ky = 2) {
    CostSpec c;
    c.variant = TableCost{0, ky, std::vector<double>(ipow(2, ky), value)};
    return c;
}

FiniteMeasure two_labels(double m0, double m1) {
    return FiniteMeasure{{{Label{"x0"}, m0}, {Label{"x1"}, m1}}};
}

double plan_mass(const TransportPlan& plan, const std::string& x, const std::string& y) {
    for (const auto& atom : plan.atoms)
        if (cell_str(atom.x) == x && cell_str(atom.y) == y) return atom.mass;
    return 0.0;
}

// Duality invariants every solve must satisfy.
void check_duality(const SolveResult& sr, const CostSpec& cost, double tol = 1e-9) {
    CHECK(sr.lo_solution.primal_residual <= tol);
    CHECK(sr.lo_solution.dual_residual <= tol);
    CHECK(sr.lo_solution.complementary_slackness <= tol);
    CHECK(sr.lo_solution.duality_gap <= tol);
    CHECK(sr.hi_solution.duality_gap <= tol);
    CHECK(admissibility_violation(sr.dual, cost) <= tol);
    CHECK(std::abs(dual_objective(sr.dual, sr.bracket.plan_lo) - sr.bracket.lo) <= tol);
    Certificate cert = certify_slackness(sr.bracket.plan_lo, sr.dual, cost, tol);
    CHECK(cert.status == CertStatus::certified);
}

CylinderMeasure y_marginal(const TransportPlan& plan, int depth, int d = 2) {
    CylinderMeasure m{depth, d, std::vector<double>(ipow(d, depth), 0.0)};
    for (const auto& atom : plan.atoms)
        m.mass[std::get<Cylinder>(atom.y).word.index()] += atom.mass;
    return m;
}

}  // namespace

TEST_CASE("assemble_p1 shape: two labels at depth 2") {
    P1Instance inst{two_labels(0.5, 0.5), anchor_cost(), 2};
    LpProblem lp = assemble_p1(inst, Bound::lo);
    CHECK(lp.cols() == 8);
    CHECK(lp.rows() == 4);  // 2 marginal rows + 2 flow-balance rows
    // stationarity rows sum to zero across each x block
    for (Eigen::Index r = 2; r < 4; ++r) CHECK(lp.matrix.row(r).sum() == 0.0);
}

TEST_CASE("a Dirac x-marginal forces the other row to zero") {
    P1Instance inst{two_labels(1.0, 0.0), anchor_cost(), 3};
    SolveResult sr = solve_p1(inst);
    for (const auto& atom : sr.bracket.plan_lo.atoms)
        CHECK(cell_str(atom.x) == "x0");
}

TEST_CASE("two-anchor example: zero value and the matched contact plan") {
    P1Instance inst{two_labels(0.5, 0.5), anchor_cost(), 4};
    SolveResult sr = solve_p1(inst);
    CHECK(std::abs(sr.bracket.lo) <= 1e-9);
    CHECK(sr.bracket.hi <= std::pow(2.0, -8) + 1e-9);
    CHECK(sr.bracket.hi >= -1e-9);
    CHECK(plan_mass(sr.bracket.plan_lo, "x0", "0101") == doctest::Approx(0.5));
    CHECK(plan_mass(sr.bracket.plan_lo, "x1", "1010") == doctest::Approx(0.5));
    CHECK(sr.bracket.plan_lo.atoms.size() == 2);
    check_duality(sr, inst.cost);

    // y-marginal of the plan is stationary
    CHECK(stationarity_residual(y_marginal(sr.bracket.plan_lo, 4)) <= 1e-9);
}

TEST_CASE("Dirac reduction: value 1/4 at every depth, optimal measure at 0^inf") {
    CostSpec cost = single_anchor_cost();
    for (int k = 2; k <= 6; ++k) {
        P1Instance inst{FiniteMeasure{{{Label{"x0"}, 1.0}}}, cost, k};
        SolveResult sr = solve_p1(inst);
        CHECK(sr.bracket.lo == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(sr.bracket.hi == doctest::Approx(0.25).epsilon(1e-12));
        CylinderMeasure nu = y_marginal(sr.bracket.plan_lo, k);
        CHECK(nu.mass[0] == doctest::Approx(1.0));  // all mass on [00...0]
        check_duality(sr, cost);
    }
}

TEST_CASE("constant cost: value equals the constant, any feasible plan") {
    P1Instance inst{two_labels(0.5, 0.5), constant_cost(1.0), 3};
    SolveResult sr = solve_p1(inst);
    CHECK(sr.bracket.lo == doctest::Approx(1.0));
    CHECK(sr.bracket.hi == doctest::Approx(1.0));
    check_duality(sr, inst.cost);
}

TEST_CASE("cylinder-measure marginal: quadratic pair cost vanishes on refinements") {
    CylinderMeasure mu{2, 2, {0.25, 0.25, 0.25, 0.25}};
    CostSpec pair;
    pair.variant = PairSqDist{};
    P1Instance inst{mu, pair, 3};
    SolveResult sr = solve_p1(inst);
    CHECK(std::abs(sr.bracket.lo) <= 1e-9);
    CHECK(sr.bracket.hi <= 1.0 / 16 + 1e-9);
    check_duality(sr, pair);
}

TEST_CASE("p2 contact example at depth 4: weights 1/3,1/3,1/6,1/6") {
    P2Instance inst{contact_cost(), 4, 4};
    SolveResult sr = solve_p2(inst);
    CHECK(std::abs(sr.bracket.lo) <= 1e-9);
    CHECK(plan_mass(sr.bracket.plan_lo, "0101", "0010") == doctest::Approx(1.0 / 3).epsilon(1e-6));
    CHECK(plan_mass(sr.bracket.plan_lo, "1010", "0100") == doctest::Approx(1.0 / 3).epsilon(1e-6));
    CHECK(plan_mass(sr.bracket.plan_lo, "0101", "1001") == doctest::Approx(1.0 / 6).epsilon(1e-6));
    CHECK(plan_mass(sr.bracket.plan_lo, "1010", "1001") == doctest::Approx(1.0 / 6).epsilon(1e-6));
    CHECK(sr.bracket.plan_lo.atoms.size() == 4);
    check_duality(sr, inst.cost);

    LpProblem lo_lp = assemble_p2(inst, Bound::lo);
    UniquenessReport rep = optimal_face_probe(lo_lp, sr.lo_solution);
    CHECK(rep.unique);
}

TEST_CASE("p2 with the quadratic pair cost brackets zero diagonally") {
    CostSpec pair;
    pair.variant = PairSqDist{};
    for (int k = 2; k <= 4; ++k) {
        P2Instance inst{pair, k, k};
        SolveResult sr = solve_p2(inst);
        CHECK(std::abs(sr.bracket.lo) <= 1e-9);
        CHECK(sr.bracket.hi == doctest::Approx(std::pow(2.0, -2 * k)).epsilon(1e-9));
        // the lo plan only uses diagonal-compatible cell pairs
        for (const auto& atom : sr.bracket.plan_lo.atoms) {
            const Word& uw = std::get<Cylinder>(atom.x).word;
            const Word& vw = std::get<Cylinder>(atom.y).word;
            CHECK(uw == vw);
        }
        check_duality(sr, pair);
    }
}

TEST_CASE("p2 constant cost pins alpha") {
    P2Instance inst{constant_cost(5.0), 2, 2};
    SolveResult sr = solve_p2(inst);
    CHECK(sr.bracket.lo == doctest::Approx(5.0));
    CHECK(sr.bracket.hi == doctest::Approx(5.0));
    CHECK(sr.dual.alpha == doctest::Approx(5.0));
    check_duality(sr, inst.cost);
}

TEST_CASE("bracket monotonicity over a small depth range") {
    P1Instance base{two_labels(0.5, 0.5), anchor_cost(), 3};
    double last_lo = -1e300, last_hi = 1e300;
    for (int k = 3; k <= 6; ++k) {
        P1Instance inst = base;
        inst.depth = k;
        SolveResult sr = solve_p1(inst);
        CHECK(sr.bracket.lo >= last_lo - 1e-9);
        CHECK(sr.bracket.hi <= last_hi + 1e-9);
        CHECK(sr.bracket.hi - sr.bracket.lo <=
              2.0 * lipschitz_bound(base.cost) * std::pow(0.5, k - 1) + 1e-9);
        last_lo = sr.bracket.lo;
        last_hi = sr.bracket.hi;
    }
}

TEST_CASE("lax-oleinik: constant cost fixes phi at the constant") {
    CostSpec c = constant_cost(3.0, 2);
    DualPair seed;
    seed.phi_keys = {Label{"x0"}};
    seed.phi = {0.0};
    seed.psi_depth = 1;
    seed.psi = {0.0, 0.0};
    RefineResult rr = lax_oleinik_refine(c, seed, RefineMode::p1, 2);
    CHECK(rr.converged);
    CHECK(rr.residual <= 1e-10);
    for (double v : rr.dual.phi) CHECK(v == doctest::Approx(3.0));
    for (double v : rr.dual.psi) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("lax-oleinik: the contact pair (0,0) certifies the two-anchor example") {
    P1Instance inst{two_labels(0.5, 0.5), anchor_cost(), 4};
    SolveResult sr = solve_p1(inst);
    RefineResult rr = lax_oleinik_refine(inst.cost, sr.dual, RefineMode::p1, 4);
    REQUIRE(rr.converged);
    // phi stays at the optimum value zero and the refined pair still certifies
    for (std::size_t i = 0; i < rr.dual.phi.size(); ++i)
        CHECK(rr.dual.phi[i] >= sr.dual.phi[i] - 1e-9);
    CHECK(std::abs(dual_objective(rr.dual, sr.bracket.plan_lo)) <= 1e-9);
    Certificate cert = certify_slackness(sr.bracket.plan_lo, rr.dual, inst.cost, 1e-9);
    CHECK(cert.status == CertStatus::certified);
}

TEST_CASE("lax-oleinik: Dirac refinement reaches the minimal cycle mean") {
    CostSpec cost = single_anchor_cost();
    const int k = 4;
    P1Instance inst{FiniteMeasure{{{Label{"x0"}, 1.0}}}, cost, k};
    SolveResult sr = solve_p1(inst);
    RefineResult rr = lax_oleinik_refine(cost, sr.dual, RefineMode::p1, k);
    REQUIRE(rr.converged);
    CHECK(rr.dual.phi[0] == doctest::Approx(0.25).epsilon(1e-10));

    // independent oracle: the best phi equals the minimal average of the
    // cell costs over the cycles of the depth-k de Bruijn graph, i.e. over
    // periodic orbits of period <= number of nodes.
    double mcm = std::numeric_limits<double>::infinity();
    for (int p = 1; p <= 8; ++p) {
        EnumOptions opts;
        opts.mode = PeriodMode::exact;
        for (const PeriodicOrbit& o : enumerate_fix(p, 2, opts)) {
            double sum = 0;
            for (const Point& y : o.points())
                sum += cost_bracket(cost, Label{"x0"}, Cylinder(y.first(k))).lo;
            mcm = std::min(mcm, sum / p);
        }
    }
    CHECK(rr.dual.phi[0] == doctest::Approx(mcm).epsilon(1e-10));

    // and the refined pair is admissible with the discrete Lipschitz bound
    CHECK(admissibility_violation(rr.dual, cost) <= 1e-9);
}

TEST_CASE("lax-oleinik: admissibility and discrete Lipschitz bound on random tables") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int k = 4;
    const std::uint64_t nodes = ipow(2, k - 1);
    for (int trial = 0; trial < 12; ++trial) {
        CostSpec c;
        std::vector<double> values(ipow(2, k));
        for (double& v : values) v = unif(rng);
        c.variant = TableCost{0, k, values};
        double L = lipschitz_bound(c);

        P1Instance inst{FiniteMeasure{{{Label{"x0"}, 1.0}}}, c, k};
        SolveResult sr = solve_p1(inst);
        RefineResult rr = lax_oleinik_refine(c, sr.dual, RefineMode::p1, k);
        REQUIRE(rr.converged);
        CHECK(rr.residual <= 1e-10);
        CHECK(admissibility_violation(rr.dual, c) <= 1e-9);
        CHECK(rr.dual.phi[0] >= sr.dual.phi[0] - 1e-9);
        for (std::uint64_t a = 0; a < nodes; ++a) {
            for (std::uint64_t b = 0; b < nodes; ++b) {
                Word wa = word_from_index(a, k - 1, 2), wb = word_from_index(b, k - 1, 2);
                int common = 0;
                while (common < k - 1 && wa[common] == wb[common]) ++common;
                CHECK(std::abs(rr.dual.psi[a] - rr.dual.psi[b]) <=
                      L * std::pow(0.5, common) + 1e-9);
            }
        }
    }
}

TEST_CASE("lax-oleinik p2: refinement keeps the optimal alpha") {
    P2Instance inst{contact_cost(), 3, 3};
    SolveResult sr = solve_p2(inst);
    RefineResult rr = lax_oleinik_refine(inst.cost, sr.dual, RefineMode::p2, 3);
    REQUIRE(rr.converged);
    CHECK(rr.dual.alpha == doctest::Approx(sr.bracket.lo).epsilon(1e-9));
    CHECK(admissibility_violation(rr.dual, inst.cost) <= 1e-9);
}

TEST_CASE("certify_slackness rejects corrupted duals and suboptimal plans") {
    P1Instance inst{two_labels(0.5, 0.5), anchor_cost(), 4};
    SolveResult sr = solve_p1(inst);

    DualPair broken = sr.dual;
    broken.psi[3] += 1.0;
    Certificate bad_dual = certify_slackness(sr.bracket.plan_lo, broken, inst.cost, 1e-9);
    CHECK(bad_dual.status == CertStatus::gap_reported);
    CHECK(bad_dual.max_admissibility_violation > 1e-9);

    TransportPlan swapped;
    swapped.atoms = {{Label{"x0"}, Cylinder(w("1010")), 0.5},
                     {Label{"x1"}, Cylinder(w("0101")), 0.5}};
    swapped.value = 1.0;
    Certificate bad_plan = certify_slackness(swapped, sr.dual, inst.cost, 1e-9);
    CHECK(bad_plan.status == CertStatus::gap_reported);
    CHECK(bad_plan.max_support_slack > 1e-9);
}

TEST_CASE("eo_min examples") {
    EoResult best = eo_min(single_anchor_cost(), 6);
    CHECK(best.value == doctest::Approx(0.25));
    CHECK(best.orbit.primitive == w("0"));

    EoResult flat = eo_min(constant_cost(3.0), 4);
    CHECK(flat.value == doctest::Approx(3.0));

    EoResult zero = eo_min(single_anchor_cost("|0"), 5);
    CHECK(zero.value == doctest::Approx(0.0));
    CHECK(zero.orbit.primitive == w("0"));

    CHECK_THROWS_AS(eo_min(anchor_cost(), 4), ConfigError);  // not y-only
}

TEST_CASE("birkhoff deficiency scans") {
    std::vector<std::pair<Point, Point>> samples = {
        {pt("|01"), pt("|001")}, {pt("|10"), pt("|100")}, {pt("|0"), pt("|1")}};

    CostSpec pair;
    pair.variant = PairSqDist{};
    CHECK(birkhoff_deficiency_scan(constant_cost(3.0), 3.0, 10, samples) ==
          doctest::Approx(0.0));
    CHECK(birkhoff_deficiency_scan(contact_cost(), 0.0, 10, samples) >= 0.0);
    // alpha above the optimum diverges linearly: the n-step sum is -n
    CHECK(birkhoff_deficiency_scan(constant_cost(1.0), 2.0, 10, samples) ==
          doctest::Approx(-10.0));
}
