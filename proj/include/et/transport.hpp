#pragma once

// The two ergodic transport problems at cylinder resolution:
//
//   P1: fixed x-marginal mu, y-marginal constrained to the stationary
//       polytope at depth k;
//   P2: both marginals constrained to be stationary, total mass 1.
//
// Each solve produces a rigorous [lo, hi] enclosure of the continuum optimum
// (objectives from the cost bracket endpoints), the LP dual pair, slackness
// certification, a min-plus refinement of dual pairs on the de Bruijn graph,
// and the ergodic-optimization reduction for Dirac marginals.

#include <variant>

#include "et/cost_model.hpp"
#include "et/lp.hpp"

namespace et {

struct P1Instance {
    std::variant<FiniteMeasure, CylinderMeasure> mu;
    CostSpec cost;
    int depth = 6;  // y-cylinder depth k >= 2

    void validate() const;
};

struct P2Instance {
    CostSpec cost;
    int depth_x = 6;
    int depth_y = 6;

    void validate() const;
};

enum class Bound { lo, hi };

// (phi, psi, alpha) with the LP-native orientation
//   P1:  phi(u) + psi(suffix v) - psi(prefix v)                   <= c(u,v)
//   P2:  alpha + phi(suf u) - phi(pre u) + psi(suf v) - psi(pre v) <= c(u,v)
// (the classical inequality with psi replaced by -psi).
struct DualPair {
    std::vector<Cell> phi_keys;  // P1: x-cells; P2: depth-(kx-1) cylinders
    std::vector<double> phi;
    int psi_depth = 1;           // ky - 1
    std::vector<double> psi;     // indexed by Word::index() at psi_depth
    double alpha = 0;
    bool p2_form = false;
};

struct ValueBracket {
    double lo = 0;
    double hi = 0;
    TransportPlan plan_lo, plan_hi;
};

enum class CertStatus { certified, gap_reported };

struct Certificate {
    CertStatus status = CertStatus::gap_reported;
    double duality_gap = 0;
    double max_admissibility_violation = 0;
    double max_support_slack = 0;
};

struct SolveOptions {
    LpOptions lp{};
    // Instances with more columns than this are solved by exact delayed
    // column generation: the dense tableau runs on a restricted column set
    // and a sparse pricing pass over the full grid certifies optimality.
    Eigen::Index column_generation_threshold = 8192;
};

struct SolveResult {
    ValueBracket bracket;
    DualPair dual;       // multipliers of the lo-LP
    LpSolution lo_solution, hi_solution;
};

LpProblem assemble_p1(const P1Instance& inst, Bound bound);
LpProblem assemble_p2(const P2Instance& inst, Bound bound);

SolveResult solve_p1(const P1Instance& inst, const SolveOptions& opts = {});
SolveResult solve_p2(const P2Instance& inst, const SolveOptions& opts = {});

// x-cells of the P1 LP in row order (atom order for finite mu, cylinder
// index order otherwise), with their masses.
std::vector<std::pair<Cell, double>> p1_x_cells(const P1Instance& inst);

// Max over all columns of the admissibility defect
//   phi-term + psi-term + alpha - cost_lo(u, v);
// nonpositive (up to tol) iff the pair is admissible.
double admissibility_violation(const DualPair& dp, const CostSpec& cost);

// Dual objective of an admissible pair: integral of phi against the plan's
// x-marginal for P1, alpha for P2.
double dual_objective(const DualPair& dp, const TransportPlan& plan);

enum class RefineMode { p1, p2 };

struct RefineOptions {
    long max_iters = 0;             // 0 = 10 * d^k
    double residual_target = 1e-10;
};

struct RefineResult {
    DualPair dual;
    bool converged = false;
    long iterations = 0;   // inner Bellman sweeps + outer rounds
    double residual = 0;   // last outer change (alpha change included for P2)
};

// Alternating min-plus iteration on the de Bruijn graph: psi is the capped
// backward-orbit infimum for the current phi, then phi is raised to the
// largest value admissible against the new psi.  Seeded from a dual pair;
// with an admissible seed the refined phi dominates the seed pointwise.
RefineResult lax_oleinik_refine(const CostSpec& cost, const DualPair& seed, RefineMode mode,
                                int depth, const RefineOptions& opts = {});

// Certified iff admissibility, equality on the support, and the
// dual-vs-plan value gap all hold within tol.
Certificate certify_slackness(const TransportPlan& plan, const DualPair& dp,
                              const CostSpec& cost, double tol = 1e-9);

struct EoResult {
    double value = 0;
    PeriodicOrbit orbit;
};

// Minimum orbit average of a y-only potential over all periodic orbits of
// period <= n_max; independent oracle for Dirac-marginal P1 solves.
EoResult eo_min(const CostSpec& y_only_cost, int n_max, const EnumOptions& opts = {});

// min over samples and 1 <= n <= horizon of  sum_{i<n} c(s^i x, s^i y) - n alpha.
double birkhoff_deficiency_scan(const CostSpec& cost, double alpha, int horizon,
                                const std::vector<std::pair<Point, Point>>& samples);

}  // namespace et
