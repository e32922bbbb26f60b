#pragma once

// Gibbs-weighted convex combinations of classical OT plans between
// periodic-orbit measures; approximates maximizing plans as beta, n grow.

#include <optional>

#include "et/transport.hpp"

namespace et {

struct ZetaParams {
    double beta = 0;
    int n = 1;
    PeriodMode period_mode = PeriodMode::dividing;
    std::uint64_t word_cap = std::uint64_t{1} << 22;
};

struct OrbitRow {
    std::optional<PeriodicOrbit> x_orbit;  // set for the two-sided problem
    PeriodicOrbit y_orbit;
    double plan_value = 0;   // integral of c against the maximizing plan
    double log_weight = 0;   // normalized: logsumexp of all rows is 0
};

struct ZetaResult {
    TransportPlan measure;  // projected to the report depth
    double value = 0;       // integral of c against the zeta measure
    std::vector<OrbitRow> table;
    double x_marginal_error = 0;         // P1: max deviation from mu
    double x_stationarity_residual = 0;  // P2 only
    double y_stationarity_residual = 0;
};

// One-sided zeta measure: weights exp(beta n integral(c) d pi(mu, nu)) over
// nu in Fix_n; requires cost_bracket lo > 0 over the report grid.
ZetaResult zeta_p1(const FiniteMeasure& mu, const CostSpec& cost, const ZetaParams& params,
                   int report_depth);

// Two-sided zeta measure over ordered pairs from Fix_n x Fix_n; the pairwise
// OT solves are independent and run on `workers` threads, aggregation is a
// canonical-order sequential fold.
ZetaResult zeta_p2(const CostSpec& cost, const ZetaParams& params, int report_depth,
                   int workers = 1);

struct ZetaProblem {
    std::optional<FiniteMeasure> mu;  // present = one-sided
    CostSpec cost;                    // maximization cost
};

struct SweepRow {
    double beta = 0;
    int n = 1;
    double value = 0;
    double res_x = 0;
    double res_y = 0;
    double gap = 0;  // distance of value to the LP bracket of the max problem
};

std::vector<SweepRow> zeta_sweep(const ZetaProblem& problem, const std::vector<double>& betas,
                                 const std::vector<int>& ns, int report_depth,
                                 const ZetaParams& base = {}, int workers = 1);

}  // namespace et
