#pragma once

// Dense-tableau linear programming in equality form
//     minimize c.x  subject to  A x = b,  x >= 0,
// plus the classical finite-support optimal transport solve and an
// optimal-face uniqueness probe.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "et/measures.hpp"

namespace et {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LpProblem {
    Eigen::VectorXd objective;  // minimize
    RowMatrixXd matrix;         // equality rows
    Eigen::VectorXd rhs;

    Eigen::Index rows() const { return matrix.rows(); }
    Eigen::Index cols() const { return matrix.cols(); }
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

enum class Pricing {
    bland,          // always smallest eligible index
    dantzig_bland,  // most negative reduced cost, Bland after a stall
};

struct LpOptions {
    double tol = 1e-9;       // target residuals
    double hard_tol = 1e-6;  // residuals past this raise NumericalError
    Pricing pricing = Pricing::bland;
    long max_iters = 0;      // 0 = automatic cap
    // Optional starting basis (one column id per row, >= cols() marks that
    // row's artificial).  Used when it is square, nonsingular and primal
    // feasible for this problem; otherwise the cold start runs.
    const std::vector<int>* warm_basis = nullptr;
};

struct LpSolution {
    LpStatus status = LpStatus::optimal;
    Eigen::VectorXd primal;
    Eigen::VectorXd dual;  // one free multiplier per equality row
    double objective = 0;

    // residuals recomputed from the original data after basis refinement
    double primal_residual = 0;
    double dual_residual = 0;            // max(0, -min reduced cost)
    double complementary_slackness = 0;  // max |x_j * rc_j|
    double duality_gap = 0;              // |c.x - b.y|
    long iterations = 0;
    std::vector<int> basis;  // column per row; >= cols() marks an artificial
};

LpSolution lp_solve(const LpProblem& p, const LpOptions& opts = {});

struct UniquenessReport {
    bool unique = true;
    std::optional<Eigen::VectorXd> witness;  // an alternative optimal vertex
    int zero_reduced_cost_columns = 0;
    double alternative_mass = 0;  // optimum of the face probe objective
};

// Probes the optimal face: pins the objective to its optimal value as an
// extra equality row and maximizes the total mass of the zero-reduced-cost
// nonbasic coordinates; the face is a single vertex iff that maximum is 0.
UniquenessReport optimal_face_probe(const LpProblem& p, const LpSolution& s,
                                    const LpOptions& opts = {});

struct PlanAtom {
    Cell x, y;
    double mass = 0;
};

struct TransportPlan {
    std::vector<PlanAtom> atoms;
    double value = 0;
};

enum class Sense { minimize, maximize };

// Monge-Kantorovich LP between finite measures: rows are the per-atom
// marginal equations; returns a vertex plan.  `value` is reported against
// the given cost matrix in the original sense.
TransportPlan classical_ot(const FiniteMeasure& mu, const FiniteMeasure& nu,
                           const Eigen::MatrixXd& cost, Sense sense = Sense::minimize,
                           const LpOptions& opts = {});

}  // namespace et
