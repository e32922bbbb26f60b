#include "et/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <limits>

namespace et {

namespace {

constexpr double kEnterEps = 1e-9;    // reduced cost must beat this to enter
constexpr double kPivotEps = 1e-9;    // ratio-test denominator floor
constexpr double kStrongPivot = 1e-4; // preferred denominator magnitude
constexpr double kRatioTie = 1e-12;   // ratio tie window for Bland tie-breaks
constexpr double kFeasEps = 1e-7;     // phase-1 objective above this = infeasible
constexpr long kRefreshEvery = 512;   // pivots between tableau refactorizations

// Full tableau over [structural | artificial | rhs] columns with the
// objective row stored last as reduced costs; the value cell holds the
// negated objective so the row transforms like a constraint row.  The
// tableau is refactorized from the basis every kRefreshEvery pivots, which
// keeps drift from small pivot elements bounded and lets optimality be
// declared on exact data.
struct Tableau {
    RowMatrixXd T;
    std::vector<int> basis;      // per constraint row
    std::vector<char> is_basic;  // per column (structural + artificial)
    int m = 0;                   // constraint rows
    int n = 0;                   // structural columns
    long iterations = 0;
    const LpProblem* prob = nullptr;
    std::vector<char> flipped;   // rows negated to make the start basis feasible
    int phase = 1;

    int obj_row() const { return m; }
    int rhs_col() const { return n + m; }

    double signed_a(int i, int j) const {
        double v = prob->matrix(i, j);
        return flipped[static_cast<std::size_t>(i)] ? -v : v;
    }
    double signed_b(int i) const {
        double v = prob->rhs(i);
        return flipped[static_cast<std::size_t>(i)] ? -v : v;
    }

    // Rebuilds T = B^-1 [A | I | b] and the reduced-cost row from the basis.
    void refresh() {
        Eigen::MatrixXd B(m, m);
        for (int i = 0; i < m; ++i) {
            int bj = basis[static_cast<std::size_t>(i)];
            if (bj < n)
                for (int r = 0; r < m; ++r) B(r, i) = signed_a(r, bj);
            else {
                B.col(i).setZero();
                B(bj - n, i) = 1.0;
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);

        constexpr int kBlock = 2048;
        Eigen::MatrixXd block(m, kBlock);
        for (int j0 = 0; j0 < n; j0 += kBlock) {
            int w = std::min(kBlock, n - j0);
            for (int r = 0; r < m; ++r)
                for (int j = 0; j < w; ++j) block(r, j) = signed_a(r, j0 + j);
            T.block(0, j0, m, w) = lu.solve(block.leftCols(w));
        }
        T.block(0, n, m, m) = lu.solve(Eigen::MatrixXd::Identity(m, m));
        Eigen::VectorXd b(m);
        for (int i = 0; i < m; ++i) b(i) = signed_b(i);
        T.block(0, rhs_col(), m, 1) = lu.solve(b);
        // basis columns are exact unit vectors
        for (int i = 0; i < m; ++i) {
            int bj = basis[static_cast<std::size_t>(i)];
            for (int r = 0; r < m; ++r) T(r, bj) = (r == i) ? 1.0 : 0.0;
        }
        rebuild_objective_row();
        if (!T.allFinite())
            throw NumericalError("lp_solve: singular basis during refactorization");
    }

    // Phase-1 objective is the artificial mass, phase-2 the problem costs.
    void rebuild_objective_row() {
        T.row(obj_row()).setZero();
        if (phase == 1) {
            for (int i = 0; i < m; ++i)
                if (basis[static_cast<std::size_t>(i)] >= n) T.row(obj_row()) -= T.row(i);
            for (int i = 0; i < m; ++i) {
                int bj = basis[static_cast<std::size_t>(i)];
                if (bj >= n) T(obj_row(), bj) = 0.0;
            }
            // nonbasic artificials keep unit cost
            for (int j = n; j < n + m; ++j)
                if (!is_basic[static_cast<std::size_t>(j)]) T(obj_row(), j) += 1.0;
        } else {
            T.row(obj_row()).head(n) = prob->objective;
            for (int i = 0; i < m; ++i) {
                int bj = basis[static_cast<std::size_t>(i)];
                double cb = bj < n ? prob->objective(bj) : 0.0;
                if (cb != 0.0) T.row(obj_row()) -= cb * T.row(i);
            }
            for (int i = 0; i < m; ++i)
                T(obj_row(), basis[static_cast<std::size_t>(i)]) = 0.0;
        }
    }

    void pivot(int r, int s) {
        double piv = T(r, s);
        T.row(r) /= piv;
        T(r, s) = 1.0;
        for (int i = 0; i <= m; ++i) {
            if (i == r) continue;
            double a = T(i, s);
            if (std::abs(a) > 1e-13) T.row(i) -= a * T.row(r);
            T(i, s) = 0.0;
        }
        is_basic[static_cast<std::size_t>(basis[static_cast<std::size_t>(r)])] = 0;
        basis[static_cast<std::size_t>(r)] = s;
        is_basic[static_cast<std::size_t>(s)] = 1;
    }

    // Entering column among structural nonbasics; -1 when none is eligible.
    int choose_entering(Pricing pricing, bool stalled) const {
        const double* g = T.row(obj_row()).data();
        if (pricing == Pricing::bland || stalled) {
            for (int j = 0; j < n; ++j)
                if (!is_basic[static_cast<std::size_t>(j)] && g[j] < -kEnterEps) return j;
            return -1;
        }
        int best = -1;
        double best_val = -kEnterEps;
        for (int j = 0; j < n; ++j)
            if (!is_basic[static_cast<std::size_t>(j)] && g[j] < best_val) {
                best_val = g[j];
                best = j;
            }
        return best;
    }

    // Minimum-ratio row over candidates with denominator above `floor`;
    // ties broken toward the smallest basic variable index.
    int choose_leaving_bland(int s, double floor) const {
        int best = -1;
        double best_ratio = 0;
        for (int i = 0; i < m; ++i) {
            double a = T(i, s);
            if (a <= floor) continue;
            double ratio = T(i, rhs_col()) / a;
            if (best < 0 || ratio < best_ratio - kRatioTie ||
                (ratio <= best_ratio + kRatioTie &&
                 basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(best)])) {
                best = i;
                best_ratio = ratio;
            }
        }
        return best;
    }

    // Lexicographic ratio test: minimizes (rhs, B^-1 rows)/pivot entry in
    // dictionary order, using the artificial block as B^-1.  Equivalent to a
    // symbolic rhs perturbation; terminates degenerate runs under any
    // entering rule.  Comparisons are exact so the order is strict and the
    // anti-cycling argument survives floating point.
    int choose_leaving_lex(int s, double floor) const {
        int best = -1;
        for (int i = 0; i < m; ++i) {
            double a = T(i, s);
            if (a <= floor) continue;
            if (best < 0) {
                best = i;
                continue;
            }
            double ab = T(best, s);
            double ri = T(i, rhs_col()) / a, rb = T(best, rhs_col()) / ab;
            if (ri < rb) {
                best = i;
                continue;
            }
            if (ri > rb) continue;
            for (int col = n; col < n + m; ++col) {
                double ci = T(i, col) / a, cb = T(best, col) / ab;
                if (ci < cb) {
                    best = i;
                    break;
                }
                if (ci > cb) break;
            }
        }
        return best;
    }

    // Numerically strong pivot rows first, tiny denominators as a last resort.
    int choose_leaving(int s, Pricing pricing, bool stalled) const {
        int r = (pricing == Pricing::dantzig_bland && !stalled)
                    ? choose_leaving_lex(s, kStrongPivot)
                    : choose_leaving_bland(s, kStrongPivot);
        if (r >= 0) return r;
        return (pricing == Pricing::dantzig_bland && !stalled)
                   ? choose_leaving_lex(s, kPivotEps)
                   : choose_leaving_bland(s, kPivotEps);
    }

    // Runs the simplex loop; returns false on unboundedness.  Bland pricing
    // pairs the smallest-index entering rule with smallest-index ratio ties;
    // dantzig_bland prices by most negative reduced cost and leaves by the
    // lexicographic rule.  Every kRefreshEvery pivots the tableau is
    // refactorized; optimality found on refreshed data is exact, and two
    // refresh windows without objective progress switch pricing to Bland.
    bool run(Pricing pricing, long cap) {
        bool stalled = false;
        long last_refresh = iterations;
        int flat_windows = 0;
        double window_value = -T(obj_row(), rhs_col());
        for (;;) {
            if (++iterations > cap)
                throw NumericalError("lp_solve: iteration cap exceeded (" + std::to_string(cap) + ")");
            if (iterations - last_refresh >= kRefreshEvery) {
                refresh();
                last_refresh = iterations;
                double value = -T(obj_row(), rhs_col());
                if (value >= window_value - 1e-13 * (1.0 + std::abs(value))) {
                    if (++flat_windows >= 8) stalled = true;  // Bland from here on
                } else {
                    flat_windows = 0;
                }
                window_value = value;
                if (std::getenv("ET_LP_TRACE"))
                    std::fprintf(stderr, "[lp] m=%d n=%d iter=%ld value=%.6e stalled=%d\n", m, n,
                                 iterations, value, int(stalled));
            }
            int s = choose_entering(pricing, stalled);
            if (s < 0) return true;
            int r = choose_leaving(s, pricing, stalled);
            if (r < 0) return false;
            pivot(r, s);
        }
    }
};

}  // namespace

void LpProblem::validate() const {
    if (matrix.rows() != rhs.size() || matrix.cols() != objective.size())
        throw DimensionError("LpProblem: inconsistent dimensions");
    if (!objective.allFinite() || !matrix.allFinite() || !rhs.allFinite())
        throw ConfigError("LpProblem: non-finite entries");
}

LpSolution lp_solve(const LpProblem& p, const LpOptions& opts) {
    p.validate();
    const int m = static_cast<int>(p.rows());
    const int n = static_cast<int>(p.cols());

    // Sign-normalize rows so the artificial start basis is feasible.
    Tableau tab;
    tab.m = m;
    tab.n = n;
    tab.prob = &p;
    tab.flipped.assign(static_cast<std::size_t>(m), 0);
    for (int i = 0; i < m; ++i) tab.flipped[static_cast<std::size_t>(i)] = p.rhs(i) < 0;
    tab.T.setZero(m + 1, n + m + 1);
    tab.basis.resize(static_cast<std::size_t>(m));
    tab.is_basic.assign(static_cast<std::size_t>(n + m), 0);

    const long cap = opts.max_iters > 0 ? opts.max_iters : 500000;
    LpSolution sol;

    // A warm basis skips phase 1 when it is valid, nonsingular and still
    // primal feasible for this right-hand side.
    bool warm_ok = false;
    if (opts.warm_basis && static_cast<int>(opts.warm_basis->size()) == m) {
        bool valid = true;
        std::vector<char> seen(static_cast<std::size_t>(n + m), 0);
        for (int bj : *opts.warm_basis) {
            if (bj < 0 || bj >= n + m || seen[static_cast<std::size_t>(bj)]) {
                valid = false;
                break;
            }
            seen[static_cast<std::size_t>(bj)] = 1;
        }
        if (valid) {
            Eigen::MatrixXd B(m, m);
            for (int i = 0; i < m; ++i) {
                int bj = (*opts.warm_basis)[static_cast<std::size_t>(i)];
                if (bj < n)
                    for (int r = 0; r < m; ++r) B(r, i) = tab.signed_a(r, bj);
                else {
                    B.col(i).setZero();
                    B(bj - n, i) = 1.0;
                }
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
            lu.setThreshold(1e-10);
            if (lu.rank() == m) {
                tab.basis.assign(opts.warm_basis->begin(), opts.warm_basis->end());
                for (int bj : tab.basis) tab.is_basic[static_cast<std::size_t>(bj)] = 1;
                tab.phase = 2;
                try {
                    tab.refresh();
                    warm_ok = tab.T.col(tab.rhs_col()).head(m).minCoeff() >= -1e-9;
                } catch (const NumericalError&) {
                    warm_ok = false;
                }
                if (!warm_ok) tab.is_basic.assign(static_cast<std::size_t>(n + m), 0);
            }
        }
    }

    if (!warm_ok) {
        tab.T.setZero(m + 1, n + m + 1);
        for (int i = 0; i < m; ++i) {
            double sign = tab.flipped[static_cast<std::size_t>(i)] ? -1.0 : 1.0;
            tab.T.block(i, 0, 1, n) = sign * p.matrix.row(i);
            tab.T(i, n + i) = 1.0;
            tab.T(i, tab.rhs_col()) = sign * p.rhs(i);
        }
        for (int i = 0; i < m; ++i) {
            tab.basis[static_cast<std::size_t>(i)] = n + i;
            tab.is_basic[static_cast<std::size_t>(n + i)] = 1;
        }

        // Phase 1: minimize the artificial mass.
        tab.phase = 1;
        tab.rebuild_objective_row();
        if (!tab.run(opts.pricing, cap))
            throw NumericalError("lp_solve: phase 1 reported unbounded");
        double phase1 = -tab.T(tab.obj_row(), tab.rhs_col());
        sol.iterations = tab.iterations;
        if (phase1 > kFeasEps) {
            sol.status = LpStatus::infeasible;
            return sol;
        }

        // Drive artificials out of the basis where possible; rows with no
        // structural entry are redundant and stay inert.
        for (int i = 0; i < m; ++i) {
            if (tab.basis[static_cast<std::size_t>(i)] < n) continue;
            for (int j = 0; j < n; ++j) {
                if (!tab.is_basic[static_cast<std::size_t>(j)] &&
                    std::abs(tab.T(i, j)) > kPivotEps) {
                    tab.pivot(i, j);
                    break;
                }
            }
        }
    }

    // Phase 2: rebuild the reduced-cost row from the original objective.
    tab.phase = 2;
    tab.rebuild_objective_row();

    if (!tab.run(opts.pricing, cap)) {
        sol.status = LpStatus::unbounded;
        sol.iterations = tab.iterations;
        return sol;
    }
    sol.iterations = tab.iterations;
    sol.basis.assign(tab.basis.begin(), tab.basis.end());

    // Refinement: recompute the basic solution and the duals from the
    // original data with a fresh factorization, so the reported residuals do
    // not inherit tableau drift.
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd cB(m);
    for (int i = 0; i < m; ++i) {
        int bj = tab.basis[static_cast<std::size_t>(i)];
        if (bj < n) {
            B.col(i) = p.matrix.col(bj);
            cB(i) = p.objective(bj);
        } else {
            // the artificial for a sign-normalized row enters the original
            // system with that sign
            B.col(i).setZero();
            int row = bj - n;
            B(row, i) = tab.flipped[static_cast<std::size_t>(row)] ? -1.0 : 1.0;
            cB(i) = 0.0;
        }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Eigen::VectorXd xB = lu.solve(p.rhs);
    Eigen::VectorXd y = lu.transpose().solve(cB);

    sol.primal.setZero(n);
    for (int i = 0; i < m; ++i) {
        int bj = tab.basis[static_cast<std::size_t>(i)];
        if (bj < n)
            sol.primal(bj) = std::max(xB(i), 0.0);
        else if (std::abs(xB(i)) > opts.hard_tol)
            throw NumericalError("lp_solve: basic artificial variable has nonzero value");
    }
    sol.dual = y;

    sol.objective = p.objective.dot(sol.primal);
    sol.primal_residual = (p.matrix * sol.primal - p.rhs).cwiseAbs().maxCoeff();
    Eigen::VectorXd rc = p.objective - p.matrix.transpose() * sol.dual;
    sol.dual_residual = std::max(0.0, -rc.minCoeff());
    sol.complementary_slackness = (sol.primal.array() * rc.array()).abs().maxCoeff();
    sol.duality_gap = std::abs(sol.objective - p.rhs.dot(sol.dual));

    if (sol.primal_residual > opts.hard_tol || sol.dual_residual > opts.hard_tol ||
        sol.complementary_slackness > opts.hard_tol || sol.duality_gap > opts.hard_tol)
        throw NumericalError("lp_solve: residuals exceed hard tolerance after refinement");

    sol.status = LpStatus::optimal;
    return sol;
}

UniquenessReport optimal_face_probe(const LpProblem& p, const LpSolution& s,
                                    const LpOptions& opts) {
    if (s.status != LpStatus::optimal)
        throw DimensionError("optimal_face_probe: solution is not optimal");
    const int m = static_cast<int>(p.rows());
    const int n = static_cast<int>(p.cols());

    std::vector<char> in_basis(static_cast<std::size_t>(n), 0);
    for (int bj : s.basis)
        if (bj < n) in_basis[static_cast<std::size_t>(bj)] = 1;

    // Any alternative optimum vanishes on columns with positive reduced cost,
    // so only zero-reduced-cost nonbasic coordinates can move.
    Eigen::VectorXd rc = p.objective - p.matrix.transpose() * s.dual;
    std::vector<int> candidates;
    for (int j = 0; j < n; ++j)
        if (!in_basis[static_cast<std::size_t>(j)] && std::abs(rc(j)) <= opts.tol)
            candidates.push_back(j);

    UniquenessReport report;
    report.zero_reduced_cost_columns = static_cast<int>(candidates.size());
    if (candidates.empty()) return report;

    LpProblem face;
    face.matrix.setZero(m + 1, n);
    face.matrix.topRows(m) = p.matrix;
    face.matrix.row(m) = p.objective.transpose();
    face.rhs.setZero(m + 1);
    face.rhs.head(m) = p.rhs;
    face.rhs(m) = s.objective;
    face.objective.setZero(n);
    for (int j : candidates) face.objective(j) = -1.0;

    LpSolution probe = lp_solve(face, opts);
    if (probe.status == LpStatus::unbounded) {
        report.unique = false;
        report.alternative_mass = std::numeric_limits<double>::infinity();
        return report;
    }
    if (probe.status != LpStatus::optimal)
        throw NumericalError("optimal_face_probe: face subproblem not solvable");
    report.alternative_mass = -probe.objective;
    report.unique = report.alternative_mass <= 100 * opts.tol;
    if (!report.unique) report.witness = probe.primal;
    return report;
}

TransportPlan classical_ot(const FiniteMeasure& mu, const FiniteMeasure& nu,
                           const Eigen::MatrixXd& cost, Sense sense, const LpOptions& opts) {
    const int nx = static_cast<int>(mu.atoms.size());
    const int ny = static_cast<int>(nu.atoms.size());
    if (nx == 0 || ny == 0) throw DimensionError("classical_ot: empty marginal");
    if (cost.rows() != nx || cost.cols() != ny)
        throw DimensionError("classical_ot: cost matrix shape mismatch");
    if (!cost.allFinite()) throw ConfigError("classical_ot: non-finite cost");
    mu.validate(1e-9);
    nu.validate(1e-9);

    LpProblem p;
    p.matrix.setZero(nx + ny, static_cast<Eigen::Index>(nx) * ny);
    p.rhs.setZero(nx + ny);
    p.objective.setZero(static_cast<Eigen::Index>(nx) * ny);
    for (int i = 0; i < nx; ++i) {
        p.rhs(i) = mu.atoms[static_cast<std::size_t>(i)].second;
        for (int j = 0; j < ny; ++j) {
            Eigen::Index col = static_cast<Eigen::Index>(i) * ny + j;
            p.matrix(i, col) = 1.0;
            p.matrix(nx + j, col) = 1.0;
            p.objective(col) = sense == Sense::minimize ? cost(i, j) : -cost(i, j);
        }
    }
    for (int j = 0; j < ny; ++j) p.rhs(nx + j) = nu.atoms[static_cast<std::size_t>(j)].second;

    LpSolution sol = lp_solve(p, opts);
    if (sol.status != LpStatus::optimal)
        throw NumericalError("classical_ot: transport LP not optimal");

    TransportPlan plan;
    double value = 0, comp = 0;  // compensated sum in column order
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            double mass = sol.primal(static_cast<Eigen::Index>(i) * ny + j);
            if (mass <= 1e-12) continue;
            plan.atoms.push_back({mu.atoms[static_cast<std::size_t>(i)].first,
                                  nu.atoms[static_cast<std::size_t>(j)].first, mass});
            double term = mass * cost(i, j) - comp;
            double t = value + term;
            comp = (t - value) - term;
            value = t;
        }
    plan.value = value;
    return plan;
}

}  // namespace et
