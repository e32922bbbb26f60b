#include "et/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>

namespace et {

namespace {

struct Grid {
    std::vector<Cell> x_cells;
    Eigen::VectorXd mu;  // P1 only
    int d = 2;
    int ky = 2;
    std::uint64_t ny = 0;  // d^ky
    RowMatrixXd lo, hi;    // x_cells.size() x ny
};

Grid build_grid(const std::vector<Cell>& x_cells, const CostSpec& cost, int ky) {
    Grid g;
    g.x_cells = x_cells;
    g.d = cost.alphabet;
    g.ky = ky;
    g.ny = ipow(g.d, ky);
    g.lo.resize(static_cast<Eigen::Index>(x_cells.size()), static_cast<Eigen::Index>(g.ny));
    g.hi.resize(g.lo.rows(), g.lo.cols());
    for (std::size_t u = 0; u < x_cells.size(); ++u) {
        for (std::uint64_t v = 0; v < g.ny; ++v) {
            CostBracket b = cost_bracket(cost, x_cells[u], Cylinder(word_from_index(v, ky, g.d)));
            g.lo(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = b.lo;
            g.hi(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = b.hi;
        }
    }
    return g;
}

std::vector<Cell> all_cylinders(int depth, int d) {
    std::vector<Cell> cells;
    std::uint64_t n = ipow(d, depth);
    cells.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) cells.emplace_back(Cylinder(word_from_index(i, depth, d)));
    return cells;
}

LpProblem assemble_p1_from_grid(const Grid& g) {
    const std::uint64_t nodes = ipow(g.d, g.ky - 1);
    const Eigen::Index ncells = static_cast<Eigen::Index>(g.x_cells.size());
    const Eigen::Index n = ncells * static_cast<Eigen::Index>(g.ny);
    const Eigen::Index m = ncells + static_cast<Eigen::Index>(nodes);

    LpProblem p;
    p.matrix.setZero(m, n);
    p.rhs.setZero(m);
    p.objective.setZero(n);
    for (Eigen::Index u = 0; u < ncells; ++u) {
        p.rhs(u) = g.mu(u);
        for (std::uint64_t v = 0; v < g.ny; ++v)
            p.matrix(u, u * static_cast<Eigen::Index>(g.ny) + static_cast<Eigen::Index>(v)) = 1.0;
    }
    StationarityConstraints cons{g.ky, g.d};
    for (std::uint64_t w = 0; w < nodes; ++w) {
        Eigen::Index row = ncells + static_cast<Eigen::Index>(w);
        for (const auto& [idx, coeff] : cons.row(w))
            for (Eigen::Index u = 0; u < ncells; ++u)
                p.matrix(row, u * static_cast<Eigen::Index>(g.ny) + static_cast<Eigen::Index>(idx)) +=
                    coeff;
    }
    return p;
}

LpProblem assemble_p2_from_grid(const Grid& g, int kx) {
    const std::uint64_t nx = ipow(g.d, kx);
    const std::uint64_t nodes_x = ipow(g.d, kx - 1);
    const std::uint64_t nodes_y = ipow(g.d, g.ky - 1);
    const Eigen::Index n = static_cast<Eigen::Index>(nx * g.ny);
    const Eigen::Index m = static_cast<Eigen::Index>(nodes_x + nodes_y) + 1;

    LpProblem p;
    p.matrix.setZero(m, n);
    p.rhs.setZero(m);
    p.objective.setZero(n);
    StationarityConstraints cons_x{kx, g.d};
    for (std::uint64_t w = 0; w < nodes_x; ++w) {
        Eigen::Index row = static_cast<Eigen::Index>(w);
        for (const auto& [xidx, coeff] : cons_x.row(w)) {
            Eigen::Index base = static_cast<Eigen::Index>(xidx * g.ny);
            for (std::uint64_t v = 0; v < g.ny; ++v)
                p.matrix(row, base + static_cast<Eigen::Index>(v)) += coeff;
        }
    }
    StationarityConstraints cons_y{g.ky, g.d};
    for (std::uint64_t w = 0; w < nodes_y; ++w) {
        Eigen::Index row = static_cast<Eigen::Index>(nodes_x + w);
        for (const auto& [yidx, coeff] : cons_y.row(w))
            for (std::uint64_t u = 0; u < nx; ++u)
                p.matrix(row, static_cast<Eigen::Index>(u * g.ny + yidx)) += coeff;
    }
    p.matrix.row(m - 1).setOnes();
    p.rhs(m - 1) = 1.0;
    return p;
}

void set_objective(LpProblem& p, const Grid& g, Bound bound) {
    const RowMatrixXd& c = bound == Bound::lo ? g.lo : g.hi;
    for (Eigen::Index u = 0; u < c.rows(); ++u)
        for (Eigen::Index v = 0; v < c.cols(); ++v) p.objective(u * c.cols() + v) = c(u, v);
}

TransportPlan extract_plan(const Eigen::VectorXd& primal, const std::vector<Cell>& x_cells,
                           int d, int ky, double value) {
    const Eigen::Index ny = static_cast<Eigen::Index>(ipow(d, ky));
    TransportPlan plan;
    plan.value = value;
    for (Eigen::Index j = 0; j < primal.size(); ++j) {
        if (primal(j) <= 1e-12) continue;
        Eigen::Index u = j / ny;
        std::uint64_t v = static_cast<std::uint64_t>(j % ny);
        plan.atoms.push_back({x_cells[static_cast<std::size_t>(u)],
                              Cell{Cylinder(word_from_index(v, ky, d))}, primal(j)});
    }
    return plan;
}

double kahan_add(double& sum, double& comp, double term) {
    double y = term - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    return sum;
}

// Column view of the P1/P2 equality systems: cost, sparse entries and rhs,
// without materializing the full dense matrix.
struct ColumnOracle {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::VectorXd rhs;
    std::function<double(Eigen::Index)> cost;
    std::function<void(Eigen::Index, std::vector<std::pair<Eigen::Index, double>>&)> entries;
};

// Deterministic jitter in [0.5e-10, 1.5e-10), keyed to the global column id
// (splitmix64).  Far below the 2^-2k cost quantum of the bracket grids and
// far above refactorization noise.
double cg_jitter(Eigen::Index j) {
    std::uint64_t z = static_cast<std::uint64_t>(j) + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return 1e-10 * (0.5 + static_cast<double>(z % 1024) / 1024.0);
}

// Exact delayed column generation around lp_solve: solve the master on the
// working columns, price every column through the duals, pull in violators,
// repeat until the full problem is dual feasible.  The master costs carry a
// deterministic jitter that collapses the (heavily degenerate) optimal face;
// pricing, the final value and the reported residuals use the exact costs.
LpSolution cg_solve(const ColumnOracle& oc, std::vector<Eigen::Index> cols,
                    const LpOptions& master_opts) {
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());

    LpOptions opts = master_opts;
    opts.pricing = Pricing::dantzig_bland;
    if (opts.max_iters <= 0) opts.max_iters = 2000000;

    std::vector<std::pair<Eigen::Index, double>> scratch;
    long total_iterations = 0;
    std::vector<int> warm_global;  // previous optimal basis, global column ids
    for (int round = 0; round < 200; ++round) {
        LpProblem p;
        p.matrix.setZero(oc.rows, static_cast<Eigen::Index>(cols.size()));
        p.rhs = oc.rhs;
        p.objective.resize(static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < cols.size(); ++i) {
            p.objective(static_cast<Eigen::Index>(i)) = oc.cost(cols[i]) + cg_jitter(cols[i]);
            scratch.clear();
            oc.entries(cols[i], scratch);
            for (const auto& [row, coeff] : scratch)
                p.matrix(row, static_cast<Eigen::Index>(i)) += coeff;
        }
        // the previous round's basis stays feasible: same rows, same rhs
        std::vector<int> warm_local;
        LpOptions round_opts = opts;
        if (!warm_global.empty()) {
            warm_local.reserve(warm_global.size());
            for (int gid : warm_global) {
                if (gid >= static_cast<int>(oc.cols)) {
                    warm_local.push_back(static_cast<int>(cols.size()) +
                                         (gid - static_cast<int>(oc.cols)));
                } else {
                    auto it = std::lower_bound(cols.begin(), cols.end(),
                                               static_cast<Eigen::Index>(gid));
                    warm_local.push_back(static_cast<int>(it - cols.begin()));
                }
            }
            round_opts.warm_basis = &warm_local;
        }
        LpSolution sol;
        try {
            sol = lp_solve(p, round_opts);
        } catch (const NumericalError&) {
            if (round_opts.warm_basis == nullptr) throw;
            round_opts.warm_basis = nullptr;  // cold retry after a corrupted basis
            sol = lp_solve(p, round_opts);
        }
        total_iterations += sol.iterations;
        if (std::getenv("ET_LP_TRACE"))
            std::fprintf(stderr, "[cg] round=%d cols=%zu iters=%ld value=%.6e\n", round,
                         cols.size(), sol.iterations, sol.objective);
        if (sol.status != LpStatus::optimal)
            throw NumericalError("column generation: restricted master not optimal");

        double worst_rc = 0;
        std::vector<std::pair<double, Eigen::Index>> violated;
        for (Eigen::Index j = 0; j < oc.cols; ++j) {
            scratch.clear();
            oc.entries(j, scratch);
            double rc = oc.cost(j);
            for (const auto& [row, coeff] : scratch) rc -= coeff * sol.dual(row);
            worst_rc = std::min(worst_rc, rc);
            if (rc < -5e-10 && !std::binary_search(cols.begin(), cols.end(), j))
                violated.emplace_back(rc, j);
        }
        if (violated.empty()) {
            LpSolution full = sol;
            full.primal.setZero(oc.cols);
            double value = 0, comp = 0;  // exact objective, compensated
            for (std::size_t i = 0; i < cols.size(); ++i) {
                double mass = sol.primal(static_cast<Eigen::Index>(i));
                full.primal(cols[i]) = mass;
                if (mass != 0.0) kahan_add(value, comp, mass * oc.cost(cols[i]));
            }
            full.objective = value;
            full.dual_residual = std::max(sol.dual_residual, -worst_rc);
            full.duality_gap = std::abs(value - oc.rhs.dot(sol.dual));
            full.iterations = total_iterations;
            for (int& b : full.basis)
                b = b < static_cast<int>(cols.size())
                        ? static_cast<int>(cols[static_cast<std::size_t>(b)])
                        : static_cast<int>(oc.cols) + (b - static_cast<int>(cols.size()));
            return full;
        }
        warm_global.clear();
        for (int b : sol.basis)
            warm_global.push_back(b < static_cast<int>(cols.size())
                                      ? static_cast<int>(cols[static_cast<std::size_t>(b)])
                                      : static_cast<int>(oc.cols) +
                                            (b - static_cast<int>(cols.size())));
        std::sort(violated.begin(), violated.end());
        std::size_t batch = std::min<std::size_t>(violated.size(), 512);
        for (std::size_t i = 0; i < batch; ++i) cols.push_back(violated[i].second);
        std::sort(cols.begin(), cols.end());
    }
    throw NumericalError("column generation: no convergence after 200 rounds");
}

// Cheapest columns plus a feasible support to start the master from.
std::vector<Eigen::Index> cg_seed(const ColumnOracle& oc,
                                  const std::vector<Eigen::Index>& feasible_support) {
    std::vector<std::pair<double, Eigen::Index>> ranked;
    ranked.reserve(static_cast<std::size_t>(oc.cols));
    for (Eigen::Index j = 0; j < oc.cols; ++j) ranked.emplace_back(oc.cost(j), j);
    std::size_t keep = std::min<std::size_t>(ranked.size(), 4 * static_cast<std::size_t>(oc.rows));
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                      ranked.end());
    std::vector<Eigen::Index> cols = feasible_support;
    for (std::size_t i = 0; i < keep; ++i) cols.push_back(ranked[i].second);
    return cols;
}

ColumnOracle p1_oracle(const Grid& g, Bound bound) {
    const Eigen::Index ncells = static_cast<Eigen::Index>(g.x_cells.size());
    const std::uint64_t ny = g.ny;
    const std::uint64_t nodes = ipow(g.d, g.ky - 1);
    const int d = g.d;
    const RowMatrixXd& c = bound == Bound::lo ? g.lo : g.hi;
    ColumnOracle oc;
    oc.rows = ncells + static_cast<Eigen::Index>(nodes);
    oc.cols = ncells * static_cast<Eigen::Index>(ny);
    oc.rhs.setZero(oc.rows);
    oc.rhs.head(ncells) = g.mu;
    oc.cost = [&c, ny](Eigen::Index j) {
        return c(j / static_cast<Eigen::Index>(ny), j % static_cast<Eigen::Index>(ny));
    };
    oc.entries = [ncells, ny, nodes, d](Eigen::Index j,
                                        std::vector<std::pair<Eigen::Index, double>>& out) {
        Eigen::Index u = j / static_cast<Eigen::Index>(ny);
        std::uint64_t v = static_cast<std::uint64_t>(j) % ny;
        out.emplace_back(u, 1.0);
        out.emplace_back(ncells + static_cast<Eigen::Index>(v % nodes), 1.0);   // in-edge
        out.emplace_back(ncells + static_cast<Eigen::Index>(v / static_cast<std::uint64_t>(d)),
                         -1.0);                                                 // out-edge
    };
    return oc;
}

ColumnOracle p2_oracle(const Grid& g, int kx, Bound bound) {
    const std::uint64_t nx = ipow(g.d, kx);
    const std::uint64_t nodes_x = ipow(g.d, kx - 1);
    const std::uint64_t nodes_y = ipow(g.d, g.ky - 1);
    const std::uint64_t ny = g.ny;
    const int d = g.d;
    const RowMatrixXd& c = bound == Bound::lo ? g.lo : g.hi;
    ColumnOracle oc;
    oc.rows = static_cast<Eigen::Index>(nodes_x + nodes_y) + 1;
    oc.cols = static_cast<Eigen::Index>(nx * ny);
    oc.rhs.setZero(oc.rows);
    oc.rhs(oc.rows - 1) = 1.0;
    oc.cost = [&c, ny](Eigen::Index j) {
        return c(j / static_cast<Eigen::Index>(ny), j % static_cast<Eigen::Index>(ny));
    };
    oc.entries = [nodes_x, nodes_y, ny, d, rows = oc.rows](
                     Eigen::Index j, std::vector<std::pair<Eigen::Index, double>>& out) {
        std::uint64_t u = static_cast<std::uint64_t>(j) / ny;
        std::uint64_t v = static_cast<std::uint64_t>(j) % ny;
        out.emplace_back(static_cast<Eigen::Index>(u % nodes_x), 1.0);
        out.emplace_back(static_cast<Eigen::Index>(u / static_cast<std::uint64_t>(d)), -1.0);
        out.emplace_back(static_cast<Eigen::Index>(nodes_x + v % nodes_y), 1.0);
        out.emplace_back(
            static_cast<Eigen::Index>(nodes_x + v / static_cast<std::uint64_t>(d)), -1.0);
        out.emplace_back(rows - 1, 1.0);
    };
    return oc;
}

}  // namespace

void P1Instance::validate() const {
    cost.validate();
    if (depth < 2) throw ConfigError("p1: depth >= 2 required");
    if (const auto* fm = std::get_if<FiniteMeasure>(&mu)) {
        fm->validate();
        if (fm->atoms.empty()) throw ConfigError("p1: empty marginal");
    } else {
        const auto& cm = std::get<CylinderMeasure>(mu);
        cm.validate();
        if (cm.alphabet != cost.alphabet)
            throw DimensionError("p1: marginal alphabet differs from cost alphabet");
    }
}

void P2Instance::validate() const {
    cost.validate();
    if (depth_x < 2 || depth_y < 2) throw ConfigError("p2: depths >= 2 required");
}

std::vector<std::pair<Cell, double>> p1_x_cells(const P1Instance& inst) {
    std::vector<std::pair<Cell, double>> cells;
    if (const auto* fm = std::get_if<FiniteMeasure>(&inst.mu)) {
        for (const auto& [cell, mass] : fm->atoms) cells.emplace_back(cell, mass);
    } else {
        const auto& cm = std::get<CylinderMeasure>(inst.mu);
        for (std::uint64_t i = 0; i < cm.cells(); ++i)
            cells.emplace_back(Cylinder(word_from_index(i, cm.depth, cm.alphabet)), cm.mass[i]);
    }
    return cells;
}

LpProblem assemble_p1(const P1Instance& inst, Bound bound) {
    inst.validate();
    auto cells = p1_x_cells(inst);
    std::vector<Cell> x_cells;
    Eigen::VectorXd mu(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        x_cells.push_back(cells[i].first);
        mu(static_cast<Eigen::Index>(i)) = cells[i].second;
    }
    Grid g = build_grid(x_cells, inst.cost, inst.depth);
    g.mu = std::move(mu);
    LpProblem p = assemble_p1_from_grid(g);
    set_objective(p, g, bound);
    return p;
}

LpProblem assemble_p2(const P2Instance& inst, Bound bound) {
    inst.validate();
    Grid g = build_grid(all_cylinders(inst.depth_x, inst.cost.alphabet), inst.cost, inst.depth_y);
    LpProblem p = assemble_p2_from_grid(g, inst.depth_x);
    set_objective(p, g, bound);
    return p;
}

SolveResult solve_p1(const P1Instance& inst, const SolveOptions& opts) {
    inst.validate();
    auto cells = p1_x_cells(inst);
    std::vector<Cell> x_cells;
    Eigen::VectorXd mu(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        x_cells.push_back(cells[i].first);
        mu(static_cast<Eigen::Index>(i)) = cells[i].second;
    }
    Grid g = build_grid(x_cells, inst.cost, inst.depth);
    g.mu = std::move(mu);

    SolveResult res;
    const std::uint64_t nodes = ipow(g.d, g.ky - 1);
    const Eigen::Index total =
        static_cast<Eigen::Index>(g.x_cells.size()) * static_cast<Eigen::Index>(g.ny);
    auto solve_bound = [&](Bound bound) {
        if (total <= opts.column_generation_threshold) {
            LpProblem lp = assemble_p1_from_grid(g);
            set_objective(lp, g, bound);
            return lp_solve(lp, opts.lp);
        }
        ColumnOracle oc = p1_oracle(g, bound);
        // pairing every x-cell with [00..0] is feasible: its y-marginal is
        // the invariant point mass
        std::vector<Eigen::Index> support;
        for (std::size_t u = 0; u < g.x_cells.size(); ++u)
            support.push_back(static_cast<Eigen::Index>(u) * static_cast<Eigen::Index>(g.ny));
        return cg_solve(oc, cg_seed(oc, support), opts.lp);
    };
    {
        res.lo_solution = solve_bound(Bound::lo);
        if (res.lo_solution.status != LpStatus::optimal)
            throw NumericalError("solve_p1: lo relaxation not optimal");
        res.bracket.lo = res.lo_solution.objective;
        res.bracket.plan_lo =
            extract_plan(res.lo_solution.primal, g.x_cells, g.d, g.ky, res.lo_solution.objective);
        res.dual.phi_keys = g.x_cells;
        res.dual.phi.assign(res.lo_solution.dual.data(),
                            res.lo_solution.dual.data() + g.x_cells.size());
        res.dual.psi_depth = g.ky - 1;
        res.dual.psi.assign(res.lo_solution.dual.data() + g.x_cells.size(),
                            res.lo_solution.dual.data() + g.x_cells.size() + nodes);
        res.dual.alpha = 0;
        res.dual.p2_form = false;
    }
    {
        res.hi_solution = solve_bound(Bound::hi);
        if (res.hi_solution.status != LpStatus::optimal)
            throw NumericalError("solve_p1: hi relaxation not optimal");
        res.bracket.hi = res.hi_solution.objective;
        res.bracket.plan_hi =
            extract_plan(res.hi_solution.primal, g.x_cells, g.d, g.ky, res.hi_solution.objective);
    }
    return res;
}

SolveResult solve_p2(const P2Instance& inst, const SolveOptions& opts) {
    inst.validate();
    Grid g = build_grid(all_cylinders(inst.depth_x, inst.cost.alphabet), inst.cost, inst.depth_y);
    const std::uint64_t nodes_x = ipow(g.d, inst.depth_x - 1);
    const std::uint64_t nodes_y = ipow(g.d, g.ky - 1);

    SolveResult res;
    const std::uint64_t nx = ipow(g.d, inst.depth_x);
    const Eigen::Index total = static_cast<Eigen::Index>(nx * g.ny);
    auto solve_bound = [&](Bound bound) {
        if (total <= opts.column_generation_threshold) {
            LpProblem lp = assemble_p2_from_grid(g, inst.depth_x);
            set_objective(lp, g, bound);
            return lp_solve(lp, opts.lp);
        }
        ColumnOracle oc = p2_oracle(g, inst.depth_x, bound);
        // the diagonal cell pairs support product plans of one stationary
        // measure with itself, so the master starts feasible
        std::vector<Eigen::Index> support;
        if (inst.depth_x == g.ky)
            for (std::uint64_t v = 0; v < g.ny; ++v)
                support.push_back(static_cast<Eigen::Index>(v * g.ny + v));
        else
            for (std::uint64_t u = 0; u < nx; ++u)
                for (std::uint64_t v = 0; v < g.ny; ++v)
                    if (word_from_index(u, inst.depth_x, g.d).prefix(
                            std::min(inst.depth_x, g.ky)) ==
                        word_from_index(v, g.ky, g.d).prefix(std::min(inst.depth_x, g.ky)))
                        support.push_back(static_cast<Eigen::Index>(u * g.ny + v));
        return cg_solve(oc, cg_seed(oc, support), opts.lp);
    };
    {
        res.lo_solution = solve_bound(Bound::lo);
        if (res.lo_solution.status != LpStatus::optimal)
            throw NumericalError("solve_p2: lo relaxation not optimal");
        res.bracket.lo = res.lo_solution.objective;
        res.bracket.plan_lo =
            extract_plan(res.lo_solution.primal, g.x_cells, g.d, g.ky, res.lo_solution.objective);
        res.dual.phi_keys = all_cylinders(inst.depth_x - 1, g.d);
        res.dual.phi.assign(res.lo_solution.dual.data(), res.lo_solution.dual.data() + nodes_x);
        res.dual.psi_depth = g.ky - 1;
        res.dual.psi.assign(res.lo_solution.dual.data() + nodes_x,
                            res.lo_solution.dual.data() + nodes_x + nodes_y);
        res.dual.alpha = res.lo_solution.dual(static_cast<Eigen::Index>(nodes_x + nodes_y));
        res.dual.p2_form = true;
    }
    {
        res.hi_solution = solve_bound(Bound::hi);
        if (res.hi_solution.status != LpStatus::optimal)
            throw NumericalError("solve_p2: hi relaxation not optimal");
        res.bracket.hi = res.hi_solution.objective;
        res.bracket.plan_hi =
            extract_plan(res.hi_solution.primal, g.x_cells, g.d, g.ky, res.hi_solution.objective);
    }
    return res;
}

namespace {

int p2_depth_x(const DualPair& dp) {
    if (dp.phi_keys.empty()) throw DimensionError("dual pair: empty phi");
    const auto* cyl = std::get_if<Cylinder>(&dp.phi_keys.front());
    if (cyl == nullptr) throw DimensionError("dual pair: p2 phi keys must be cylinders");
    return cyl->depth() + 1;
}

}  // namespace

double admissibility_violation(const DualPair& dp, const CostSpec& cost) {
    const int d = cost.alphabet;
    const int ky = dp.psi_depth + 1;
    const std::uint64_t ny = ipow(d, ky);
    const std::uint64_t nodes_y = ipow(d, ky - 1);
    if (dp.psi.size() != nodes_y) throw DimensionError("dual pair: psi size != d^(k-1)");

    double worst = -std::numeric_limits<double>::infinity();
    if (!dp.p2_form) {
        for (std::size_t u = 0; u < dp.phi_keys.size(); ++u) {
            for (std::uint64_t v = 0; v < ny; ++v) {
                double lo =
                    cost_bracket(cost, dp.phi_keys[u], Cylinder(word_from_index(v, ky, d))).lo;
                double term = dp.phi[u] + dp.psi[v % nodes_y] - dp.psi[v / d];
                worst = std::max(worst, term - lo);
            }
        }
        return worst;
    }
    const int kx = p2_depth_x(dp);
    const std::uint64_t nx = ipow(d, kx);
    const std::uint64_t nodes_x = ipow(d, kx - 1);
    if (dp.phi.size() != nodes_x) throw DimensionError("dual pair: phi size != d^(kx-1)");
    for (std::uint64_t u = 0; u < nx; ++u) {
        double dphi = dp.phi[u % nodes_x] - dp.phi[u / d];
        Cell ucell = Cylinder(word_from_index(u, kx, d));
        for (std::uint64_t v = 0; v < ny; ++v) {
            double lo = cost_bracket(cost, ucell, Cylinder(word_from_index(v, ky, d))).lo;
            double term = dp.alpha + dphi + dp.psi[v % nodes_y] - dp.psi[v / d];
            worst = std::max(worst, term - lo);
        }
    }
    return worst;
}

double dual_objective(const DualPair& dp, const TransportPlan& plan) {
    if (dp.p2_form) return dp.alpha;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < dp.phi_keys.size(); ++i) index[cell_str(dp.phi_keys[i])] = i;
    double sum = 0, comp = 0;
    for (const auto& atom : plan.atoms) {
        auto it = index.find(cell_str(atom.x));
        if (it == index.end())
            throw DimensionError("dual_objective: plan atom outside the dual pair's x-cells");
        kahan_add(sum, comp, atom.mass * dp.phi[it->second]);
    }
    return sum;
}

namespace {

// Greatest fixpoint of psi(t) = min(0, min over in-edges v of
// psi(prefix v) + cost(v)), reached from psi = 0 by Jacobi sweeps; stabilizes
// within #nodes sweeps unless a negative cycle exists.  Improvements below
// kBellmanEps are absorbed so that cycles whose cost is zero only up to
// rounding (e.g. against an LP-optimal phi) still terminate.
constexpr double kBellmanEps = 1e-13;

bool capped_bellman(const std::vector<double>& edge_cost, int d, std::vector<double>& psi,
                    long& sweeps) {
    const std::uint64_t nodes = edge_cost.size() / static_cast<std::uint64_t>(d);
    psi.assign(nodes, 0.0);
    std::vector<double> next(nodes);
    for (std::uint64_t sweep = 0; sweep <= nodes + 2; ++sweep) {
        bool changed = false;
        for (std::uint64_t t = 0; t < nodes; ++t) {
            double best = 0.0;
            for (std::uint64_t a = 0; a < static_cast<std::uint64_t>(d); ++a) {
                std::uint64_t v = a * nodes + t;
                best = std::min(best, psi[v / static_cast<std::uint64_t>(d)] + edge_cost[v]);
            }
            if (best < psi[t] - kBellmanEps) {
                next[t] = best;
                changed = true;
            } else {
                next[t] = psi[t];
            }
        }
        psi.swap(next);
        ++sweeps;
        if (!changed) return true;
    }
    return false;
}

void normalize_min_zero(std::vector<double>& v) {
    if (v.empty()) return;
    double mn = *std::min_element(v.begin(), v.end());
    for (double& x : v) x -= mn;
}

}  // namespace

RefineResult lax_oleinik_refine(const CostSpec& cost, const DualPair& seed, RefineMode mode,
                                int depth, const RefineOptions& opts) {
    cost.validate();
    if (depth < 2) throw ConfigError("lax_oleinik_refine: depth >= 2 required");
    const int d = cost.alphabet;
    const std::uint64_t edges = ipow(d, depth);
    const std::uint64_t nodes = ipow(d, depth - 1);
    const long cap = opts.max_iters > 0 ? opts.max_iters : 10 * static_cast<long>(edges);

    RefineResult out;
    out.dual.psi_depth = depth - 1;

    if (mode == RefineMode::p1) {
        const std::size_t ncells = seed.phi_keys.size();
        if (ncells == 0 || seed.phi.size() != ncells)
            throw DimensionError("lax_oleinik_refine: seed phi does not list x-cells");
        RowMatrixXd lo(static_cast<Eigen::Index>(ncells), static_cast<Eigen::Index>(edges));
        for (std::size_t u = 0; u < ncells; ++u)
            for (std::uint64_t v = 0; v < edges; ++v)
                lo(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) =
                    cost_bracket(cost, seed.phi_keys[u], Cylinder(word_from_index(v, depth, d))).lo;

        std::vector<double> phi = seed.phi;
        std::vector<double> psi(nodes, 0.0), edge_cost(edges);
        long rounds = 0;
        double residual = std::numeric_limits<double>::infinity();
        while (rounds < cap) {
            ++rounds;
            ++out.iterations;
            for (std::uint64_t v = 0; v < edges; ++v) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t u = 0; u < ncells; ++u)
                    best = std::min(best, lo(static_cast<Eigen::Index>(u),
                                             static_cast<Eigen::Index>(v)) -
                                              phi[u]);
                edge_cost[v] = best;
            }
            if (!capped_bellman(edge_cost, d, psi, out.iterations)) {
                out.residual = residual;
                out.converged = false;
                out.dual.phi_keys = seed.phi_keys;
                out.dual.phi = phi;
                out.dual.psi = psi;
                return out;
            }
            residual = 0;
            for (std::size_t u = 0; u < ncells; ++u) {
                double best = std::numeric_limits<double>::infinity();
                for (std::uint64_t v = 0; v < edges; ++v)
                    best = std::min(best, lo(static_cast<Eigen::Index>(u),
                                             static_cast<Eigen::Index>(v)) +
                                              psi[v / static_cast<std::uint64_t>(d)] -
                                              psi[v % nodes]);
                residual = std::max(residual, std::abs(best - phi[u]));
                phi[u] = best;
            }
            if (residual <= opts.residual_target) {
                out.converged = true;
                break;
            }
        }
        out.residual = residual;
        normalize_min_zero(psi);
        out.dual.phi_keys = seed.phi_keys;
        out.dual.phi = std::move(phi);
        out.dual.psi = std::move(psi);
        out.dual.alpha = 0;
        out.dual.p2_form = false;
        return out;
    }

    // P2: both potentials live on depth-(k-1) nodes; alpha is raised to the
    // minimum slack before each sweep and is nondecreasing across rounds.
    RowMatrixXd lo(static_cast<Eigen::Index>(edges), static_cast<Eigen::Index>(edges));
    for (std::uint64_t u = 0; u < edges; ++u) {
        Cell ucell = Cylinder(word_from_index(u, depth, d));
        for (std::uint64_t v = 0; v < edges; ++v)
            lo(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) =
                cost_bracket(cost, ucell, Cylinder(word_from_index(v, depth, d))).lo;
    }
    std::vector<double> phi(nodes, 0.0), psi(nodes, 0.0);
    if (seed.p2_form && seed.phi.size() == nodes) phi = seed.phi;
    if (seed.psi.size() == nodes) psi = seed.psi;

    auto dpot = [&](const std::vector<double>& f, std::uint64_t e) {
        return f[e % nodes] - f[e / static_cast<std::uint64_t>(d)];
    };

    double alpha = -std::numeric_limits<double>::infinity();
    std::vector<double> edge_cost(edges);
    long rounds = 0;
    double residual = std::numeric_limits<double>::infinity();
    while (rounds < cap) {
        ++rounds;
        ++out.iterations;
        double slack = std::numeric_limits<double>::infinity();
        for (std::uint64_t u = 0; u < edges; ++u) {
            double du = dpot(phi, u);
            for (std::uint64_t v = 0; v < edges; ++v)
                slack = std::min(slack, lo(static_cast<Eigen::Index>(u),
                                           static_cast<Eigen::Index>(v)) -
                                            du - dpot(psi, v));
        }
        double alpha_change = std::isfinite(alpha) ? std::abs(slack - alpha) : slack;
        alpha = slack;

        std::vector<double> prev_phi = phi, prev_psi = psi;
        for (std::uint64_t v = 0; v < edges; ++v) {
            double best = std::numeric_limits<double>::infinity();
            for (std::uint64_t u = 0; u < edges; ++u)
                best = std::min(best, lo(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) -
                                          alpha - dpot(phi, u));
            edge_cost[v] = best;
        }
        if (!capped_bellman(edge_cost, d, psi, out.iterations)) break;
        for (std::uint64_t u = 0; u < edges; ++u) {
            double best = std::numeric_limits<double>::infinity();
            for (std::uint64_t v = 0; v < edges; ++v)
                best = std::min(best, lo(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) -
                                          alpha - dpot(psi, v));
            edge_cost[u] = best;
        }
        if (!capped_bellman(edge_cost, d, phi, out.iterations)) break;

        residual = alpha_change;
        for (std::uint64_t t = 0; t < nodes; ++t)
            residual = std::max({residual, std::abs(phi[t] - prev_phi[t]),
                                 std::abs(psi[t] - prev_psi[t])});
        if (residual <= opts.residual_target) {
            out.converged = true;
            break;
        }
    }
    out.residual = residual;
    normalize_min_zero(phi);
    normalize_min_zero(psi);
    out.dual.phi_keys = all_cylinders(depth - 1, d);
    out.dual.phi = std::move(phi);
    out.dual.psi = std::move(psi);
    out.dual.alpha = alpha;
    out.dual.p2_form = true;
    return out;
}

Certificate certify_slackness(const TransportPlan& plan, const DualPair& dp, const CostSpec& cost,
                              double tol) {
    const int d = cost.alphabet;
    const int ky = dp.psi_depth + 1;
    const std::uint64_t nodes_y = ipow(d, ky - 1);

    Certificate cert;
    cert.max_admissibility_violation = std::max(0.0, admissibility_violation(dp, cost));

    std::map<std::string, std::size_t> xindex;
    for (std::size_t i = 0; i < dp.phi_keys.size(); ++i) xindex[cell_str(dp.phi_keys[i])] = i;

    double value = 0, comp = 0;
    double support_slack = 0;
    for (const auto& atom : plan.atoms) {
        const auto* ycyl = std::get_if<Cylinder>(&atom.y);
        if (ycyl == nullptr || ycyl->depth() != ky)
            throw DimensionError("certify_slackness: plan y-cell depth differs from dual pair");
        std::uint64_t v = ycyl->word.index();
        double lo = cost_bracket(cost, atom.x, *ycyl).lo;
        double term;
        if (!dp.p2_form) {
            auto it = xindex.find(cell_str(atom.x));
            if (it == xindex.end())
                throw DimensionError("certify_slackness: plan atom outside dual pair's x-cells");
            term = dp.phi[it->second] + dp.psi[v % nodes_y] - dp.psi[v / static_cast<std::uint64_t>(d)];
        } else {
            const int kx = p2_depth_x(dp);
            const std::uint64_t nodes_x = ipow(d, kx - 1);
            const auto* xcyl = std::get_if<Cylinder>(&atom.x);
            if (xcyl == nullptr || xcyl->depth() != kx)
                throw DimensionError("certify_slackness: plan x-cell depth differs from dual pair");
            std::uint64_t u = xcyl->word.index();
            term = dp.alpha + dp.phi[u % nodes_x] - dp.phi[u / static_cast<std::uint64_t>(d)] +
                   dp.psi[v % nodes_y] - dp.psi[v / static_cast<std::uint64_t>(d)];
        }
        kahan_add(value, comp, atom.mass * lo);
        if (atom.mass > tol) support_slack = std::max(support_slack, std::abs(term - lo));
    }
    cert.max_support_slack = support_slack;
    cert.duality_gap = std::abs(dual_objective(dp, plan) - value);
    bool ok = cert.max_admissibility_violation <= tol && cert.max_support_slack <= tol &&
              cert.duality_gap <= tol;
    cert.status = ok ? CertStatus::certified : CertStatus::gap_reported;
    return cert;
}

namespace {

Cell y_only_x_cell(const CostSpec& c) {
    if (const auto* s = std::get_if<SqDistToPoints>(&c.variant)) return Label{s->anchors[0].first};
    if (const auto* a = std::get_if<AffineCost>(&c.variant)) return y_only_x_cell(*a->inner);
    return Label{""};
}

}  // namespace

EoResult eo_min(const CostSpec& y_only_cost, int n_max, const EnumOptions& opts) {
    y_only_cost.validate();
    if (!cost_is_y_only(y_only_cost))
        throw ConfigError("eo_min: cost must depend on y only");
    if (n_max < 1) throw ConfigError("eo_min: n_max >= 1 required");
    Cell xcell = y_only_x_cell(y_only_cost);

    EoResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= n_max; ++n) {
        EnumOptions e = opts;
        e.mode = PeriodMode::exact;
        for (const PeriodicOrbit& o : enumerate_fix(n, y_only_cost.alphabet, e)) {
            double sum = 0;
            for (const Point& p : o.points()) sum += eval_point(y_only_cost, xcell, p);
            double avg = sum / o.period();
            if (avg < best.value - 1e-15) {
                best.value = avg;
                best.orbit = o;
            }
        }
    }
    return best;
}

double birkhoff_deficiency_scan(const CostSpec& cost, double alpha, int horizon,
                                const std::vector<std::pair<Point, Point>>& samples) {
    cost.validate();
    if (horizon < 1) throw ConfigError("birkhoff_deficiency_scan: horizon >= 1 required");
    if (samples.empty()) throw ConfigError("birkhoff_deficiency_scan: no sample pairs");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [x0, y0] : samples) {
        Point px = x0, py = y0;
        double sum = 0;
        for (int n = 1; n <= horizon; ++n) {
            sum += eval_point(cost, Cell{px}, py) - alpha;
            best = std::min(best, sum);
            px = px.shifted();
            py = py.shifted();
        }
    }
    return best;
}

}  // namespace et
