#include "et/zeta.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

namespace et {

namespace {

struct Kahan {
    double sum = 0, comp = 0;
    void add(double term) {
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

void check_positive(const CostSpec& cost, const std::vector<Cell>& x_cells, int report_depth) {
    const std::uint64_t ny = ipow(cost.alphabet, report_depth);
    for (const Cell& u : x_cells) {
        for (std::uint64_t v = 0; v < ny; ++v) {
            Cylinder vc(word_from_index(v, report_depth, cost.alphabet));
            if (cost_bracket(cost, u, vc).lo <= 0)
                throw ConfigError("zeta: cost is not strictly positive at (" + cell_str(u) + ", " +
                                  vc.word.str() + ")");
        }
    }
}

// Normalized Gibbs log-weights of beta * n * value, via a single max shift.
std::vector<double> gibbs_log_weights(const std::vector<double>& values, double beta, int n) {
    std::vector<double> lw(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) lw[i] = beta * n * values[i];
    double shift = *std::max_element(lw.begin(), lw.end());
    Kahan z;
    for (double& l : lw) {
        l -= shift;
        z.add(std::exp(l));
    }
    double logz = std::log(z.sum);
    for (double& l : lw) l -= logz;
    return lw;
}

struct Aggregator {
    std::map<std::pair<std::string, std::string>, std::pair<PlanAtom, Kahan>> buckets;

    void add(const Cell& x, const Cell& y, double mass) {
        auto key = std::make_pair(cell_str(x), cell_str(y));
        auto it = buckets.find(key);
        if (it == buckets.end())
            it = buckets.emplace(key, std::make_pair(PlanAtom{x, y, 0.0}, Kahan{})).first;
        it->second.second.add(mass);
    }

    TransportPlan finish(double value) const {
        TransportPlan plan;
        plan.value = value;
        for (const auto& [key, entry] : buckets) {
            PlanAtom atom = entry.first;
            atom.mass = entry.second.sum;
            plan.atoms.push_back(std::move(atom));
        }
        return plan;
    }
};

std::vector<Cell> all_depth_cells(const CostSpec& cost, int depth) {
    std::vector<Cell> cells;
    std::uint64_t n = ipow(cost.alphabet, depth);
    cells.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        cells.emplace_back(Cylinder(word_from_index(i, depth, cost.alphabet)));
    return cells;
}

CylinderMeasure side_marginal(const TransportPlan& plan, bool x_side, int depth, int d) {
    CylinderMeasure m{depth, d, std::vector<double>(ipow(d, depth), 0.0)};
    for (const auto& atom : plan.atoms) {
        const Cell& c = x_side ? atom.x : atom.y;
        const auto* cyl = std::get_if<Cylinder>(&c);
        if (cyl == nullptr || cyl->depth() != depth)
            throw DimensionError("zeta: marginal cell depth mismatch");
        m.mass[cyl->word.index()] += atom.mass;
    }
    return m;
}

}  // namespace

ZetaResult zeta_p1(const FiniteMeasure& mu, const CostSpec& cost, const ZetaParams& params,
                   int report_depth) {
    cost.validate();
    mu.validate();
    if (report_depth < 2) throw ConfigError("zeta: report depth >= 2 required");
    std::vector<Cell> x_cells;
    for (const auto& [cell, mass] : mu.atoms) x_cells.push_back(cell);
    check_positive(cost, x_cells, report_depth);

    EnumOptions eopts{params.period_mode, params.word_cap, false};
    std::vector<PeriodicOrbit> orbits = enumerate_fix(params.n, cost.alphabet, eopts);

    std::vector<double> values(orbits.size());
    std::vector<TransportPlan> plans(orbits.size());
    for (std::size_t i = 0; i < orbits.size(); ++i) {
        FiniteMeasure nu = orbit_measure(orbits[i]);
        Eigen::MatrixXd C(mu.atoms.size(), nu.atoms.size());
        for (std::size_t a = 0; a < mu.atoms.size(); ++a)
            for (std::size_t b = 0; b < nu.atoms.size(); ++b)
                C(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    eval_point(cost, mu.atoms[a].first, std::get<Point>(nu.atoms[b].first));
        plans[i] = classical_ot(mu, nu, C, Sense::maximize);
        values[i] = plans[i].value;
    }

    std::vector<double> lw = gibbs_log_weights(values, params.beta, params.n);

    ZetaResult res;
    Kahan value;
    Aggregator agg;
    for (std::size_t i = 0; i < orbits.size(); ++i) {
        double w = std::exp(lw[i]);
        value.add(w * values[i]);
        for (const auto& atom : plans[i].atoms) {
            const Point& y = std::get<Point>(atom.y);
            agg.add(atom.x, Cell{Cylinder(y.first(report_depth))}, w * atom.mass);
        }
        res.table.push_back({std::nullopt, orbits[i], values[i], lw[i]});
    }
    res.value = value.sum;
    res.measure = agg.finish(res.value);

    std::map<std::string, Kahan> xmass;
    for (const auto& atom : res.measure.atoms) xmass[cell_str(atom.x)].add(atom.mass);
    double xerr = 0;
    for (const auto& [cell, mass] : mu.atoms)
        xerr = std::max(xerr, std::abs(xmass[cell_str(cell)].sum - mass));
    res.x_marginal_error = xerr;

    CylinderMeasure ym{report_depth, cost.alphabet,
                       std::vector<double>(ipow(cost.alphabet, report_depth), 0.0)};
    for (const auto& atom : res.measure.atoms)
        ym.mass[std::get<Cylinder>(atom.y).word.index()] += atom.mass;
    res.y_stationarity_residual = stationarity_residual(ym);
    return res;
}

ZetaResult zeta_p2(const CostSpec& cost, const ZetaParams& params, int report_depth, int workers) {
    cost.validate();
    if (report_depth < 2) throw ConfigError("zeta: report depth >= 2 required");
    check_positive(cost, all_depth_cells(cost, report_depth), report_depth);

    EnumOptions eopts{params.period_mode, params.word_cap, false};
    std::vector<PeriodicOrbit> orbits = enumerate_fix(params.n, cost.alphabet, eopts);
    const std::size_t count = orbits.size() * orbits.size();

    std::vector<double> values(count);
    std::vector<TransportPlan> plans(count);
    auto solve_pair = [&](std::size_t flat) {
        std::size_t i = flat / orbits.size();  // x orbit
        std::size_t j = flat % orbits.size();  // y orbit
        FiniteMeasure m = orbit_measure(orbits[i]);
        FiniteMeasure nu = orbit_measure(orbits[j]);
        Eigen::MatrixXd C(m.atoms.size(), nu.atoms.size());
        for (std::size_t a = 0; a < m.atoms.size(); ++a)
            for (std::size_t b = 0; b < nu.atoms.size(); ++b)
                C(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    eval_point(cost, m.atoms[a].first, std::get<Point>(nu.atoms[b].first));
        plans[flat] = classical_ot(m, nu, C, Sense::maximize);
        values[flat] = plans[flat].value;
    };
    if (workers <= 1) {
        for (std::size_t f = 0; f < count; ++f) solve_pair(f);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t f = next.fetch_add(1);
                    if (f >= count) return;
                    solve_pair(f);
                }
            });
        for (auto& th : pool) th.join();
    }

    std::vector<double> lw = gibbs_log_weights(values, params.beta, params.n);

    ZetaResult res;
    Kahan value;
    Aggregator agg;
    for (std::size_t f = 0; f < count; ++f) {
        double w = std::exp(lw[f]);
        value.add(w * values[f]);
        for (const auto& atom : plans[f].atoms) {
            const Point& x = std::get<Point>(atom.x);
            const Point& y = std::get<Point>(atom.y);
            agg.add(Cell{Cylinder(x.first(report_depth))}, Cell{Cylinder(y.first(report_depth))},
                    w * atom.mass);
        }
        res.table.push_back(
            {orbits[f / orbits.size()], orbits[f % orbits.size()], values[f], lw[f]});
    }
    res.value = value.sum;
    res.measure = agg.finish(res.value);
    res.x_stationarity_residual =
        stationarity_residual(side_marginal(res.measure, true, report_depth, cost.alphabet));
    res.y_stationarity_residual =
        stationarity_residual(side_marginal(res.measure, false, report_depth, cost.alphabet));
    return res;
}

std::vector<SweepRow> zeta_sweep(const ZetaProblem& problem, const std::vector<double>& betas,
                                 const std::vector<int>& ns, int report_depth,
                                 const ZetaParams& base, int workers) {
    if (betas.empty() || ns.empty()) throw ConfigError("zeta_sweep: empty beta or n list");

    // Reference enclosure of the maximal value: minimize the negated cost and
    // flip the bracket.
    CostSpec neg = affine_cost(-1.0, 0.0, problem.cost);
    double max_lo, max_hi;
    if (problem.mu.has_value()) {
        P1Instance inst{*problem.mu, neg, report_depth};
        SolveResult sr = solve_p1(inst);
        max_lo = -sr.bracket.hi;
        max_hi = -sr.bracket.lo;
    } else {
        P2Instance inst{neg, report_depth, report_depth};
        SolveResult sr = solve_p2(inst);
        max_lo = -sr.bracket.hi;
        max_hi = -sr.bracket.lo;
    }

    std::vector<SweepRow> rows;
    for (int n : ns) {
        for (double beta : betas) {
            ZetaParams params = base;
            params.beta = beta;
            params.n = n;
            SweepRow row;
            row.beta = beta;
            row.n = n;
            if (problem.mu.has_value()) {
                ZetaResult zr = zeta_p1(*problem.mu, problem.cost, params, report_depth);
                row.value = zr.value;
                row.res_x = zr.x_marginal_error;
                row.res_y = zr.y_stationarity_residual;
            } else {
                ZetaResult zr = zeta_p2(problem.cost, params, report_depth, workers);
                row.value = zr.value;
                row.res_x = zr.x_stationarity_residual;
                row.res_y = zr.y_stationarity_residual;
            }
            row.gap = std::max({0.0, max_lo - row.value, row.value - max_hi});
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace et
