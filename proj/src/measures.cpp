#include "et/measures.hpp"

#include <cmath>

namespace et {

std::string cell_str(const Cell& c) {
    if (const auto* l = std::get_if<Label>(&c)) return l->name;
    if (const auto* p = std::get_if<Point>(&c)) return p->str();
    return std::get<Cylinder>(c).word.str();
}

bool cell_equal(const Cell& a, const Cell& b) {
    if (a.index() != b.index()) return false;
    if (const auto* l = std::get_if<Label>(&a)) return *l == std::get<Label>(b);
    if (const auto* p = std::get_if<Point>(&a)) return *p == std::get<Point>(b);
    return std::get<Cylinder>(a) == std::get<Cylinder>(b);
}

double FiniteMeasure::total() const {
    double s = 0;
    for (const auto& [cell, mass] : atoms) s += mass;
    return s;
}

void FiniteMeasure::validate(double tol) const {
    for (const auto& [cell, mass] : atoms) {
        if (std::holds_alternative<Cylinder>(cell))
            throw DimensionError("FiniteMeasure: atoms must be labels or points");
        if (!(mass >= 0)) throw ConfigError("FiniteMeasure: negative mass on " + cell_str(cell));
    }
    if (std::abs(total() - 1.0) > tol)
        throw ConfigError("FiniteMeasure: masses sum to " + std::to_string(total()) + ", not 1");
}

double CylinderMeasure::total() const {
    double s = 0;
    for (double m : mass) s += m;
    return s;
}

void CylinderMeasure::validate(double tol) const {
    if (depth < 1) throw DimensionError("CylinderMeasure: depth >= 1 required");
    if (mass.size() != ipow(alphabet, depth))
        throw DimensionError("CylinderMeasure: mass vector size != d^depth");
    for (double m : mass)
        if (!(m >= 0)) throw ConfigError("CylinderMeasure: negative mass");
    if (std::abs(total() - 1.0) > tol)
        throw ConfigError("CylinderMeasure: masses sum to " + std::to_string(total()) + ", not 1");
}

std::vector<std::pair<std::uint64_t, double>> StationarityConstraints::row(
    std::uint64_t node) const {
    const std::uint64_t d = static_cast<std::uint64_t>(alphabet);
    const std::uint64_t shift = ipow(alphabet, depth - 1);
    std::vector<std::pair<std::uint64_t, double>> entries;
    entries.reserve(2 * d);
    for (std::uint64_t a = 0; a < d; ++a) entries.emplace_back(a * shift + node, +1.0);  // [a w]
    for (std::uint64_t a = 0; a < d; ++a) entries.emplace_back(node * d + a, -1.0);      // [w a]
    return entries;
}

FiniteMeasure orbit_measure(const PeriodicOrbit& o) {
    FiniteMeasure m;
    const double w = 1.0 / o.period();
    for (Point& p : o.points()) m.atoms.emplace_back(Cell{std::move(p)}, w);
    return m;
}

CylinderMeasure project_to_depth(const FiniteMeasure& m, int k, int alphabet) {
    if (k < 1) throw DimensionError("project_to_depth: k >= 1 required");
    CylinderMeasure out{k, alphabet, std::vector<double>(ipow(alphabet, k), 0.0)};
    for (const auto& [cell, mass] : m.atoms) {
        const auto* p = std::get_if<Point>(&cell);
        if (p == nullptr)
            throw DimensionError("project_to_depth: finite measure atom '" + cell_str(cell) +
                                 "' has no location on the shift space");
        out.mass[p->first(k).index()] += mass;
    }
    return out;
}

CylinderMeasure project_to_depth(const CylinderMeasure& m, int k) {
    if (k < 1 || k > m.depth) throw DimensionError("project_to_depth: need 1 <= k <= depth");
    const std::uint64_t block = ipow(m.alphabet, m.depth - k);
    CylinderMeasure out{k, m.alphabet, std::vector<double>(ipow(m.alphabet, k), 0.0)};
    for (std::uint64_t idx = 0; idx < m.mass.size(); ++idx) out.mass[idx / block] += m.mass[idx];
    return out;
}

double stationarity_residual(const CylinderMeasure& m) {
    if (m.depth < 2) throw DimensionError("stationarity_residual: depth >= 2 required");
    StationarityConstraints cons{m.depth, m.alphabet};
    double worst = 0;
    for (std::uint64_t w = 0; w < cons.rows(); ++w) {
        double s = 0;
        for (const auto& [idx, coeff] : cons.row(w)) s += coeff * m.mass[idx];
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

double markov_extension_mass(const CylinderMeasure& m, const Word& w, double stationarity_tol) {
    if (w.size() < m.depth)
        throw DimensionError("markov_extension_mass: word shorter than measure depth");
    if (w.alphabet != m.alphabet) throw DimensionError("markov_extension_mass: alphabet mismatch");
    if (stationarity_residual(m) > stationarity_tol)
        throw NumericalError("markov_extension_mass: measure is not stationary within tolerance");

    const int k = m.depth;
    const std::uint64_t d = static_cast<std::uint64_t>(m.alphabet);
    double mass = m.mass[w.prefix(k).index()];
    // State before symbol i is w[i-k+1 .. i-1]; the transition multiplies by
    // m([state a]) / sum_b m([state b]).
    std::uint64_t window = w.prefix(k).index();  // last k symbols seen
    const std::uint64_t mod = ipow(m.alphabet, k - 1);
    for (int i = k; i < w.size(); ++i) {
        if (mass == 0.0) return 0.0;
        std::uint64_t state = window % mod;  // drop the oldest symbol
        double den = 0;
        for (std::uint64_t b = 0; b < d; ++b) den += m.mass[state * d + b];
        if (den <= 0.0) return 0.0;
        std::uint64_t next = state * d + w[i];
        mass *= m.mass[next] / den;
        window = next;
    }
    return mass;
}

CylinderMeasure markov_extend(const CylinderMeasure& m, int new_depth, double stationarity_tol) {
    if (new_depth < m.depth) throw DimensionError("markov_extend: new depth < measure depth");
    if (stationarity_residual(m) > stationarity_tol)
        throw NumericalError("markov_extend: measure is not stationary within tolerance");

    const std::uint64_t d = static_cast<std::uint64_t>(m.alphabet);
    const std::uint64_t states = ipow(m.alphabet, m.depth - 1);
    CylinderMeasure cur = m;
    while (cur.depth < new_depth) {
        CylinderMeasure next{cur.depth + 1, cur.alphabet,
                             std::vector<double>(cur.mass.size() * d, 0.0)};
        const std::uint64_t mod = states;  // conditioning state length is m.depth-1
        for (std::uint64_t idx = 0; idx < cur.mass.size(); ++idx) {
            if (cur.mass[idx] == 0.0) continue;
            std::uint64_t state = idx % mod;  // last (m.depth-1) symbols
            double den = 0;
            for (std::uint64_t b = 0; b < d; ++b) den += m.mass[state * d + b];
            if (den <= 0.0) continue;
            for (std::uint64_t b = 0; b < d; ++b)
                next.mass[idx * d + b] = cur.mass[idx] * (m.mass[state * d + b] / den);
        }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace et
