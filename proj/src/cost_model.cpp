#include "et/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace et {

namespace {

// First index where the cell word disagrees with the point, or the cell depth
// when the point lies in the cylinder's closure up to that depth.
int agree_prefix(const Word& cell, const Point& p) {
    for (int i = 0; i < cell.size(); ++i)
        if (cell[i] != p.at(i)) return i;
    return cell.size();
}

int agree_prefix(const Word& a, const Word& b) {
    int m = std::min(a.size(), b.size());
    for (int i = 0; i < m; ++i)
        if (a[i] != b[i]) return i;
    return m;
}

// Enclosure of d(x, anchor)^2 for x ranging over a cell (Point = exact,
// Cylinder = its points).  Labels carry no location.
CostBracket sq_dist_bracket(const Cell& u, const Point& anchor, const MetricSpec& metric) {
    if (const auto* p = std::get_if<Point>(&u)) {
        double dd = metric_distance(*p, anchor, metric);
        return {dd * dd, dd * dd};
    }
    const auto* cyl = std::get_if<Cylinder>(&u);
    if (cyl == nullptr) throw DimensionError("cost bracket: label cell has no metric location");
    int j = agree_prefix(cyl->word, anchor);
    if (j < cyl->depth()) {
        double dd = std::pow(metric.lambda, j);
        return {dd * dd, dd * dd};
    }
    double dd = std::pow(metric.lambda, cyl->depth());
    return {0.0, dd * dd};  // anchor lies in the cell
}

std::uint64_t table_row(const TableCost& t, const Cell& u, int d) {
    if (t.kx == 0) return 0;
    if (const auto* p = std::get_if<Point>(&u)) return p->first(t.kx).index();
    const auto* cyl = std::get_if<Cylinder>(&u);
    if (cyl == nullptr)
        throw DimensionError("table cost: x cell must be a cylinder or point when kx > 0");
    if (cyl->depth() < t.kx) throw DimensionError("table cost: x cell shallower than table depth");
    (void)d;
    return cyl->word.prefix(t.kx).index();
}

}  // namespace

void CostSpec::validate() const {
    if (alphabet < 2) throw ConfigError("cost: alphabet size >= 2 required");
    if (!(metric.lambda > 0 && metric.lambda < 1))
        throw ConfigError("cost: metric base must lie in (0,1)");
    if (const auto* t = std::get_if<TableCost>(&variant)) {
        if (t->kx < 0 || t->ky < 1) throw ConfigError("table cost: kx >= 0 and ky >= 1 required");
        if (t->values.size() != ipow(alphabet, t->kx) * ipow(alphabet, t->ky))
            throw ConfigError("table cost: values size != d^kx * d^ky");
        for (double v : t->values)
            if (!std::isfinite(v)) throw ConfigError("table cost: non-finite entry");
    } else if (const auto* s = std::get_if<SqDistToPoints>(&variant)) {
        if (s->anchors.empty()) throw ConfigError("sq_dist cost: at least one anchor required");
    } else if (const auto* m = std::get_if<MinSumSq>(&variant)) {
        if (m->contacts.empty()) throw ConfigError("min_sum_sq cost: contact set must be nonempty");
    } else if (const auto* a = std::get_if<AffineCost>(&variant)) {
        if (a->scale == 0) throw ConfigError("affine cost: scale must be nonzero");
        if (!a->inner) throw ConfigError("affine cost: missing inner cost");
        a->inner->validate();
    }
}

double eval_point(const CostSpec& c, const Cell& x, const Point& y) {
    if (const auto* t = std::get_if<TableCost>(&c.variant)) {
        std::uint64_t row = table_row(*t, x, c.alphabet);
        std::uint64_t col = y.first(t->ky).index();
        return t->values[row * ipow(c.alphabet, t->ky) + col];
    }
    if (const auto* s = std::get_if<SqDistToPoints>(&c.variant)) {
        const auto* l = std::get_if<Label>(&x);
        if (l == nullptr) throw DimensionError("sq_dist cost: x must be a listed label");
        for (const auto& [name, anchor] : s->anchors) {
            if (name == l->name) {
                double dd = metric_distance(y, anchor, c.metric);
                return dd * dd;
            }
        }
        throw ConfigError("sq_dist cost: unknown x-label '" + l->name + "'");
    }
    if (const auto* m = std::get_if<MinSumSq>(&c.variant)) {
        const auto* p = std::get_if<Point>(&x);
        if (p == nullptr) throw DimensionError("min_sum_sq cost: x must be a point");
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [a, b] : m->contacts) {
            double dx = metric_distance(*p, a, c.metric);
            double dy = metric_distance(y, b, c.metric);
            best = std::min(best, dx * dx + dy * dy);
        }
        return best;
    }
    if (std::holds_alternative<PairSqDist>(c.variant)) {
        const auto* p = std::get_if<Point>(&x);
        if (p == nullptr) throw DimensionError("pair_sq_dist cost: x must be a point");
        double dd = metric_distance(*p, y, c.metric);
        return dd * dd;
    }
    const auto& a = std::get<AffineCost>(c.variant);
    return a.scale * eval_point(*a.inner, x, y) + a.offset;
}

CostBracket cost_bracket(const CostSpec& c, const Cell& u, const Cylinder& v) {
    if (const auto* t = std::get_if<TableCost>(&c.variant)) {
        if (v.depth() < t->ky) throw DimensionError("table cost: y cell shallower than table depth");
        std::uint64_t row = table_row(*t, u, c.alphabet);
        std::uint64_t col = v.word.prefix(t->ky).index();
        double val = t->values[row * ipow(c.alphabet, t->ky) + col];
        return {val, val};
    }
    if (const auto* s = std::get_if<SqDistToPoints>(&c.variant)) {
        const auto* l = std::get_if<Label>(&u);
        if (l == nullptr) throw DimensionError("sq_dist cost: x cell must be a listed label");
        for (const auto& [name, anchor] : s->anchors)
            if (name == l->name) return sq_dist_bracket(Cell{v}, anchor, c.metric);
        throw ConfigError("sq_dist cost: unknown x-label '" + l->name + "'");
    }
    if (const auto* m = std::get_if<MinSumSq>(&c.variant)) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (const auto& [a, b] : m->contacts) {
            CostBracket bx = sq_dist_bracket(u, a, c.metric);
            CostBracket by = sq_dist_bracket(Cell{v}, b, c.metric);
            lo = std::min(lo, bx.lo + by.lo);
            hi = std::min(hi, bx.hi + by.hi);
        }
        return {lo, hi};
    }
    if (std::holds_alternative<PairSqDist>(c.variant)) {
        if (const auto* p = std::get_if<Point>(&u)) {
            int j = agree_prefix(v.word, *p);
            if (j < v.depth()) {
                double dd = std::pow(c.metric.lambda, j);
                return {dd * dd, dd * dd};
            }
            double dd = std::pow(c.metric.lambda, v.depth());
            return {0.0, dd * dd};
        }
        const auto* cyl = std::get_if<Cylinder>(&u);
        if (cyl == nullptr) throw DimensionError("pair_sq_dist cost: x cell has no metric location");
        int m = std::min(cyl->depth(), v.depth());
        int j = agree_prefix(cyl->word, v.word);
        if (j < m) {
            double dd = std::pow(c.metric.lambda, j);
            return {dd * dd, dd * dd};
        }
        double dd = std::pow(c.metric.lambda, m);
        return {0.0, dd * dd};
    }
    const auto& a = std::get<AffineCost>(c.variant);
    CostBracket inner = cost_bracket(*a.inner, u, v);
    double p = a.scale * inner.lo + a.offset;
    double q = a.scale * inner.hi + a.offset;
    return {std::min(p, q), std::max(p, q)};
}

double lipschitz_bound(const CostSpec& c) {
    if (const auto* t = std::get_if<TableCost>(&c.variant)) {
        auto [mn, mx] = std::minmax_element(t->values.begin(), t->values.end());
        if (t->values.empty() || *mn == *mx) return 0.0;
        return (*mx - *mn) / std::pow(c.metric.lambda, std::max(t->kx, t->ky));
    }
    if (const auto* a = std::get_if<AffineCost>(&c.variant))
        return std::abs(a->scale) * lipschitz_bound(*a->inner);
    // d(.,a)^2 terms: |d^2 - d'^2| = (d+d')|d-d'| <= 2 diam * dist, diam = 1;
    // minima of 2-Lipschitz families stay 2-Lipschitz.
    return 2.0;
}

bool cost_is_y_only(const CostSpec& c) {
    if (const auto* t = std::get_if<TableCost>(&c.variant)) return t->kx == 0;
    if (const auto* s = std::get_if<SqDistToPoints>(&c.variant)) return s->anchors.size() == 1;
    if (const auto* a = std::get_if<AffineCost>(&c.variant)) return cost_is_y_only(*a->inner);
    return false;
}

CostSpec affine_cost(double scale, double offset, CostSpec inner) {
    CostSpec out;
    out.alphabet = inner.alphabet;
    out.metric = inner.metric;
    out.variant = AffineCost{scale, offset, std::make_shared<const CostSpec>(std::move(inner))};
    return out;
}

}  // namespace et
