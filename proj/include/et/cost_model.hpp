#pragma once

// Declarative cost functions c(x,y) with exact point evaluation, analytic
// interval enclosures on cylinder pairs, and Lipschitz bounds.

#include <memory>
#include <variant>
#include <vector>

#include "et/measures.hpp"

namespace et {

struct CostBracket {
    double lo = 0;
    double hi = 0;
};

struct CostSpec;

// Locally constant cost given by a table over depth-(kx, ky) cylinder pairs;
// kx == 0 collapses the x side (y-only potentials).
struct TableCost {
    int kx = 0;
    int ky = 1;
    std::vector<double> values;  // row-major, d^kx rows by d^ky columns
};

// Finite X = {labels}; c(x_i, y) = d(y, anchor_i)^2.
struct SqDistToPoints {
    std::vector<std::pair<std::string, Point>> anchors;
};

// c(x,y) = min over the contact set Z of [ d(x,a)^2 + d(y,b)^2 ];
// vanishes exactly on Z.
struct MinSumSq {
    std::vector<std::pair<Point, Point>> contacts;
};

// c(x,y) = d(x,y)^2.
struct PairSqDist {};

// scale * inner + offset; scale != 0.
struct AffineCost {
    double scale = 1;
    double offset = 0;
    std::shared_ptr<const CostSpec> inner;
};

struct CostSpec {
    std::variant<TableCost, SqDistToPoints, MinSumSq, PairSqDist, AffineCost> variant;
    int alphabet = 2;
    MetricSpec metric{};

    void validate() const;
};

// Exact value; x may be a Label (table with kx=0, sq_dist variant) or a Point.
double eval_point(const CostSpec& c, const Cell& x, const Point& y);

// Enclosure of c over [u] x [v]; exact (lo == hi) wherever the cost is
// constant on the cell pair.
CostBracket cost_bracket(const CostSpec& c, const Cell& u, const Cylinder& v);

// L with |c(x,y)-c(x',y')| <= L (d(x,x') + d(y,y')); conservative.
double lipschitz_bound(const CostSpec& c);

// True when c depends on y only (single-anchor sq_dist, kx=0 table, or an
// affine wrapper of those).
bool cost_is_y_only(const CostSpec& c);

CostSpec affine_cost(double scale, double offset, CostSpec inner);

}  // namespace et
