#pragma once

// Probability measures on cylinder partitions and on finite point sets, the
// stationary (flow-balance) constraint system, and the Markov extension of a
// stationary depth-k measure to deeper cylinders.

#include <string>
#include <variant>
#include <vector>

#include "et/shift_space.hpp"

namespace et {

// Abstract x-side atom for problems whose first factor is a finite set.
struct Label {
    std::string name;

    friend bool operator==(const Label&, const Label&) = default;
    friend auto operator<=>(const Label&, const Label&) = default;
};

// A cell of a transport plan: a finite-X label, an exact point, or a cylinder.
using Cell = std::variant<Label, Point, Cylinder>;

std::string cell_str(const Cell& c);
bool cell_equal(const Cell& a, const Cell& b);

struct FiniteMeasure {
    std::vector<std::pair<Cell, double>> atoms;  // Label or Point cells

    double total() const;
    void validate(double tol = 1e-12) const;  // masses >= 0, total == 1
};

struct CylinderMeasure {
    int depth = 1;
    int alphabet = 2;
    std::vector<double> mass;  // size d^depth, indexed by Word::index()

    double total() const;
    void validate(double tol = 1e-12) const;
    std::uint64_t cells() const { return mass.size(); }
};

// Flow balance on the depth-(k-1) de Bruijn graph: for every word w of
// length k-1,  sum_a m([a w]) - sum_a m([w a]) = 0.  These are exactly the
// depth-k marginals of shift-invariant measures.
struct StationarityConstraints {
    int depth = 2;  // k
    int alphabet = 2;

    std::uint64_t rows() const { return ipow(alphabet, depth - 1); }
    // Sparse row for node w: (cylinder index, coefficient) pairs; a cylinder
    // that is both an in- and an out-edge of w contributes net 0.
    std::vector<std::pair<std::uint64_t, double>> row(std::uint64_t node) const;
};

FiniteMeasure orbit_measure(const PeriodicOrbit& o);

CylinderMeasure project_to_depth(const FiniteMeasure& m, int k, int alphabet);
CylinderMeasure project_to_depth(const CylinderMeasure& m, int k);

// Max flow-balance violation; 0 iff m lies in the stationary polytope.
double stationarity_residual(const CylinderMeasure& m);

// Mass of [w] under the (k-1)-step Markov extension of a stationary depth-k
// measure; dead branches (zero conditioning mass) get mass 0.
double markov_extension_mass(const CylinderMeasure& m, const Word& w,
                             double stationarity_tol = 1e-9);

CylinderMeasure markov_extend(const CylinderMeasure& m, int new_depth,
                              double stationarity_tol = 1e-9);

}  // namespace et
