#pragma once

// Finite words, cylinders and periodic orbits of the one-sided full shift on
// {0,..,d-1}^N, together with the lambda^k ultrametric.  Points are handled
// in their eventually-periodic form pre.rep^inf so every evaluation point of
// a cost function has a finite description.

#include <compare>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "et/errors.hpp"

namespace et {

using Symbol = std::uint8_t;

// d^k with an overflow check; throws ResourceError past 2^62.
std::uint64_t ipow(int base, int exp);

struct Word {
    std::vector<Symbol> syms;
    int alphabet = 2;

    Word() = default;
    Word(std::vector<Symbol> s, int d);

    // Parses a digit string ("0101"); alphabet d <= 10.
    static Word parse(const std::string& digits, int d);

    int size() const { return static_cast<int>(syms.size()); }
    bool empty() const { return syms.empty(); }
    Symbol operator[](int i) const { return syms[static_cast<std::size_t>(i)]; }

    Word prefix(int len) const;       // first len symbols
    Word suffix_from(int start) const;
    Word rotated(int j) const;        // left rotation by j
    Word repeated(int times) const;
    Word concat(const Word& tail) const;
    Word appended(Symbol a) const;

    std::string str() const;
    // Base-d integer value, first symbol most significant; lexicographic order
    // on equal-length words coincides with numeric order of indices.
    std::uint64_t index() const;

    friend bool operator==(const Word& a, const Word& b) { return a.syms == b.syms; }
    friend std::strong_ordering operator<=>(const Word& a, const Word& b) {
        return a.syms <=> b.syms;
    }
};

Word word_from_index(std::uint64_t idx, int len, int d);

// The set of points sharing a fixed prefix; depth = prefix length.
struct Cylinder {
    Word word;

    Cylinder() = default;
    explicit Cylinder(Word w) : word(std::move(w)) {}
    int depth() const { return word.size(); }

    friend bool operator==(const Cylinder& a, const Cylinder& b) { return a.word == b.word; }
    friend std::strong_ordering operator<=>(const Cylinder& a, const Cylinder& b) {
        return a.word <=> b.word;
    }
};

struct Point;

// Orbit of a sigma^p-fixed point, keyed by the lexicographically least
// rotation of its aperiodic root.
struct PeriodicOrbit {
    Word primitive;

    int period() const { return primitive.size(); }
    std::vector<Point> points() const;  // the p rotations, in rotation order

    friend bool operator==(const PeriodicOrbit& a, const PeriodicOrbit& b) {
        return a.primitive == b.primitive;
    }
    friend std::strong_ordering operator<=>(const PeriodicOrbit& a, const PeriodicOrbit& b) {
        return a.primitive <=> b.primitive;
    }
};

// Eventually periodic point pre.rep^inf, serialized as "pre|rep"
// (e.g. "|01" for (01)^inf, "0|1" for 0111...).
struct Point {
    Word pre;   // may be empty
    Word rep;   // nonempty

    int alphabet() const { return rep.alphabet; }
    Symbol at(std::int64_t i) const;
    Word first(int k) const;        // first k symbols as a Word
    Point shifted() const;          // sigma(x)

    std::string str() const;
    static Point parse(const std::string& text, int d);

    // Equality as infinite sequences, independent of representation.
    friend bool operator==(const Point& a, const Point& b);
};

struct MetricSpec {
    double lambda = 0.5;  // d(x,y) = lambda^(first disagreement index)
};

// Orbit of w^inf: canonical form is the least rotation of the primitive root.
PeriodicOrbit canonical_orbit(const Word& w);

enum class PeriodMode { dividing, exact };

struct EnumOptions {
    PeriodMode mode = PeriodMode::dividing;
    std::uint64_t word_cap = std::uint64_t{1} << 22;  // cap on d^n
    bool necklace_fast_path = false;                  // Duval generation
};

// All distinct orbits of points fixed by sigma^n (period dividing n), in
// lexicographic order of primitive words.  Sum of returned periods is d^n.
std::vector<PeriodicOrbit> enumerate_fix(int n, int d, const EnumOptions& opts = {});

double metric_distance(const Point& x, const Point& y, const MetricSpec& metric = {});

// de Bruijn frame of a cylinder: ([w1..wk-1], [w2..wk]); sigma maps [v] into
// the suffix cylinder.
std::pair<Cylinder, Cylinder> shift_frame(const Cylinder& v);

}  // namespace et
