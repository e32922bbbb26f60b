#include "et/shift_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace et {

std::uint64_t ipow(int base, int exp) {
    if (base < 1 || exp < 0) throw DimensionError("ipow: base >= 1 and exp >= 0 required");
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) {
        if (r > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(base))
            throw ResourceError("ipow: " + std::to_string(base) + "^" + std::to_string(exp) +
                                " exceeds 2^62");
        r *= static_cast<std::uint64_t>(base);
    }
    return r;
}

Word::Word(std::vector<Symbol> s, int d) : syms(std::move(s)), alphabet(d) {
    if (d < 1) throw DimensionError("Word: alphabet size must be positive");
    for (Symbol a : syms)
        if (a >= d) throw DimensionError("Word: symbol out of range for alphabet " + std::to_string(d));
}

Word Word::parse(const std::string& digits, int d) {
    if (d > 10) throw ConfigError("Word::parse: digit serialization requires alphabet <= 10");
    std::vector<Symbol> s;
    s.reserve(digits.size());
    for (char c : digits) {
        if (c < '0' || c > '9') throw ConfigError(std::string("Word::parse: invalid digit '") + c + "'");
        s.push_back(static_cast<Symbol>(c - '0'));
    }
    return Word(std::move(s), d);
}

Word Word::prefix(int len) const {
    if (len < 0 || len > size()) throw DimensionError("Word::prefix: bad length");
    return Word(std::vector<Symbol>(syms.begin(), syms.begin() + len), alphabet);
}

Word Word::suffix_from(int start) const {
    if (start < 0 || start > size()) throw DimensionError("Word::suffix_from: bad start");
    return Word(std::vector<Symbol>(syms.begin() + start, syms.end()), alphabet);
}

Word Word::rotated(int j) const {
    if (empty()) return *this;
    j = ((j % size()) + size()) % size();
    std::vector<Symbol> s(syms.begin() + j, syms.end());
    s.insert(s.end(), syms.begin(), syms.begin() + j);
    return Word(std::move(s), alphabet);
}

Word Word::repeated(int times) const {
    std::vector<Symbol> s;
    s.reserve(syms.size() * static_cast<std::size_t>(times));
    for (int t = 0; t < times; ++t) s.insert(s.end(), syms.begin(), syms.end());
    return Word(std::move(s), alphabet);
}

Word Word::concat(const Word& tail) const {
    std::vector<Symbol> s = syms;
    s.insert(s.end(), tail.syms.begin(), tail.syms.end());
    return Word(std::move(s), alphabet);
}

Word Word::appended(Symbol a) const {
    std::vector<Symbol> s = syms;
    s.push_back(a);
    return Word(std::move(s), alphabet);
}

std::string Word::str() const {
    std::string out;
    out.reserve(syms.size());
    for (Symbol a : syms) out.push_back(static_cast<char>('0' + a));
    return out;
}

std::uint64_t Word::index() const {
    std::uint64_t idx = 0;
    for (Symbol a : syms) idx = idx * static_cast<std::uint64_t>(alphabet) + a;
    return idx;
}

Word word_from_index(std::uint64_t idx, int len, int d) {
    std::vector<Symbol> s(static_cast<std::size_t>(len));
    for (int i = len - 1; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = static_cast<Symbol>(idx % static_cast<std::uint64_t>(d));
        idx /= static_cast<std::uint64_t>(d);
    }
    return Word(std::move(s), d);
}

std::vector<Point> PeriodicOrbit::points() const {
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(period()));
    for (int j = 0; j < period(); ++j)
        pts.push_back(Point{Word({}, primitive.alphabet), primitive.rotated(j)});
    return pts;
}

Symbol Point::at(std::int64_t i) const {
    if (i < pre.size()) return pre[static_cast<int>(i)];
    return rep[static_cast<int>((i - pre.size()) % rep.size())];
}

Word Point::first(int k) const {
    std::vector<Symbol> s(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) s[static_cast<std::size_t>(i)] = at(i);
    return Word(std::move(s), alphabet());
}

Point Point::shifted() const {
    if (!pre.empty()) return Point{pre.suffix_from(1), rep};
    return Point{pre, rep.rotated(1)};
}

std::string Point::str() const { return pre.str() + "|" + rep.str(); }

Point Point::parse(const std::string& text, int d) {
    auto bar = text.find('|');
    if (bar == std::string::npos)
        throw ConfigError("Point::parse: expected \"pre|rep\" form in '" + text + "'");
    Word pre = Word::parse(text.substr(0, bar), d);
    Word rep = Word::parse(text.substr(bar + 1), d);
    if (rep.empty()) throw ConfigError("Point::parse: empty repetend in '" + text + "'");
    return Point{std::move(pre), std::move(rep)};
}

bool operator==(const Point& a, const Point& b) {
    // Two eventually periodic sequences with preperiod <= m and period
    // dividing L coincide iff they agree on the first m + L symbols.
    std::int64_t m = std::max(a.pre.size(), b.pre.size());
    std::int64_t L = std::lcm<std::int64_t>(a.rep.size(), b.rep.size());
    for (std::int64_t i = 0; i < m + L; ++i)
        if (a.at(i) != b.at(i)) return false;
    return true;
}

PeriodicOrbit canonical_orbit(const Word& w) {
    if (w.empty()) throw DimensionError("canonical_orbit: empty word");
    int n = w.size();
    int p = n;
    for (int q = 1; q <= n; ++q) {
        if (n % q != 0) continue;
        bool ok = true;
        for (int i = q; i < n && ok; ++i) ok = (w[i] == w[i % q]);
        if (ok) { p = q; break; }
    }
    Word root = w.prefix(p);
    Word best = root;
    for (int j = 1; j < p; ++j) {
        Word r = root.rotated(j);
        if (r < best) best = r;
    }
    return PeriodicOrbit{best};
}

namespace {

// Duval's algorithm: Lyndon words over {0..d-1} of length <= n, lex order.
std::vector<Word> lyndon_words_up_to(int n, int d) {
    std::vector<Word> out;
    std::vector<Symbol> w{0};
    for (;;) {
        if (static_cast<int>(w.size()) <= n) out.push_back(Word(w, d));
        // extend periodically to length n, then increment
        std::vector<Symbol> t = w;
        while (static_cast<int>(t.size()) < n) t.push_back(t[t.size() % w.size()]);
        while (!t.empty() && t.back() == d - 1) t.pop_back();
        if (t.empty()) break;
        ++t.back();
        w = std::move(t);
    }
    return out;
}

}  // namespace

std::vector<PeriodicOrbit> enumerate_fix(int n, int d, const EnumOptions& opts) {
    if (n < 1) throw DimensionError("enumerate_fix: n >= 1 required");
    if (d < 2) throw DimensionError("enumerate_fix: alphabet size >= 2 required");
    std::uint64_t total = ipow(d, n);
    if (total > opts.word_cap)
        throw ResourceError("enumerate_fix: d^n = " + std::to_string(total) +
                            " exceeds cap " + std::to_string(opts.word_cap));

    std::vector<PeriodicOrbit> orbits;
    if (opts.necklace_fast_path) {
        for (Word& w : lyndon_words_up_to(n, d)) {
            int p = w.size();
            bool keep = (opts.mode == PeriodMode::dividing) ? (n % p == 0) : (p == n);
            if (keep) orbits.push_back(PeriodicOrbit{std::move(w)});
        }
    } else {
        std::set<Word> seen;
        for (std::uint64_t idx = 0; idx < total; ++idx) {
            PeriodicOrbit o = canonical_orbit(word_from_index(idx, n, d));
            if (opts.mode == PeriodMode::exact && o.period() != n) continue;
            if (seen.insert(o.primitive).second) orbits.push_back(std::move(o));
        }
    }
    std::sort(orbits.begin(), orbits.end());
    return orbits;
}

double metric_distance(const Point& x, const Point& y, const MetricSpec& metric) {
    std::int64_t m = std::max(x.pre.size(), y.pre.size());
    std::int64_t L = std::lcm<std::int64_t>(x.rep.size(), y.rep.size());
    for (std::int64_t i = 0; i < m + L; ++i)
        if (x.at(i) != y.at(i)) return std::pow(metric.lambda, static_cast<double>(i));
    return 0.0;
}

std::pair<Cylinder, Cylinder> shift_frame(const Cylinder& v) {
    if (v.depth() < 2) throw DimensionError("shift_frame: depth >= 2 required");
    return {Cylinder(v.word.prefix(v.depth() - 1)), Cylinder(v.word.suffix_from(1))};
}

}  // namespace et
