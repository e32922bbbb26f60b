#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "et/shift_space.hpp"

using namespace et;

namespace {

Word w(const std::string& digits, int d = 2) { return Word::parse(digits, d); }
Point pt(const std::string& text, int d = 2) { return Point::parse(text, d); }

// Necklace count (1/n) sum_{p | n} phi(n/p) d^p, independent of the
// enumeration code.
std::uint64_t necklace_count(int n, int d) {
    auto phi = [](int m) {
        int result = m;
        for (int p = 2; p * p <= m; ++p) {
            if (m % p) continue;
            while (m % p == 0) m /= p;
            result -= result / p;
        }
        if (m > 1) result -= result / m;
        return result;
    };
    std::uint64_t total = 0;
    for (int p = 1; p <= n; ++p)
        if (n % p == 0) total += static_cast<std::uint64_t>(phi(n / p)) * ipow(d, p);
    return total / static_cast<std::uint64_t>(n);
}

Point random_point(std::mt19937_64& rng, int d) {
    std::uniform_int_distribution<int> len(1, 5);
    std::uniform_int_distribution<int> pre_len(0, 3);
    std::uniform_int_distribution<int> sym(0, d - 1);
    std::vector<Symbol> pre(static_cast<std::size_t>(pre_len(rng)));
    for (auto& s : pre) s = static_cast<Symbol>(sym(rng));
    std::vector<Symbol> rep(static_cast<std::size_t>(len(rng)));
    for (auto& s : rep) s = static_cast<Symbol>(sym(rng));
    return Point{Word(pre, d), Word(rep, d)};
}

}  // namespace

TEST_CASE("canonical_orbit reduces to the least rotation of the primitive root") {
    CHECK(canonical_orbit(w("0101")).primitive == w("01"));
    CHECK(canonical_orbit(w("0101")).period() == 2);
    CHECK(canonical_orbit(w("10")).primitive == w("01"));
    CHECK(canonical_orbit(w("001")).primitive == w("001"));
    CHECK(canonical_orbit(w("001")).period() == 3);
    CHECK(canonical_orbit(w("110110")).primitive == w("011"));
    CHECK_THROWS_AS(canonical_orbit(Word({}, 2)), DimensionError);
}

TEST_CASE("enumerate_fix small cases") {
    auto fix1 = enumerate_fix(1, 2);
    REQUIRE(fix1.size() == 2);
    CHECK(fix1[0].primitive == w("0"));
    CHECK(fix1[1].primitive == w("1"));

    auto fix2 = enumerate_fix(2, 2);
    REQUIRE(fix2.size() == 3);
    CHECK(fix2[0].primitive == w("0"));
    CHECK(fix2[1].primitive == w("01"));
    CHECK(fix2[2].primitive == w("1"));
    int points = 0;
    for (const auto& o : fix2) points += o.period();
    CHECK(points == 4);
}

TEST_CASE("enumerate_fix counts match the necklace formula") {
    CHECK(enumerate_fix(12, 2).size() == 352);
    CHECK(necklace_count(12, 2) == 352);
    for (int n = 1; n <= 10; ++n) {
        auto orbits = enumerate_fix(n, 2);
        CHECK(orbits.size() == necklace_count(n, 2));
        std::uint64_t points = 0;
        std::set<Word> primitives;
        for (const auto& o : orbits) {
            CHECK(n % o.period() == 0);
            CHECK(primitives.insert(o.primitive).second);  // no duplicates
            points += static_cast<std::uint64_t>(o.period());
        }
        CHECK(points == ipow(2, n));
    }
    for (int n = 1; n <= 6; ++n) CHECK(enumerate_fix(n, 3).size() == necklace_count(n, 3));
}

TEST_CASE("enumerate_fix: filtering and necklace fast path agree") {
    for (int n = 1; n <= 9; ++n) {
        EnumOptions fast;
        fast.necklace_fast_path = true;
        auto a = enumerate_fix(n, 2);
        auto b = enumerate_fix(n, 2, fast);
        CHECK(a == b);
    }
    EnumOptions exact;
    exact.mode = PeriodMode::exact;
    auto e6 = enumerate_fix(6, 2, exact);
    for (const auto& o : e6) CHECK(o.period() == 6);
    CHECK(e6.size() == 9);  // Lyndon words of length 6 over 2 symbols
}

TEST_CASE("enumerate_fix resource cap") {
    EnumOptions opts;
    opts.word_cap = 1000;
    CHECK_THROWS_AS(enumerate_fix(12, 2, opts), ResourceError);
}

TEST_CASE("metric distances pinned by the quadratic cost examples") {
    CHECK(metric_distance(pt("|01"), pt("|10")) == doctest::Approx(1.0));
    CHECK(metric_distance(pt("|0"), pt("|01")) == doctest::Approx(0.5));
    CHECK(metric_distance(pt("|01"), pt("|01")) == 0.0);
    CHECK(metric_distance(pt("0|1"), pt("|01")) == doctest::Approx(0.25));  // 0111 vs 0101
    // representation independent: |01 equals 01|01 as sequences
    CHECK(metric_distance(pt("01|01"), pt("|01")) == 0.0);
    CHECK(pt("01|01") == pt("|01"));
    CHECK(pt("0|10") == pt("|01"));
    CHECK_FALSE(pt("0|10") == pt("|010"));
}

TEST_CASE("ultrametric inequality on sampled triples") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        Point x = random_point(rng, 2), y = random_point(rng, 2), z = random_point(rng, 2);
        double dxz = metric_distance(x, z);
        double dxy = metric_distance(x, y);
        double dyz = metric_distance(y, z);
        CHECK(dxz <= std::max(dxy, dyz) + 1e-15);
    }
}

TEST_CASE("shift_frame prefix and suffix") {
    auto [p1, s1] = shift_frame(Cylinder(w("01")));
    CHECK(p1.word == w("0"));
    CHECK(s1.word == w("1"));
    auto [p2, s2] = shift_frame(Cylinder(w("0101")));
    CHECK(p2.word == w("010"));
    CHECK(s2.word == w("101"));
    auto [p3, s3] = shift_frame(Cylinder(w("000")));
    CHECK(p3.word == w("00"));
    CHECK(s3.word == w("00"));
    CHECK_THROWS_AS(shift_frame(Cylinder(w("0"))), DimensionError);
}

TEST_CASE("shift_frame is consistent with shifting points") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Point x = random_point(rng, 2);
        int k = 2 + static_cast<int>(trial % 4);
        Cylinder v(x.first(k));
        auto [pre, suf] = shift_frame(v);
        CHECK(x.shifted().first(k - 1) == suf.word);
        CHECK(x.first(k - 1) == pre.word);
    }
}

TEST_CASE("point serialization round trip") {
    for (const char* s : {"|01", "0|1", "|001", "0101|1", "|0"}) {
        Point p = pt(s);
        CHECK(p.str() == s);
        CHECK(Point::parse(p.str(), 2) == p);
    }
    CHECK_THROWS_AS(pt("01"), ConfigError);   // missing bar
    CHECK_THROWS_AS(pt("0|"), ConfigError);   // empty repetend
    CHECK_THROWS_AS(pt("|2"), DimensionError);
}

TEST_CASE("word index round trip") {
    for (std::uint64_t i = 0; i < 32; ++i) {
        Word v = word_from_index(i, 5, 2);
        CHECK(v.index() == i);
    }
    CHECK(w("101").index() == 5);
    CHECK(word_from_index(5, 3, 2) == w("101"));
}
