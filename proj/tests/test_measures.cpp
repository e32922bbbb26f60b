#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "et/measures.hpp"

using namespace et;

namespace {

Word w(const std::string& digits, int d = 2) { return Word::parse(digits, d); }

CylinderMeasure uniform_bernoulli(int depth, int d = 2) {
    std::uint64_t cells = ipow(d, depth);
    return CylinderMeasure{depth, d,
                           std::vector<double>(cells, 1.0 / static_cast<double>(cells))};
}

}  // namespace

TEST_CASE("orbit_measure puts uniform mass on the orbit points") {
    FiniteMeasure m0 = orbit_measure(canonical_orbit(w("0")));
    REQUIRE(m0.atoms.size() == 1);
    CHECK(m0.atoms[0].second == 1.0);
    CHECK(cell_str(m0.atoms[0].first) == "|0");

    FiniteMeasure m01 = orbit_measure(canonical_orbit(w("01")));
    REQUIRE(m01.atoms.size() == 2);
    CHECK(m01.atoms[0].second == 0.5);
    CHECK(m01.atoms[1].second == 0.5);
    CHECK(cell_str(m01.atoms[0].first) == "|01");
    CHECK(cell_str(m01.atoms[1].first) == "|10");

    FiniteMeasure m001 = orbit_measure(canonical_orbit(w("001")));
    REQUIRE(m001.atoms.size() == 3);
    for (const auto& [cell, mass] : m001.atoms) CHECK(mass == doctest::Approx(1.0 / 3));
    m001.validate();
}

TEST_CASE("project_to_depth") {
    CylinderMeasure p = project_to_depth(orbit_measure(canonical_orbit(w("01"))), 2, 2);
    CHECK(p.mass[w("01").index()] == doctest::Approx(0.5));
    CHECK(p.mass[w("10").index()] == doctest::Approx(0.5));
    CHECK(p.mass[w("00").index()] == 0.0);
    CHECK(p.mass[w("11").index()] == 0.0);

    CylinderMeasure u3 = uniform_bernoulli(3);
    for (double m : u3.mass) CHECK(m == doctest::Approx(1.0 / 8));

    FiniteMeasure dirac{{{Point::parse("|0", 2), 1.0}}};
    CylinderMeasure d4 = project_to_depth(dirac, 4, 2);
    CHECK(d4.mass[w("0000").index()] == 1.0);
    CHECK(d4.total() == doctest::Approx(1.0));

    // depth reduction is consistent: coarser cells sum finer ones
    CylinderMeasure u2 = project_to_depth(u3, 2);
    for (double m : u2.mass) CHECK(m == doctest::Approx(0.25));

    FiniteMeasure labeled{{{Label{"x0"}, 1.0}}};
    CHECK_THROWS_AS(project_to_depth(labeled, 2, 2), DimensionError);
}

TEST_CASE("stationarity_residual") {
    CHECK(stationarity_residual(project_to_depth(orbit_measure(canonical_orbit(w("01"))), 2, 2)) ==
          doctest::Approx(0.0));
    CHECK(stationarity_residual(uniform_bernoulli(3)) == doctest::Approx(0.0));

    CylinderMeasure bad{2, 2, {0.0, 1.0, 0.0, 0.0}};  // all mass on [01]
    CHECK(stationarity_residual(bad) == doctest::Approx(1.0));
}

TEST_CASE("stationarity constraint rows sum to zero") {
    StationarityConstraints cons{4, 2};
    CHECK(cons.rows() == 8);
    for (std::uint64_t node = 0; node < cons.rows(); ++node) {
        double sum = 0;
        for (const auto& [idx, coeff] : cons.row(node)) sum += coeff;
        CHECK(sum == 0.0);
    }
}

TEST_CASE("markov extension masses") {
    CylinderMeasure orb = project_to_depth(orbit_measure(canonical_orbit(w("01"))), 2, 2);
    CHECK(markov_extension_mass(orb, w("0101")) == doctest::Approx(0.5));

    CylinderMeasure u2 = uniform_bernoulli(2);
    CHECK(markov_extension_mass(u2, w("000")) == doctest::Approx(1.0 / 8));

    CylinderMeasure dirac{2, 2, {1.0, 0.0, 0.0, 0.0}};  // all mass on [00]
    CHECK(markov_extension_mass(dirac, w("000")) == doctest::Approx(1.0));

    CylinderMeasure bad{2, 2, {0.0, 1.0, 0.0, 0.0}};
    CHECK_THROWS_AS(markov_extension_mass(bad, w("010")), NumericalError);
}

TEST_CASE("markov extension stays stationary and projects back") {
    std::vector<CylinderMeasure> bases = {
        project_to_depth(orbit_measure(canonical_orbit(w("01"))), 2, 2),
        project_to_depth(orbit_measure(canonical_orbit(w("001"))), 3, 2),
        uniform_bernoulli(2),
    };
    for (const CylinderMeasure& base : bases) {
        for (int extra = 1; extra <= 3; ++extra) {
            CylinderMeasure ext = markov_extend(base, base.depth + extra);
            CHECK(ext.total() == doctest::Approx(1.0));
            CHECK(stationarity_residual(ext) <= 1e-12);
            CylinderMeasure back = project_to_depth(ext, base.depth);
            for (std::uint64_t i = 0; i < base.cells(); ++i)
                CHECK(back.mass[i] == doctest::Approx(base.mass[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("markov extension agrees with per-word masses") {
    CylinderMeasure base = project_to_depth(orbit_measure(canonical_orbit(w("011"))), 3, 2);
    CylinderMeasure ext = markov_extend(base, 5);
    for (std::uint64_t i = 0; i < ext.cells(); ++i) {
        Word word = word_from_index(i, 5, 2);
        CHECK(ext.mass[i] == doctest::Approx(markov_extension_mass(base, word)).epsilon(1e-12));
    }
}

TEST_CASE("orbit measures of every fixed orbit are stationary at any depth") {
    for (int n = 1; n <= 6; ++n) {
        for (const PeriodicOrbit& o : enumerate_fix(n, 2)) {
            for (int k = 2; k <= 4; ++k) {
                CylinderMeasure m = project_to_depth(orbit_measure(o), k, 2);
                CHECK(stationarity_residual(m) <= 1e-12);
            }
        }
    }
}

TEST_CASE("measure validation") {
    FiniteMeasure short_mass{{{Label{"a"}, 0.4}}};
    CHECK_THROWS_AS(short_mass.validate(), ConfigError);
    CylinderMeasure wrong{2, 2, {1.0, 0.0}};
    CHECK_THROWS_AS(wrong.validate(), DimensionError);
}
