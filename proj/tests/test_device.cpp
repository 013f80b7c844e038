#include <cmath>
#include <random>

#include "doctest.h"
#include "spinraman/device.hpp"
#include "spinraman/errors.hpp"
#include "spinraman/units.hpp"

using namespace spinraman;

TEST_CASE("unit system constants are mutually consistent") {
    // hbar = h / (2 pi) to 6 significant figures
    const double hbar_from_h = units::h_uev_per_ghz * 1e3 / (2.0 * M_PI);
    CHECK(std::abs(hbar_from_h - units::hbar_uev_ps) / units::hbar_uev_ps < 1e-6);

    // round-trip ueV -> GHz -> ueV
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(1e-3, 2e6);
    for (int i = 0; i < 200; ++i) {
        const double e = dist(rng);
        CHECK(std::abs(units::ghz_to_uev(units::uev_to_ghz(e)) - e) <= 1e-12 * e);
    }

    // 0.5 meV corresponds to roughly 121 GHz
    CHECK(units::uev_to_ghz(500.0) == doctest::Approx(120.9).epsilon(0.01));
}

TEST_CASE("zeeman_splitting values") {
    CHECK(zeeman_splitting(0.43, 4.0) == doctest::Approx(99.560136).epsilon(1e-12));
    CHECK(std::abs(zeeman_splitting(0.43, 4.0) - 100.0) < 1.0);  // quoted sideband shift
    CHECK(zeeman_splitting(0.77, 0.0) == 0.0);
    CHECK(zeeman_splitting(0.21, 4.0) == doctest::Approx(48.622392).epsilon(1e-12));
    CHECK_THROWS_AS(zeeman_splitting(0.43, -1.0), ConfigError);
}

TEST_CASE("zeeman_splitting is linear in the field") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> gdist(0.05, 2.0);
    std::uniform_real_distribution<double> bdist(0.0, 10.0);
    for (int i = 0; i < 300; ++i) {
        const double g = gdist(rng), b = bdist(rng), a = bdist(rng);
        const double lhs = zeeman_splitting(g, a * b);
        const double rhs = a * zeeman_splitting(g, b);
        CHECK(std::abs(lhs - rhs) <= 1e-14 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("cavity_fwhm_from_q") {
    CHECK(cavity_fwhm_from_q(1'290'700.0, 4000.0) == doctest::Approx(322.675).epsilon(1e-12));
    CHECK(cavity_fwhm_from_q(1'290'700.0, 1e15) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK_THROWS_AS(cavity_fwhm_from_q(1'290'700.0, 0.0), ConfigError);
    CHECK_THROWS_AS(cavity_fwhm_from_q(1'290'700.0, -5.0), ConfigError);
}

TEST_CASE("level structure at 4 T") {
    DeviceParameters p;
    p.finalize();
    const LevelStructure ls = build_level_structure(p);

    CHECK(ls.electron_zeeman == doctest::Approx(99.560136).epsilon(1e-12));
    CHECK(ls.trion_zeeman == doctest::Approx(48.622392).epsilon(1e-12));

    const auto w = ls.transition_energies();
    CHECK(w[0] == doctest::Approx(p.qd_center_energy + 74.091264).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(p.qd_center_energy + 25.468872).epsilon(1e-12));
    CHECK(w[2] == doctest::Approx(p.qd_center_energy - 25.468872).epsilon(1e-12));
    CHECK(w[3] == doctest::Approx(p.qd_center_energy - 74.091264).epsilon(1e-12));

    // descending order, exact sum rules
    CHECK(w[0] - w[3] == doctest::Approx(ls.electron_zeeman + ls.trion_zeeman).epsilon(1e-11));
    CHECK(w[0] + w[3] == doctest::Approx(2.0 * p.qd_center_energy).epsilon(1e-11));
    CHECK(w[1] + w[2] == doctest::Approx(2.0 * p.qd_center_energy).epsilon(1e-11));

    // the QD lines sit near the measured resonance
    CHECK(std::abs(w[1] - 1'291'200.0) < 30.0);

    // cavity-coupled legs are the inner pair (2, 3)
    CHECK_FALSE(ls.transition(1).cavity_coupled);
    CHECK(ls.transition(2).cavity_coupled);
    CHECK(ls.transition(3).cavity_coupled);
    CHECK_FALSE(ls.transition(4).cavity_coupled);
}

TEST_CASE("level structure roles form two lambda systems") {
    DeviceParameters p;
    p.finalize();
    const LevelStructure ls = build_level_structure(p);

    const auto& sp = ls.leg(LegRole::stokes_pump);
    const auto& se = ls.leg(LegRole::stokes_emit);
    const auto& ap = ls.leg(LegRole::as_pump);
    const auto& ae = ls.leg(LegRole::as_emit);

    // each lambda system shares a trion and spans both ground states
    CHECK(sp.trion == se.trion);
    CHECK(ap.trion == ae.trion);
    CHECK(sp.trion != ap.trion);
    CHECK(sp.ground != se.ground);
    CHECK(ap.ground != ae.ground);

    // pump legs are the outer pair
    CHECK(ls.transition_number(LegRole::stokes_pump) == 1);
    CHECK(ls.transition_number(LegRole::as_pump) == 4);

    // Raman energy conservation: emission legs are one electron Zeeman away
    CHECK(sp.energy - se.energy == doctest::Approx(ls.electron_zeeman).epsilon(1e-11));
    CHECK(ae.energy - ap.energy == doctest::Approx(ls.electron_zeeman).epsilon(1e-11));
}

TEST_CASE("level structure degenerates at zero field") {
    DeviceParameters p;
    p.magnetic_field = 0.0;
    p.finalize();
    const LevelStructure ls = build_level_structure(p);
    for (const auto& t : ls.transitions) CHECK(t.energy == doctest::Approx(p.qd_center_energy));
    CHECK(ls.electron_zeeman == 0.0);
}

TEST_CASE("cavity-coupled legs stay inner when the trion g-factor dominates") {
    DeviceParameters p;
    p.electron_g = 0.21;
    p.trion_g = 0.6;
    p.finalize();
    const LevelStructure ls = build_level_structure(p);
    CHECK_FALSE(ls.transition(1).cavity_coupled);
    CHECK(ls.transition(2).cavity_coupled);
    CHECK(ls.transition(3).cavity_coupled);
    CHECK_FALSE(ls.transition(4).cavity_coupled);
    const auto w = ls.transition_energies();
    CHECK(w[0] > w[1]);
    CHECK(w[1] > w[2]);
    CHECK(w[2] > w[3]);
}

TEST_CASE("swap_lambda_legs mirrors the labeling, not the energies") {
    DeviceParameters p;
    p.finalize();
    DeviceParameters q = p;
    q.swap_lambda_legs = true;
    const LevelStructure a = build_level_structure(p);
    const LevelStructure b = build_level_structure(q);
    for (int i = 1; i <= 4; ++i)
        CHECK(a.transition(i).energy == doctest::Approx(b.transition(i).energy).epsilon(1e-11));
    // the anti-Stokes pump moves to the opposite spin label
    CHECK(a.leg(LegRole::as_pump).ground == kDown);
    CHECK(b.leg(LegRole::as_pump).ground == kUp);
    CHECK(a.leg(LegRole::as_pump).trion != b.leg(LegRole::as_pump).trion);
}

TEST_CASE("parameter validation") {
    SUBCASE("defaults pass") {
        DeviceParameters p;
        CHECK(p.finalize().empty());
    }
    SUBCASE("negative width rejected with the field named") {
        DeviceParameters p;
        p.qd_hwhm = -1.0;
        CHECK_THROWS_WITH_AS(p.finalize(), doctest::Contains("qd_hwhm"), ConfigError);
    }
    SUBCASE("gamma-vs-Q mismatch of 8% warns but is accepted") {
        DeviceParameters p;
        p.cavity_q = 4000.0;
        const auto warnings = p.finalize();
        REQUIRE(warnings.size() == 1);
        CHECK(warnings[0].find("cavity_hwhm") != std::string::npos);
        CHECK(p.cavity_hwhm == 175.0);  // measured width takes precedence
    }
    SUBCASE("gamma-vs-Q mismatch beyond 15% rejected") {
        DeviceParameters p;
        p.cavity_q = 2000.0;
        CHECK_THROWS_AS(p.finalize(), ConfigError);
    }
    SUBCASE("Q alone sets the width") {
        DeviceParameters p;
        p.cavity_hwhm = 0.0;
        p.cavity_q = 4000.0;
        p.finalize();
        CHECK(p.cavity_hwhm == doctest::Approx(322.675 / 2.0).epsilon(1e-12));
    }
    SUBCASE("dipoles are normalized to max 1") {
        DeviceParameters p;
        p.dipole_t1_up = 2.0;
        const auto warnings = p.finalize();
        CHECK(warnings.size() == 1);
        CHECK(p.dipole_t1_up == 1.0);
        CHECK(p.dipole_t2_down == 0.5);
    }
}
