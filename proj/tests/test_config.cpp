#include <string>

#include "doctest.h"
#include "spinraman/config.hpp"
#include "spinraman/errors.hpp"

using namespace spinraman;

TEST_CASE("empty configuration yields the base profile") {
    const Config c = parse_config_text("", "<test>");
    CHECK(c.device.qd_center_energy == 1'291'200.0);
    CHECK(c.device.cavity_energy == 1'290'700.0);
    CHECK(c.device.cavity_hwhm == 175.0);
    CHECK(c.device.qd_hwhm == 9.0);
    CHECK(c.device.electron_g == 0.43);
    CHECK(c.device.trion_g == 0.21);
    CHECK(c.device.spin_dephasing_rate == 1.5);
    CHECK(c.device.magnetic_field == 4.0);
    CHECK(c.engine.fock_cutoff == 2);
    CHECK(c.warnings.empty());
}

TEST_CASE("sections, comments and value types parse") {
    const std::string text = R"(
# device overrides
[device]
magnetic_field = 6.75   # tesla
swap_lambda_legs = true

[engine]
fock_cutoff = 3

[spin]
cotunneling_regime = "plateau-center"
)";
    const Config c = parse_config_text(text, "<test>");
    CHECK(c.device.magnetic_field == 6.75);
    CHECK(c.device.swap_lambda_legs);
    CHECK(c.engine.fock_cutoff == 3);
    CHECK(c.relaxation.regime == CotunnelingRegime::plateau_center);
    // regime resolves the co-tunneling rate when not set explicitly
    CHECK(c.device.spin_flip_rate == doctest::Approx(1.6455298922500002e-5).epsilon(1e-9));
}

TEST_CASE("unknown keys are rejected with the key path and line") {
    const std::string text = "[device]\nmagnetic_field = 2\nqd_fudge = 1\n";
    CHECK_THROWS_WITH_AS(parse_config_text(text, "<test>"),
                         doctest::Contains("device.qd_fudge"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(text, "<test>"), doctest::Contains("line 3"),
                         ConfigError);
}

TEST_CASE("type mismatches and malformed lines are rejected") {
    CHECK_THROWS_WITH_AS(parse_config_text("[device]\nelectron_g = fast\n", "<t>"),
                         doctest::Contains("expected a number"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[engine]\nfock_cutoff = 2.5\n", "<t>"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("just a line\n", "<t>"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[device\nx = 1\n", "<t>"), ConfigError);
}

TEST_CASE("invariant violations name the key") {
    CHECK_THROWS_WITH_AS(parse_config_text("[device]\ncavity_hwhm = -1\n", "<t>"),
                         doctest::Contains("cavity_hwhm"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[device]\nmagnetic_field = -2\n", "<t>"), ConfigError);
}

TEST_CASE("Q and hwhm consistency") {
    // 8% mismatch: accepted with a warning, measured width kept
    const Config ok = parse_config_text("[device]\ncavity_q = 4000\n", "<t>");
    REQUIRE(ok.warnings.size() == 1);
    CHECK(ok.device.cavity_hwhm == 175.0);

    // >15% mismatch rejected
    CHECK_THROWS_AS(parse_config_text("[device]\ncavity_q = 2500\n", "<t>"), ConfigError);

    // Q alone resolves the width
    const Config from_q = parse_config_text("[device]\ncavity_hwhm = 0\ncavity_q = 4000\n", "<t>");
    CHECK(from_q.device.cavity_hwhm == doctest::Approx(161.3375).epsilon(1e-9));
}

TEST_CASE("overrides are applied after the file") {
    const Config c = parse_config_text("[device]\nmagnetic_field = 2\n", "<t>",
                                       {"device.magnetic_field=5.5", "engine.fock_cutoff=4"});
    CHECK(c.device.magnetic_field == 5.5);
    CHECK(c.engine.fock_cutoff == 4);
    CHECK_THROWS_AS(parse_config_text("", "<t>", {"no_equals_sign"}), ConfigError);
    CHECK_THROWS_AS(parse_config_text("", "<t>", {"bogus.key=1"}), ConfigError);
}

TEST_CASE("explicit spin_flip_rate wins over the regime") {
    const Config c = parse_config_text(
        "[device]\nspin_flip_rate = 0.3\n[spin]\ncotunneling_regime = plateau-center\n", "<t>");
    CHECK(c.device.spin_flip_rate == 0.3);
    CHECK(c.spin_flip_explicit);
}

TEST_CASE("snapshot round-trips through apply_setting") {
    const Config c = parse_config_text("[device]\nmagnetic_field = 6.75\ndipole_t1_up = 0.7\n",
                                       "<t>");
    const auto snap = c.snapshot();
    Config rebuilt;
    rebuilt.relaxation = RelaxationModel::measured_default();
    for (const auto& [key, value] : snap) {
        if (value == "unset") continue;
        apply_setting(rebuilt, key, value, "<roundtrip>");
    }
    rebuilt.device.finalize();
    CHECK(rebuilt.snapshot() == snap);
}

TEST_CASE("config key docs cover every key") {
    const auto docs = config_key_docs();
    CHECK(docs.size() >= 30);
    for (const auto& [key, doc] : docs) {
        CHECK_FALSE(key.empty());
        CHECK_FALSE(doc.empty());
    }
}
