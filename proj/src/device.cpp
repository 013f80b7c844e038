#include "spinraman/device.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spinraman/errors.hpp"
#include "spinraman/units.hpp"

namespace spinraman {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

} // namespace

double zeeman_splitting(double g, double field_t) {
    if (field_t < 0.0) throw ConfigError("zeeman_splitting: negative magnetic field");
    return g * units::mu_bohr_uev_per_t * field_t;
}

double cavity_fwhm_from_q(double cavity_energy, double q) {
    if (q <= 0.0) throw ConfigError("cavity_fwhm_from_q: Q must be positive");
    return cavity_energy / q;
}

std::vector<std::string> DeviceParameters::finalize() {
    std::vector<std::string> warnings;

    require(qd_center_energy > 0.0, "qd_center_energy must be positive");
    require(cavity_energy > 0.0, "cavity_energy must be positive");
    require(electron_g >= 0.0, "electron_g must be >= 0 (use swap_lambda_legs to mirror the assignment)");
    require(trion_g >= 0.0, "trion_g must be >= 0");
    require(qd_hwhm > 0.0, "qd_hwhm must be positive");
    require(spin_dephasing_rate >= 0.0, "spin_dephasing_rate must be >= 0");
    require(spin_flip_rate >= 0.0, "spin_flip_rate must be >= 0");
    require(radiative_rate >= 0.0, "radiative_rate must be >= 0");
    require(qd_cavity_coupling >= 0.0, "qd_cavity_coupling must be >= 0");
    require(drive_rabi >= 0.0, "drive_rabi must be >= 0");
    require(magnetic_field >= 0.0, "magnetic_field must be >= 0");

    if (cavity_q) {
        require(*cavity_q > 0.0, "cavity_q must be positive");
        const double fwhm_from_q = cavity_fwhm_from_q(cavity_energy, *cavity_q);
        if (cavity_hwhm > 0.0) {
            // The measured width takes precedence; Q is only checked for
            // consistency.
            const double mismatch = std::abs(2.0 * cavity_hwhm - fwhm_from_q) / fwhm_from_q;
            require(mismatch <= 0.15, "cavity_hwhm and cavity_q disagree by more than 15%");
            if (mismatch > 0.02) {
                std::ostringstream msg;
                msg << "cavity_hwhm (" << cavity_hwhm << " ueV) and cavity_q imply widths differing by "
                    << std::round(mismatch * 1000.0) / 10.0 << "%; keeping cavity_hwhm";
                warnings.push_back(msg.str());
            }
        } else {
            cavity_hwhm = 0.5 * fwhm_from_q;
        }
    }
    require(cavity_hwhm > 0.0, "cavity_hwhm must be positive (set it or cavity_q)");

    const std::array<double, 4> dipoles = {dipole_t1_up, dipole_t1_down, dipole_t2_up, dipole_t2_down};
    for (double d : dipoles) require(d >= 0.0, "dipole moments must be >= 0");
    const double peak = *std::max_element(dipoles.begin(), dipoles.end());
    if (peak > 0.0 && peak != 1.0) {
        dipole_t1_up /= peak;
        dipole_t1_down /= peak;
        dipole_t2_up /= peak;
        dipole_t2_down /= peak;
        warnings.push_back("dipole moments rescaled so the largest is 1");
    }

    return warnings;
}

double DeviceParameters::dipole(QdState trion, QdState ground) const {
    if (trion == kT1) return ground == kUp ? dipole_t1_up : dipole_t1_down;
    return ground == kUp ? dipole_t2_up : dipole_t2_down;
}

const Transition& LevelStructure::transition(int number) const {
    if (number < 1 || number > 4) throw ConfigError("transition number must be in 1..4");
    return transitions[static_cast<std::size_t>(number - 1)];
}

const Transition& LevelStructure::leg(LegRole role) const {
    for (const auto& t : transitions)
        if (t.role == role) return t;
    throw PhysicsError("level structure is missing a leg role");
}

int LevelStructure::transition_number(LegRole role) const {
    for (int i = 0; i < 4; ++i)
        if (transitions[static_cast<std::size_t>(i)].role == role) return i + 1;
    throw PhysicsError("level structure is missing a leg role");
}

double LevelStructure::level_energy(QdState s) const {
    switch (s) {
        case kDown: return ground_energies[0];
        case kUp: return ground_energies[1];
        case kT1: return trion_energies[0];
        case kT2: return trion_energies[1];
    }
    throw ConfigError("invalid QD state");
}

std::array<double, 4> LevelStructure::transition_energies() const {
    return {transitions[0].energy, transitions[1].energy, transitions[2].energy, transitions[3].energy};
}

LevelStructure build_level_structure(const DeviceParameters& params) {
    LevelStructure ls;
    ls.centroid = params.qd_center_energy;
    ls.electron_zeeman = zeeman_splitting(params.electron_g, params.magnetic_field);
    ls.trion_zeeman = zeeman_splitting(params.trion_g, params.magnetic_field);

    // Default labeling: |down> is the upper ground state and T1 the upper
    // trion, so that the Stokes pump leg (|up> <-> T1) is the highest
    // transition and the anti-Stokes pump leg (|down> <-> T2) the lowest.
    // swap_lambda_legs mirrors the labels onto the opposite legs.
    const double sign = params.swap_lambda_legs ? -1.0 : 1.0;
    const double half_e = 0.5 * sign * ls.electron_zeeman;
    const double half_t = 0.5 * sign * ls.trion_zeeman;
    ls.ground_energies = {half_e, -half_e};                               // [down, up]
    ls.trion_energies = {ls.centroid + half_t, ls.centroid - half_t};     // [T1, T2]

    auto energy_of = [&](QdState trion, QdState ground) {
        const double trion_e = trion == kT1 ? ls.trion_energies[0] : ls.trion_energies[1];
        const double ground_e = ground == kDown ? ls.ground_energies[0] : ls.ground_energies[1];
        return trion_e - ground_e;
    };

    // Pump legs connect the upper trion to the lower ground state and vice
    // versa; the cavity-coupled legs are the inner pair.
    const QdState upper_trion = params.swap_lambda_legs ? kT2 : kT1;
    const QdState lower_trion = params.swap_lambda_legs ? kT1 : kT2;
    const QdState upper_ground = params.swap_lambda_legs ? kUp : kDown;
    const QdState lower_ground = params.swap_lambda_legs ? kDown : kUp;

    std::array<Transition, 4> legs;
    legs[0] = {energy_of(upper_trion, lower_ground), lower_ground, upper_trion,
               params.dipole(upper_trion, lower_ground), false, LegRole::stokes_pump};
    legs[1] = {energy_of(lower_trion, lower_ground), lower_ground, lower_trion,
               params.dipole(lower_trion, lower_ground), true, LegRole::as_emit};
    legs[2] = {energy_of(upper_trion, upper_ground), upper_ground, upper_trion,
               params.dipole(upper_trion, upper_ground), true, LegRole::stokes_emit};
    legs[3] = {energy_of(lower_trion, upper_ground), upper_ground, lower_trion,
               params.dipole(lower_trion, upper_ground), false, LegRole::as_pump};

    std::stable_sort(legs.begin(), legs.end(),
                     [](const Transition& a, const Transition& b) { return a.energy > b.energy; });
    ls.transitions = legs;
    return ls;
}

} // namespace spinraman
