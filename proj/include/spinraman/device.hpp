// Device parameter record and the Zeeman / four-level transition structure of
// a negatively charged quantum dot in an in-plane magnetic field, coupled to
// a linearly polarized cavity mode.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace spinraman {

// QD basis labels. Basis ordering is stable: |down>, |up>, |T1>, |T2>.
// With the default leg assignment |down> is the upper ground state (the
// anti-Stokes pump state) and T1 the upper trion; the swap_lambda_legs flag
// mirrors the labeling.
enum QdState : int { kDown = 0, kUp = 1, kT1 = 2, kT2 = 3 };

enum class LegRole : int {
    stokes_pump = 0,  // laser-driven outer leg, highest transition energy
    as_emit = 1,      // cavity-coupled partner of the anti-Stokes pump
    stokes_emit = 2,  // cavity-coupled partner of the Stokes pump
    as_pump = 3,      // laser-driven outer leg, lowest transition energy
};

struct DeviceParameters {
    double qd_center_energy = 1'291'200.0;  // E_X, ueV
    double cavity_energy = 1'290'700.0;     // omega_c, ueV
    double cavity_hwhm = 175.0;             // Gamma, ueV (2*Gamma = FWHM)
    std::optional<double> cavity_q;         // optional alternative to Gamma
    double electron_g = 0.43;
    double trion_g = 0.21;
    double qd_hwhm = 9.0;                   // gamma, ueV (2*gamma = 18 ueV)
    double spin_dephasing_rate = 1.5;       // gamma_s, ueV; sideband FWHM = 2*gamma_s
    double spin_flip_rate = 1.6455298922500002e-2;  // Gamma_ct, ueV (plateau edge)
    double radiative_rate = 4.135667697;    // gamma_r, ueV (~1 GHz free-space)
    // g_c, ueV; calibrated so the dressed width of the cavity-coupled Stokes
    // leg is 18 ueV at the base profile (see calibrate_coupling).
    double qd_cavity_coupling = 103.511289;
    double drive_rabi = 0.5;                // Omega, ueV
    double polarization_mixing_angle = 0.0; // theta, rad
    double magnetic_field = 4.0;            // B, T
    // Relative dipole moments, normalized so the largest is 1.
    double dipole_t1_up = 1.0;
    double dipole_t1_down = 1.0;
    double dipole_t2_up = 1.0;
    double dipole_t2_down = 1.0;
    bool swap_lambda_legs = false;

    // Validates invariants, resolves Gamma from Q when only Q is given and
    // normalizes the dipole moments. Returns human-readable warnings
    // (e.g. Gamma-vs-Q mismatch); throws ConfigError on hard violations.
    std::vector<std::string> finalize();

    double dipole(QdState trion, QdState ground) const;
};

struct Transition {
    double energy = 0.0;        // ueV
    QdState ground = kDown;
    QdState trion = kT1;
    double dipole = 1.0;
    bool cavity_coupled = false;
    LegRole role = LegRole::stokes_pump;
};

// The four optical transitions and both Zeeman splittings at a given field.
// transitions[] is sorted by descending energy; "transition n" (n = 1..4)
// refers to transitions[n-1]. The cavity-coupled legs are always the inner
// pair (2, 3) and the laser-driven (cross-polarized) legs the outer pair
// (1, 4).
struct LevelStructure {
    double electron_zeeman = 0.0;            // E_z_e, ueV
    double trion_zeeman = 0.0;               // E_z_t, ueV
    std::array<double, 2> ground_energies{}; // [eps_down, eps_up]
    std::array<double, 2> trion_energies{};  // [eps_T1, eps_T2]
    std::array<Transition, 4> transitions{}; // descending energy
    double centroid = 0.0;                   // E_X, ueV

    const Transition& transition(int number) const;   // number in 1..4
    const Transition& leg(LegRole role) const;
    int transition_number(LegRole role) const;        // 1..4
    double level_energy(QdState s) const;
    std::array<double, 4> transition_energies() const;
};

// g * mu_B * B. Rejects negative B.
double zeeman_splitting(double g, double field_t);

// omega_c / Q. Rejects nonpositive Q.
double cavity_fwhm_from_q(double cavity_energy, double q);

LevelStructure build_level_structure(const DeviceParameters& params);

} // namespace spinraman
