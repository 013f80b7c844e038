// Optical spin initialization, co-tunneling randomization, the T1(T)
// utility, and spin-resolved Raman emission built on the Lindblad engine
// plus a closed-form rate-equation tier.
#pragma once

#include <complex>
#include <string>
#include <vector>

#include "spinraman/device.hpp"
#include "spinraman/lindblad.hpp"
#include "spinraman/spectrum.hpp"

namespace spinraman {

struct SpinState {
    double p_up = 0.5;
    double p_down = 0.5;
    std::complex<double> coherence = 0.0;  // ground-doublet off-diagonal

    void validate() const;  // populations sum to 1, coherence bounded
    static SpinState mixed() { return {0.5, 0.5, 0.0}; }
    static SpinState up() { return {1.0, 0.0, 0.0}; }
    static SpinState down() { return {0.0, 1.0, 0.0}; }
};

enum class CotunnelingRegime { plateau_edge, plateau_center };

struct RelaxationModel {
    struct T1Point {
        double temperature_k = 0.0;
        double t1_ps = 0.0;
    };
    std::vector<T1Point> t1_points;  // sorted by temperature
    CotunnelingRegime regime = CotunnelingRegime::plateau_edge;
    double plateau_edge_factor = 1000.0;  // edge rate / center rate

    // Flip rate per direction in ueV; symmetric flips at Gamma_ct give the
    // spin polarization a 1/e time of T1 at the plateau center.
    double gamma_ct(CotunnelingRegime r) const;
    double gamma_ct() const { return gamma_ct(regime); }

    static RelaxationModel measured_default();
};

// Log-linear interpolation of T1 between tabulated points; temperatures
// outside the tabulated span are rejected.
double interpolate_t1(double temperature_k, const RelaxationModel& model);

struct PumpResult {
    SpinState state;
    double fidelity = 0.0;  // population of the pumping target state
    std::vector<std::string> warnings;
};

struct SpinDynamicsOptions {
    int fock_cutoff = 2;
    double reset_rate_factor = 0.02;  // pinning rate as a fraction of gamma_s
};

// Optical pumping of transition 1 (prepares |down>) or 4 (prepares |up>)
// for a given duration, from the equal ground mixture, using the engine.
PumpResult pump_spin(const DeviceParameters& params, const LevelStructure& levels,
                     int pump_transition, double duration_ps,
                     const SpinDynamicsOptions& opts = {});

// Closed-form two-level rate-equation tier used as a cross-check.
PumpResult pump_spin_rate_equation(const DeviceParameters& params, const LevelStructure& levels,
                                   int pump_transition, double duration_ps);

// Duration after which the rate-equation fidelity is within ~0.1% of its
// asymptote; used by scenarios to pick a pumping time.
double pump_saturation_duration_ps(const DeviceParameters& params, const LevelStructure& levels,
                                   int pump_transition);

struct SpinResolvedEmission {
    Spectrum stokes;             // sampled near omega_L - E_z
    Spectrum antistokes;         // sampled near omega_L + E_z
    double stokes_weight = 0.0;  // integrated narrow-line fluxes
    double antistokes_weight = 0.0;
};

// Emission conditioned on the initialized spin: a linear combination of the
// two pinned-spin conditional spectra weighted by the occupations.
SpinResolvedEmission spin_resolved_raman(const DeviceParameters& params,
                                         const LevelStructure& levels, const SpinState& initial,
                                         double laser_energy,
                                         const SpinDynamicsOptions& opts = {});

// Fig. 5c geometry: rapid co-tunneling keeps the spin unpolarized.
SpinResolvedEmission randomized_spin_raman(const DeviceParameters& params,
                                           const LevelStructure& levels, double laser_energy,
                                           const SpinDynamicsOptions& opts = {});

} // namespace spinraman
