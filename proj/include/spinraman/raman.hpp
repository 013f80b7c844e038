// Closed-form second-order Raman emission model: cavity density of states,
// Stokes / anti-Stokes intensities, excitation spectra, sideband lineshapes
// and the spin-selectivity curve. Spin populations are assumed equal and
// saturation is ignored; population dynamics live in the Lindblad engine.
#pragma once

#include <span>
#include <utility>

#include "spinraman/device.hpp"
#include "spinraman/spectrum.hpp"

namespace spinraman {

struct RamanIntensities {
    double stokes = 0.0;            // I_S, relative
    double antistokes = 0.0;        // I_AS, relative
    double laser_energy = 0.0;      // omega_L, ueV
    double stokes_energy = 0.0;     // omega_L - E_z_e
    double antistokes_energy = 0.0; // omega_L + E_z_e
};

// Lorentzian cavity photon density of states, peak value 1 at omega_c.
double cavity_dos(double omega, double cavity_energy, double cavity_hwhm);

RamanIntensities raman_intensities(double laser_energy, const DeviceParameters& params,
                                   const LevelStructure& levels);

// Per-sample Raman intensities over a laser grid: (I_S spectrum, I_AS spectrum).
std::pair<Spectrum, Spectrum> excitation_spectrum(std::span<const double> laser_grid,
                                                  const DeviceParameters& params,
                                                  const LevelStructure& levels);

// Which sideband is held at the cavity peak while sweeping the field.
enum class PinnedSideband { antistokes, stokes };

// (I_AS - I_S)/(I_AS + I_S) with the pinned sideband at the cavity peak,
// i.e. omega_L = omega_c -/+ E_z_e(B). Throws PhysicsError when both
// intensities vanish (dark emitter).
double selectivity(double field_t, const DeviceParameters& params,
                   PinnedSideband pinned = PinnedSideband::antistokes);

// Emission spectrum near the two sidebands: Lorentzians of FWHM
// 2*spin_dephasing_rate centered at omega_L -/+ E_z_e, peak-scaled by the
// Raman intensities.
Spectrum sideband_lineshape(double laser_energy, const DeviceParameters& params,
                            const LevelStructure& levels);
Spectrum sideband_lineshape(double laser_energy, const DeviceParameters& params,
                            const LevelStructure& levels, std::span<const double> grid);

} // namespace spinraman
