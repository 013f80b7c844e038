#include "spinraman/raman.hpp"

#include <cmath>

#include "spinraman/errors.hpp"

namespace spinraman {

double cavity_dos(double omega, double cavity_energy, double cavity_hwhm) {
    if (cavity_hwhm <= 0.0) throw ConfigError("cavity_dos: cavity half-width must be positive");
    const double detuning = omega - cavity_energy;
    return cavity_hwhm * cavity_hwhm / (detuning * detuning + cavity_hwhm * cavity_hwhm);
}

namespace {

double lambda_intensity(double laser, const Transition& pump, const Transition& emit,
                        double sideband, const DeviceParameters& p) {
    const double mu2 = pump.dipole * pump.dipole * emit.dipole * emit.dipole;
    const double detuning = laser - pump.energy;
    const double qd_lorentzian = 1.0 / (detuning * detuning + p.qd_hwhm * p.qd_hwhm);
    return mu2 * qd_lorentzian * cavity_dos(sideband, p.cavity_energy, p.cavity_hwhm);
}

} // namespace

RamanIntensities raman_intensities(double laser_energy, const DeviceParameters& params,
                                   const LevelStructure& levels) {
    RamanIntensities out;
    out.laser_energy = laser_energy;
    out.stokes_energy = laser_energy - levels.electron_zeeman;
    out.antistokes_energy = laser_energy + levels.electron_zeeman;
    out.stokes = lambda_intensity(laser_energy, levels.leg(LegRole::stokes_pump),
                                  levels.leg(LegRole::stokes_emit), out.stokes_energy, params);
    out.antistokes = lambda_intensity(laser_energy, levels.leg(LegRole::as_pump),
                                      levels.leg(LegRole::as_emit), out.antistokes_energy, params);
    return out;
}

std::pair<Spectrum, Spectrum> excitation_spectrum(std::span<const double> laser_grid,
                                                  const DeviceParameters& params,
                                                  const LevelStructure& levels) {
    if (laser_grid.empty()) throw ConfigError("excitation_spectrum: empty laser grid");
    Spectrum stokes, antistokes;
    stokes.grid.assign(laser_grid.begin(), laser_grid.end());
    antistokes.grid = stokes.grid;
    stokes.values.resize(laser_grid.size());
    antistokes.values.resize(laser_grid.size());
    if (laser_grid.size() >= 2) {
        stokes.grid_spacing = laser_grid[1] - laser_grid[0];
        antistokes.grid_spacing = stokes.grid_spacing;
    }
    for (std::size_t i = 0; i < laser_grid.size(); ++i) {
        const auto ri = raman_intensities(laser_grid[i], params, levels);
        stokes.values[i] = ri.stokes;
        antistokes.values[i] = ri.antistokes;
    }
    stokes.validate();
    antistokes.validate();
    return {std::move(stokes), std::move(antistokes)};
}

double selectivity(double field_t, const DeviceParameters& params, PinnedSideband pinned) {
    DeviceParameters p = params;
    p.magnetic_field = field_t;  // rejects negative B via zeeman_splitting
    const LevelStructure levels = build_level_structure(p);
    const double laser = pinned == PinnedSideband::antistokes
                             ? p.cavity_energy - levels.electron_zeeman
                             : p.cavity_energy + levels.electron_zeeman;
    const auto ri = raman_intensities(laser, p, levels);
    const double total = ri.antistokes + ri.stokes;
    if (total <= 0.0) throw PhysicsError("selectivity undefined: both Raman intensities vanish");
    return (ri.antistokes - ri.stokes) / total;
}

Spectrum sideband_lineshape(double laser_energy, const DeviceParameters& params,
                            const LevelStructure& levels, std::span<const double> grid) {
    if (grid.empty()) throw ConfigError("sideband_lineshape: empty grid");
    if (params.spin_dephasing_rate <= 0.0)
        throw ConfigError("sideband_lineshape: spin_dephasing_rate must be positive");
    const auto ri = raman_intensities(laser_energy, params, levels);
    const double hw = params.spin_dephasing_rate;  // Lorentzian HWHM, FWHM = 2*gamma_s
    Spectrum s;
    s.grid.assign(grid.begin(), grid.end());
    s.values.resize(grid.size());
    if (grid.size() >= 2) s.grid_spacing = grid[1] - grid[0];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double ds = grid[i] - ri.stokes_energy;
        const double da = grid[i] - ri.antistokes_energy;
        s.values[i] = ri.stokes * hw * hw / (ds * ds + hw * hw) +
                      ri.antistokes * hw * hw / (da * da + hw * hw);
    }
    s.validate();
    return s;
}

Spectrum sideband_lineshape(double laser_energy, const DeviceParameters& params,
                            const LevelStructure& levels) {
    const double pad = std::max(10.0 * params.spin_dephasing_rate, 15.0);
    const double half_span = levels.electron_zeeman + pad;
    const double spacing = 0.1;
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * half_span / spacing)) + 1;
    const auto grid = linspace(laser_energy - half_span, laser_energy + half_span, n);
    return sideband_lineshape(laser_energy, params, levels, grid);
}

} // namespace spinraman
