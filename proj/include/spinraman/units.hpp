// Unit conventions used throughout: energies and rates in ueV (hbar = 1
// internally), times in ps, magnetic field in T. A rate quoted in ueV is the
// energy full width the channel alone would impose on a Lorentzian line;
// divide by hbar_uev_ps to get an exponential rate in 1/ps.
#pragma once

#include <numbers>

namespace spinraman::units {

inline constexpr double hbar_uev_ps = 658.2119569;       // ueV * ps
inline constexpr double h_uev_per_ghz = 4.135667697;     // ueV / GHz
inline constexpr double mu_bohr_uev_per_t = 57.8838;     // ueV / T

constexpr double ghz_to_uev(double f_ghz) { return f_ghz * h_uev_per_ghz; }
constexpr double uev_to_ghz(double e_uev) { return e_uev / h_uev_per_ghz; }
constexpr double mev_to_uev(double e_mev) { return e_mev * 1.0e3; }
constexpr double uev_to_mev(double e_uev) { return e_uev * 1.0e-3; }
constexpr double ns_to_ps(double t_ns) { return t_ns * 1.0e3; }
constexpr double us_to_ps(double t_us) { return t_us * 1.0e6; }

// Lifetime <-> energy width of the corresponding exponential decay.
constexpr double rate_uev_from_lifetime_ps(double t_ps) { return hbar_uev_ps / t_ps; }
constexpr double lifetime_ps_from_rate_uev(double r_uev) { return hbar_uev_ps / r_uev; }

// Dimensionless evolution parameter tau' = t / hbar used by the solvers.
constexpr double evolution_time(double t_ps) { return t_ps / hbar_uev_ps; }

} // namespace spinraman::units
