#include "spinraman/spin.hpp"

#include <algorithm>
#include <cmath>

#include "spinraman/errors.hpp"
#include "spinraman/units.hpp"

namespace spinraman {

void SpinState::validate() const {
    if (p_up < -1e-12 || p_down < -1e-12 || std::abs(p_up + p_down - 1.0) > 1e-12)
        throw PhysicsError("spin state populations must be a probability vector");
    if (std::norm(coherence) > p_up * p_down + 1e-12)
        throw PhysicsError("spin coherence exceeds the population bound");
}

double RelaxationModel::gamma_ct(CotunnelingRegime r) const {
    if (t1_points.empty()) throw ConfigError("relaxation model has no T1 points");
    const double t1 = t1_points.front().t1_ps;
    const double center = units::hbar_uev_ps / (2.0 * t1);
    return r == CotunnelingRegime::plateau_center ? center : center * plateau_edge_factor;
}

RelaxationModel RelaxationModel::measured_default() {
    RelaxationModel m;
    m.t1_points = {{5.2, units::us_to_ps(20.0)}, {16.0, units::ns_to_ps(70.0)}};
    return m;
}

double interpolate_t1(double temperature_k, const RelaxationModel& model) {
    const auto& pts = model.t1_points;
    if (pts.size() < 2) throw ConfigError("interpolate_t1: need at least two T1 points");
    for (const auto& p : pts)
        if (p.t1_ps <= 0.0) throw ConfigError("interpolate_t1: T1 must be positive");
    if (temperature_k < pts.front().temperature_k || temperature_k > pts.back().temperature_k)
        throw ConfigError("interpolate_t1: temperature outside the tabulated span");
    auto hi = std::lower_bound(pts.begin(), pts.end(), temperature_k,
                               [](const RelaxationModel::T1Point& p, double t) {
                                   return p.temperature_k < t;
                               });
    if (hi == pts.begin()) return hi->t1_ps;
    const auto lo = hi - 1;
    if (hi == pts.end()) return lo->t1_ps;
    const double f = (temperature_k - lo->temperature_k) / (hi->temperature_k - lo->temperature_k);
    return std::exp(std::log(lo->t1_ps) + f * (std::log(hi->t1_ps) - std::log(lo->t1_ps)));
}

namespace {

const Transition& pump_leg(const LevelStructure& levels, int pump_transition) {
    if (pump_transition != 1 && pump_transition != 4)
        throw ConfigError("pump_spin: pump_transition must be 1 or 4");
    const Transition& leg = levels.transition(pump_transition);
    if (leg.cavity_coupled) throw ConfigError("pump_spin: pump transition must be cross-polarized");
    return leg;
}

QdState pump_target(const Transition& leg) { return leg.ground == kDown ? kUp : kDown; }

// Scattering rate out of the pumped ground state and its branching towards
// the target spin, from the channel rates and the dressed optical width.
struct PumpRates {
    double out_rate = 0.0;     // ueV, per source occupation
    double to_target = 0.0;    // ueV
};

PumpRates analytic_pump_rates(const DeviceParameters& params, const LevelStructure& levels,
                              const Transition& leg) {
    const auto line = dressed_transition(params, levels, leg.role);
    const double gamma2 = 0.5 * line.fwhm;  // resonant coherence decay
    const double omega = params.drive_rabi * leg.dipole;
    const double scatter = 0.5 * omega * omega / gamma2;  // resonant weak-drive limit

    // Branching of the trion towards the opposite spin: free-space branch plus
    // the Purcell-enhanced cavity leg.
    const QdState trion = leg.trion;
    const QdState other_ground = pump_target(leg);
    const double mu_same2 = std::pow(params.dipole(trion, leg.ground), 2);
    const double mu_other2 = std::pow(params.dipole(trion, other_ground), 2);
    const double total_mu2 = mu_same2 + mu_other2;
    double to_other = total_mu2 > 0.0 ? params.radiative_rate * mu_other2 / total_mu2 : 0.0;
    double back = total_mu2 > 0.0 ? params.radiative_rate * mu_same2 / total_mu2 : 0.0;
    DeviceParameters bare = params;
    bare.qd_cavity_coupling = 0.0;
    const double purcell = line.fwhm - dressed_transition(bare, levels, leg.role).fwhm;
    to_other += std::max(purcell, 0.0);  // cavity leg always flips the spin

    PumpRates r;
    const double branch = to_other + back > 0.0 ? to_other / (to_other + back) : 0.0;
    r.out_rate = scatter;
    r.to_target = scatter * branch;
    return r;
}

} // namespace

PumpResult pump_spin(const DeviceParameters& params, const LevelStructure& levels,
                     int pump_transition, double duration_ps, const SpinDynamicsOptions& opts) {
    if (duration_ps < 0.0) throw ConfigError("pump_spin: duration must be >= 0");
    const Transition& leg = pump_leg(levels, pump_transition);
    const QdState target = pump_target(leg);

    PumpResult result;
    if (duration_ps == 0.0) {
        result.state = SpinState::mixed();
        result.fidelity = 0.5;
        return result;
    }

    const PumpRates rates = analytic_pump_rates(params, levels, leg);
    if (rates.to_target < 10.0 * params.spin_flip_rate)
        result.warnings.push_back(
            "pumping rate is not large against the co-tunneling rate; initialization will be "
            "ineffective (plateau-edge bias?)");

    ModelOptions mopts;
    mopts.drive_only = leg.role;
    // pump on the dressed resonance (the observed line, cavity pull included)
    const double laser = dressed_transition(params, levels, leg.role).energy;
    const LindbladModel model = build_model(params, levels, laser, opts.fock_cutoff, mopts);
    MasterSolver solver(model);

    DensityMatrix rho0;
    const int dim = model.space.dim();
    rho0.rho = Eigen::MatrixXcd::Zero(dim, dim);
    rho0.rho(model.space.index(kDown, 0), model.space.index(kDown, 0)) = 0.5;
    rho0.rho(model.space.index(kUp, 0), model.space.index(kUp, 0)) = 0.5;

    EvolveOptions eopts;
    eopts.method = EvolveOptions::Method::expm;
    const std::vector<double> times = {duration_ps};
    const auto states = solver.evolve(rho0, times, eopts);
    const auto& rho = states.back().rho;

    double p_down = 0.0, p_up = 0.0;
    for (int n = 0; n <= model.space.fock_cutoff; ++n) {
        p_down += std::real(rho(model.space.index(kDown, n), model.space.index(kDown, n)));
        p_up += std::real(rho(model.space.index(kUp, n), model.space.index(kUp, n)));
    }
    std::complex<double> coh = 0.0;
    for (int n = 0; n <= model.space.fock_cutoff; ++n)
        coh += rho(model.space.index(kUp, n), model.space.index(kDown, n));
    const double ground_total = p_down + p_up;
    if (ground_total <= 0.0) throw PhysicsError("pump_spin: no ground population left");

    result.state.p_down = p_down / ground_total;
    result.state.p_up = p_up / ground_total;
    result.state.coherence = coh / ground_total;
    result.state.validate();
    result.fidelity = target == kUp ? result.state.p_up : result.state.p_down;
    return result;
}

PumpResult pump_spin_rate_equation(const DeviceParameters& params, const LevelStructure& levels,
                                   int pump_transition, double duration_ps) {
    if (duration_ps < 0.0) throw ConfigError("pump_spin: duration must be >= 0");
    const Transition& leg = pump_leg(levels, pump_transition);
    const QdState target = pump_target(leg);
    const PumpRates rates = analytic_pump_rates(params, levels, leg);

    const double flips = params.spin_flip_rate;
    const double relax = rates.to_target + 2.0 * flips;  // 1/e rate of p_target
    const double p_inf = relax > 0.0 ? (rates.to_target + flips) / relax : 0.5;
    const double decay = relax > 0.0
                             ? std::exp(-relax * units::evolution_time(duration_ps))
                             : 1.0;
    const double p_target = p_inf + (0.5 - p_inf) * decay;

    PumpResult result;
    result.state.p_up = target == kUp ? p_target : 1.0 - p_target;
    result.state.p_down = 1.0 - result.state.p_up;
    result.fidelity = p_target;
    return result;
}

double pump_saturation_duration_ps(const DeviceParameters& params, const LevelStructure& levels,
                                   int pump_transition) {
    const Transition& leg = pump_leg(levels, pump_transition);
    const PumpRates rates = analytic_pump_rates(params, levels, leg);
    const double relax = rates.to_target + 2.0 * params.spin_flip_rate;
    if (relax <= 0.0) throw PhysicsError("pump_saturation_duration_ps: no relaxation channel");
    return 7.0 * units::hbar_uev_ps / relax;
}

namespace {

SpinResolvedEmission conditional_emission(const DeviceParameters& params,
                                          const LevelStructure& levels, double laser_energy,
                                          QdState pinned, const SpinDynamicsOptions& opts) {
    ModelOptions mopts;
    const double reset = std::max(opts.reset_rate_factor * params.spin_dephasing_rate, 1e-5);
    if (pinned == kDown) {
        mopts.flip_down_to_up = 0.0;
        mopts.flip_up_to_down = reset;
    } else {
        mopts.flip_down_to_up = reset;
        mopts.flip_up_to_down = 0.0;
    }
    const LindbladModel model = build_model(params, levels, laser_energy, opts.fock_cutoff, mopts);
    MasterSolver solver(model);

    const double ez = levels.electron_zeeman;
    const double pad = std::max(10.0 * params.spin_dephasing_rate, 12.0);
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * pad / 0.1)) + 1;

    SpinResolvedEmission out;
    const auto stokes_grid = linspace(laser_energy - ez - pad, laser_energy - ez + pad, n);
    const auto as_grid = linspace(laser_energy + ez - pad, laser_energy + ez + pad, n);
    out.stokes = solver.emission_spectrum(stokes_grid);
    out.antistokes = solver.emission_spectrum(as_grid);
    const auto weights = solver.raman_line_weights();
    out.stokes_weight = weights.stokes;
    out.antistokes_weight = weights.antistokes;
    return out;
}

} // namespace

SpinResolvedEmission spin_resolved_raman(const DeviceParameters& params,
                                         const LevelStructure& levels, const SpinState& initial,
                                         double laser_energy, const SpinDynamicsOptions& opts) {
    initial.validate();
    const auto down = conditional_emission(params, levels, laser_energy, kDown, opts);
    const auto up = conditional_emission(params, levels, laser_energy, kUp, opts);

    SpinResolvedEmission out;
    out.stokes = down.stokes;
    out.antistokes = down.antistokes;
    for (std::size_t i = 0; i < out.stokes.size(); ++i) {
        out.stokes.values[i] = initial.p_down * down.stokes.values[i] +
                               initial.p_up * up.stokes.values[i];
        out.antistokes.values[i] = initial.p_down * down.antistokes.values[i] +
                                   initial.p_up * up.antistokes.values[i];
    }
    out.stokes_weight = initial.p_down * down.stokes_weight + initial.p_up * up.stokes_weight;
    out.antistokes_weight =
        initial.p_down * down.antistokes_weight + initial.p_up * up.antistokes_weight;
    return out;
}

SpinResolvedEmission randomized_spin_raman(const DeviceParameters& params,
                                           const LevelStructure& levels, double laser_energy,
                                           const SpinDynamicsOptions& opts) {
    return spin_resolved_raman(params, levels, SpinState::mixed(), laser_energy, opts);
}

} // namespace spinraman
