#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "spinraman/device.hpp"
#include "spinraman/errors.hpp"
#include "spinraman/lindblad.hpp"
#include "spinraman/units.hpp"

using namespace spinraman;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

DeviceParameters base_params() {
    DeviceParameters p;
    p.finalize();
    return p;
}

DensityMatrix pure_state(const HilbertSpace& space, int qd, int photons) {
    DensityMatrix d;
    d.rho = MatrixXcd::Zero(space.dim(), space.dim());
    d.rho(space.index(qd, photons), space.index(qd, photons)) = 1.0;
    return d;
}

double population(const DensityMatrix& d, const HilbertSpace& space, int qd) {
    double p = 0.0;
    for (int n = 0; n <= space.fock_cutoff; ++n)
        p += std::real(d.rho(space.index(qd, n), space.index(qd, n)));
    return p;
}

double trace_distance(const MatrixXcd& a, const MatrixXcd& b) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a - b);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

} // namespace

TEST_CASE("liouvillian annihilates the trace functional") {
    auto p = base_params();
    const auto levels = build_level_structure(p);
    const auto model = build_model(p, levels, p.cavity_energy, 2);
    MasterSolver solver(model);
    const auto& liouv = solver.generator();
    const int n = model.space.dim();
    VectorXcd tr_vec = VectorXcd::Zero(n * n);
    for (int i = 0; i < n; ++i) tr_vec(i + n * i) = 1.0;
    const double col_sums = (tr_vec.adjoint() * liouv).norm();
    CHECK(col_sums <= 1e-12 * liouv.norm());
}

TEST_CASE("hamiltonian structure") {
    auto p = base_params();
    const auto levels = build_level_structure(p);
    const auto model = build_model(p, levels, levels.leg(LegRole::as_pump).energy, 2);
    const double scale = model.hamiltonian.cwiseAbs().maxCoeff();
    CHECK((model.hamiltonian - model.hamiltonian.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK_THROWS_AS(build_model(p, levels, p.cavity_energy, 0), ConfigError);

    // undriven and uncoupled: block diagonal in the QD/photon basis
    DeviceParameters q = p;
    q.drive_rabi = 0.0;
    q.qd_cavity_coupling = 0.0;
    const auto m2 = build_model(q, levels, p.cavity_energy, 2);
    for (int i = 0; i < m2.space.dim(); ++i)
        for (int j = 0; j < m2.space.dim(); ++j)
            if (i != j) CHECK(std::abs(m2.hamiltonian(i, j)) == 0.0);
}

TEST_CASE("undriven steady state is an equal spin mixture with no photons") {
    auto p = base_params();
    p.drive_rabi = 0.0;
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 2));
    const auto& ss = solver.steady_state();
    ss.validate();
    CHECK(population(ss, solver.model().space, kDown) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(population(ss, solver.model().space, kUp) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(solver.mean_photon_number() <= 1e-12);
    CHECK(solver.steady_state_residual() <= 1e-9);
}

TEST_CASE("undriven model without spin flips has a degenerate steady state") {
    auto p = base_params();
    p.drive_rabi = 0.0;
    p.spin_flip_rate = 0.0;
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 1));
    CHECK_THROWS_AS(solver.steady_state(), NonUniqueSteadyStateError);
}

TEST_CASE("resonant pumping of one leg polarizes the spin into the other state") {
    auto p = base_params();
    p.spin_flip_rate = 0.0;
    const auto levels = build_level_structure(p);
    // narrow pump laser on the anti-Stokes pump leg (transition 4, |down> -> T2)
    ModelOptions opts;
    opts.drive_only = LegRole::as_pump;
    MasterSolver solver(build_model(p, levels, levels.leg(LegRole::as_pump).energy, 2, opts));
    const auto& ss = solver.steady_state();
    CHECK(population(ss, solver.model().space, kUp) > 0.99);

    // with both cross-polarized legs driven, the cavity-enhanced return path
    // caps the attainable polarization below that
    MasterSolver both(build_model(p, levels, levels.leg(LegRole::as_pump).energy, 2));
    CHECK(population(both.steady_state(), both.model().space, kUp) > 0.9);
}

TEST_CASE("far-detuned weak drive matches the rate-equation excited population") {
    auto p = base_params();
    p.qd_cavity_coupling = 0.0;  // bare QD
    p.drive_rabi = 1.0;
    p.spin_flip_rate = 0.5;      // keep the ground populations pinned near 1/2
    const auto levels = build_level_structure(p);
    const double laser = p.qd_center_energy - 300.0;
    MasterSolver solver(build_model(p, levels, laser, 1));
    const auto& ss = solver.steady_state();

    const double gamma1 = p.radiative_rate;
    const double gamma2 = 0.5 * p.radiative_rate + 0.25 * p.spin_dephasing_rate +
                          0.5 * p.spin_flip_rate;
    auto two_level = [&](double detuning) {
        return 0.5 * (p.drive_rabi * p.drive_rabi / 2.0) * gamma2 /
               (gamma1 * (detuning * detuning + gamma2 * gamma2));
    };
    const double oracle = two_level(laser - levels.leg(LegRole::stokes_pump).energy) +
                          two_level(laser - levels.leg(LegRole::as_pump).energy);
    const double engine = population(ss, solver.model().space, kT1) +
                          population(ss, solver.model().space, kT2);
    CHECK(engine == doctest::Approx(oracle).epsilon(0.05));
}

TEST_CASE("evolving the steady state is a fixed point") {
    auto p = base_params();
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 2));
    const auto ss = solver.steady_state();
    const std::vector<double> times = {0.0, 50.0, 200.0, 1000.0};

    for (auto method : {EvolveOptions::Method::rk45, EvolveOptions::Method::expm}) {
        EvolveOptions opts;
        opts.method = method;
        const auto states = solver.evolve(ss, times, opts);
        REQUIRE(states.size() == times.size());
        for (const auto& s : states)
            CHECK((s.rho - ss.rho).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("free trion decay follows the radiative rate") {
    auto p = base_params();
    p.drive_rabi = 0.0;
    p.qd_cavity_coupling = 0.0;
    p.spin_flip_rate = 0.0;
    p.spin_dephasing_rate = 0.0;
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 1));
    const auto rho0 = pure_state(solver.model().space, kT1, 0);
    const std::vector<double> times = {0.0, 40.0, 80.0, 160.0};
    const auto states = solver.evolve(rho0, times);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double pop = population(states[i], solver.model().space, kT1);
        const double expected = std::exp(-p.radiative_rate * units::evolution_time(times[i]));
        CHECK(pop == doctest::Approx(expected).epsilon(1e-7));
    }
}

TEST_CASE("cavity-enhanced trion decay matches the dressed linewidth") {
    auto p = base_params();
    p.drive_rabi = 0.0;
    p.spin_flip_rate = 0.0;
    p.spin_dephasing_rate = 0.0;
    const auto levels = build_level_structure(p);

    // dressed width of the cavity-coupled leg = total T1 population decay here
    const auto line = dressed_transition(p, levels, LegRole::stokes_emit);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 2));
    const auto rho0 = pure_state(solver.model().space, kT1, 0);
    const std::vector<double> times = {0.0, 20.0, 40.0};
    const auto states = solver.evolve(rho0, times);
    const double p1 = population(states[1], solver.model().space, kT1);
    const double p2 = population(states[2], solver.model().space, kT1);
    const double rate = std::log(p1 / p2) / units::evolution_time(20.0);
    CHECK(rate == doctest::Approx(line.fwhm).epsilon(0.02));

    // and agrees with the analytic Purcell estimate
    const double delta = levels.leg(LegRole::stokes_emit).energy - p.cavity_energy;
    const double kappa = 2.0 * p.cavity_hwhm;
    const double purcell = 4.0 * std::pow(p.qd_cavity_coupling, 2) * kappa /
                           (4.0 * delta * delta + kappa * kappa);
    CHECK(rate == doctest::Approx(p.radiative_rate + purcell).epsilon(0.10));
}

TEST_CASE("trajectory invariants under both integrators") {
    auto p = base_params();
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, levels.leg(LegRole::as_pump).energy, 2));
    DensityMatrix rho0;
    const int dim = solver.model().space.dim();
    rho0.rho = MatrixXcd::Zero(dim, dim);
    rho0.rho(solver.model().space.index(kDown, 0), solver.model().space.index(kDown, 0)) = 0.5;
    rho0.rho(solver.model().space.index(kUp, 0), solver.model().space.index(kUp, 0)) = 0.5;

    const auto times = linspace(0.0, 800.0, 9);
    EvolveOptions rk;
    rk.method = EvolveOptions::Method::rk45;
    EvolveOptions ex;
    ex.method = EvolveOptions::Method::expm;
    const auto traj_rk = solver.evolve(rho0, times, rk);
    const auto traj_ex = solver.evolve(rho0, times, ex);

    for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK(traj_rk[i].trace_error() <= 1e-9);
        CHECK(traj_rk[i].hermiticity_error() <= 1e-10);
        CHECK(traj_rk[i].min_eigenvalue() >= -1e-9);
        CHECK(traj_ex[i].trace_error() <= 1e-9);
        CHECK(traj_ex[i].min_eigenvalue() >= -1e-9);
        CHECK((traj_rk[i].rho - traj_ex[i].rho).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("long evolution approaches the steady state in trace distance") {
    auto p = base_params();
    p.spin_flip_rate = 0.5;  // keep the slowest mode fast enough to converge
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 2));
    const auto& ss = solver.steady_state();
    const auto rho0 = pure_state(solver.model().space, kDown, 0);
    const std::vector<double> times = {20000.0};
    EvolveOptions opts;
    opts.method = EvolveOptions::Method::expm;
    const auto states = solver.evolve(rho0, times, opts);
    CHECK(trace_distance(states[0].rho, ss.rho) <= 1e-6);
}

TEST_CASE("stiff limit reports step-size failure for rk45") {
    auto p = base_params();
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 1));
    const auto rho0 = pure_state(solver.model().space, kDown, 0);
    EvolveOptions opts;
    opts.method = EvolveOptions::Method::rk45;
    opts.max_steps = 50;
    const std::vector<double> times = {1.0e6};
    CHECK_THROWS_AS(solver.evolve(rho0, times, opts), PhysicsError);
}

TEST_CASE("emission spectrum shows sidebands at the electron Zeeman shift") {
    auto p = base_params();
    const auto levels = build_level_structure(p);
    const double laser = p.cavity_energy;
    MasterSolver solver(build_model(p, levels, laser, 2));
    const Spectrum s = solver.emission_spectrum();
    s.validate();

    const double ez = levels.electron_zeeman;
    auto local_peak = [&](double center) {
        double best_v = -1.0;
        double best_x = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (std::abs(s.grid[i] - center) < 20.0 && s.values[i] > best_v) {
                best_v = s.values[i];
                best_x = s.grid[i];
            }
        }
        return best_x;
    };
    CHECK(std::abs(local_peak(laser + ez) - (laser + ez)) < 1.0);
    CHECK(std::abs(local_peak(laser - ez) - (laser - ez)) < 1.0);

    // spectral integral equals the steady photon flux (normalization check)
    CHECK(solver.spectrum_integral() == doctest::Approx(solver.photon_flux()).epsilon(0.01));
}

TEST_CASE("sideband width tracks the spin dephasing, not the optical width") {
    auto p = base_params();
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 2));
    const double ez = levels.electron_zeeman;
    const double laser = p.cavity_energy;
    const auto grid = linspace(laser + ez - 12.0, laser + ez + 12.0, 2401);
    const Spectrum s = solver.emission_spectrum(grid);
    const std::size_t ip = s.peak_index();
    const double half = 0.5 * s.values[ip];
    std::size_t lo = ip, hi = ip;
    while (lo > 0 && s.values[lo] > half) --lo;
    while (hi + 1 < s.size() && s.values[hi] > half) ++hi;
    const double fwhm = s.grid[hi] - s.grid[lo];
    const double expected = 2.0 * (p.spin_dephasing_rate + p.spin_flip_rate);
    CHECK(fwhm == doctest::Approx(expected).epsilon(0.10));
    CHECK(fwhm < 5.0);  // far below the 18 ueV optical width
}

TEST_CASE("g2 is antibunched at zero delay and factorizes at long delay") {
    // 6.75 T, QD tuned 150 ueV above the cavity, laser resonant with the
    // Stokes pump leg so the Stokes photon lands on the cavity: essentially
    // all cavity photons then come from one sideband.
    auto p = base_params();
    p.magnetic_field = 6.75;
    p.cavity_energy = p.qd_center_energy - 150.0;
    p.spin_flip_rate = 0.3;  // spin-refresh time ~1 ns
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, levels.leg(LegRole::stokes_pump).energy, 2));
    const auto taus = linspace(0.0, 12000.0, 601);
    const auto trace = solver.g2(taus);
    trace.validate();
    CHECK(trace.g2.front() < 0.05);
    CHECK(trace.g2.back() == doctest::Approx(1.0).epsilon(0.02));
    CHECK(trace.normalization_flux == doctest::Approx(solver.photon_flux()).epsilon(1e-10));

    // monotone-ish recovery: midpoint already well above zero
    const double mid = trace.g2[trace.size() / 4];
    CHECK(mid > 0.3);
    CHECK(mid < 1.1);
}

TEST_CASE("g2 is undefined without photon flux") {
    auto p = base_params();
    p.drive_rabi = 0.0;
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 1));
    const std::vector<double> taus = {0.0, 100.0};
    CHECK_THROWS_AS(solver.g2(taus), PhysicsError);
}

TEST_CASE("fock guard rejects overdriven configurations") {
    auto p = base_params();
    p.drive_rabi = 400.0;
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 2));
    CHECK_THROWS_WITH_AS(solver.steady_state(), doctest::Contains("Fock"), PhysicsError);
}

TEST_CASE("calibrate_coupling") {
    auto p = base_params();
    const auto levels = build_level_structure(p);

    DeviceParameters uncoupled = p;
    uncoupled.qd_cavity_coupling = 0.0;
    const double natural = dressed_transition(uncoupled, levels, LegRole::stokes_emit).fwhm;

    SUBCASE("target equal to the natural width needs no coupling") {
        CHECK(calibrate_coupling(p, levels, natural) == 0.0);
    }
    SUBCASE("target below the natural width fails") {
        CHECK_THROWS_AS(calibrate_coupling(p, levels, 0.5 * natural), CalibrationError);
    }
    SUBCASE("18 ueV target reproduces the configured default coupling") {
        const double g = calibrate_coupling(p, levels, 18.0);
        DeviceParameters q = p;
        q.qd_cavity_coupling = g;
        const auto line = dressed_transition(q, levels, LegRole::stokes_emit);
        CHECK(line.fwhm == doctest::Approx(18.0).epsilon(0.02));
        // analytic Purcell estimate agrees at the ~10% level
        const double delta = levels.leg(LegRole::stokes_emit).energy - p.cavity_energy;
        const double kappa = 2.0 * p.cavity_hwhm;
        const double purcell = 4.0 * g * g * kappa / (4.0 * delta * delta + kappa * kappa);
        CHECK(natural + purcell == doctest::Approx(18.0).epsilon(0.15));
        // the shipped default coupling is this calibration
        CHECK(p.qd_cavity_coupling == doctest::Approx(g).epsilon(0.01));
    }
}

TEST_CASE("doubling the Fock cutoff leaves observables unchanged at weak drive") {
    auto p = base_params();
    const auto levels = build_level_structure(p);
    MasterSolver s2(build_model(p, levels, p.cavity_energy, 2));
    MasterSolver s4(build_model(p, levels, p.cavity_energy, 4));

    CHECK(s2.photon_flux() == doctest::Approx(s4.photon_flux()).epsilon(1e-3));
    const auto w2 = s2.sideband_weights();
    const auto w4 = s4.sideband_weights();
    CHECK(w2.antistokes == doctest::Approx(w4.antistokes).epsilon(1e-3));
    CHECK(w2.stokes == doctest::Approx(w4.stokes).epsilon(1e-3));

    const std::vector<double> taus = {0.0};
    // g2(0) is itself ~0; compare the unnormalized two-photon moment
    const double m2a = s2.g2(taus).g2[0] * std::pow(s2.mean_photon_number(), 2);
    const double m2b = s4.g2(taus).g2[0] * std::pow(s4.mean_photon_number(), 2);
    if (m2b > 0.0) CHECK(m2a == doctest::Approx(m2b).epsilon(1e-3));

    // highest Fock level stays essentially empty
    CHECK(s2.top_fock_population(s2.steady_state()) < 1e-4);
}
