#include "spinraman/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "spinraman/errors.hpp"
#include "spinraman/units.hpp"

namespace spinraman {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using std::complex;

namespace {

const complex<double> kI(0.0, 1.0);

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
    MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// vec(rho) stacks columns; vec(A X B) = (B^T kron A) vec(X).
MatrixXcd liouvillian_matrix(const LindbladModel& m) {
    const Eigen::Index n = m.hamiltonian.rows();
    const MatrixXcd id = MatrixXcd::Identity(n, n);
    MatrixXcd liouv = -kI * (kron(id, m.hamiltonian) - kron(m.hamiltonian.transpose(), id));
    for (const auto& ch : m.channels) {
        if (ch.rate == 0.0) continue;
        const MatrixXcd cdc = ch.op.adjoint() * ch.op;
        liouv += ch.rate * (kron(ch.op.conjugate(), ch.op) -
                            0.5 * kron(id, cdc) - 0.5 * kron(cdc.transpose(), id));
    }
    return liouv;
}

VectorXcd vec(const MatrixXcd& m) {
    return Eigen::Map<const VectorXcd>(m.data(), m.size());
}

MatrixXcd unvec(const VectorXcd& v, Eigen::Index n) {
    return Eigen::Map<const MatrixXcd>(v.data(), n, n);
}

MatrixXcd qd_projector(const HilbertSpace& space, int qd_state) {
    const int n = space.dim();
    MatrixXcd p = MatrixXcd::Zero(n, n);
    for (int k = 0; k <= space.fock_cutoff; ++k) {
        const int i = space.index(qd_state, k);
        p(i, i) = 1.0;
    }
    return p;
}

MatrixXcd qd_lowering(const HilbertSpace& space, int ground, int trion) {
    const int n = space.dim();
    MatrixXcd op = MatrixXcd::Zero(n, n);
    for (int k = 0; k <= space.fock_cutoff; ++k)
        op(space.index(ground, k), space.index(trion, k)) = 1.0;
    return op;
}

MatrixXcd photon_annihilator(const HilbertSpace& space) {
    const int n = space.dim();
    MatrixXcd a = MatrixXcd::Zero(n, n);
    for (int k = 1; k <= space.fock_cutoff; ++k)
        for (int q = 0; q < HilbertSpace::qd_dim; ++q)
            a(space.index(q, k - 1), space.index(q, k)) = std::sqrt(static_cast<double>(k));
    return a;
}

const char* leg_name(LegRole role) {
    switch (role) {
        case LegRole::stokes_pump: return "stokes_pump";
        case LegRole::as_emit: return "as_emit";
        case LegRole::stokes_emit: return "stokes_emit";
        case LegRole::as_pump: return "as_pump";
    }
    return "?";
}

} // namespace

void LindbladModel::validate() const {
    const double scale = std::max(1.0, hamiltonian.cwiseAbs().maxCoeff());
    const double herm = (hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-12 * scale) throw PhysicsError("model Hamiltonian is not Hermitian");
    for (const auto& ch : channels)
        if (ch.rate < 0.0) throw PhysicsError("negative collapse rate: " + ch.label);
}

LindbladModel build_model(const DeviceParameters& params, const LevelStructure& levels,
                          double laser_energy, int fock_cutoff, const ModelOptions& opts) {
    if (fock_cutoff < 1) throw ConfigError("build_model: fock_cutoff must be >= 1");

    LindbladModel m;
    m.space.fock_cutoff = fock_cutoff;
    m.laser_energy = laser_energy;
    m.kappa = 2.0 * params.cavity_hwhm;
    m.fock_guard = opts.fock_guard;
    m.params = params;
    m.levels = levels;

    const int n = m.space.dim();
    m.annihilator = photon_annihilator(m.space);
    m.number_op = m.annihilator.adjoint() * m.annihilator;

    const double detuning_c = params.cavity_energy - laser_energy;
    MatrixXcd h = detuning_c * m.number_op;
    h += levels.ground_energies[0] * qd_projector(m.space, kDown);
    h += levels.ground_energies[1] * qd_projector(m.space, kUp);
    h += (levels.trion_energies[0] - laser_energy) * qd_projector(m.space, kT1);
    h += (levels.trion_energies[1] - laser_energy) * qd_projector(m.space, kT2);

    const double cos_mix = std::cos(params.polarization_mixing_angle);
    const double sin_mix = std::sin(params.polarization_mixing_angle);
    for (const auto& leg : levels.transitions) {
        const MatrixXcd lower = qd_lowering(m.space, leg.ground, leg.trion);
        double drive_w = leg.dipole * (leg.cavity_coupled ? sin_mix : cos_mix);
        if (opts.drive_only && leg.role != *opts.drive_only) drive_w = 0.0;
        const double cavity_w = leg.dipole * (leg.cavity_coupled ? cos_mix : sin_mix);
        if (drive_w != 0.0 && params.drive_rabi != 0.0) {
            const MatrixXcd term = 0.5 * params.drive_rabi * drive_w * lower;
            h += term + term.adjoint();
        }
        if (cavity_w != 0.0 && params.qd_cavity_coupling != 0.0) {
            const MatrixXcd term =
                params.qd_cavity_coupling * cavity_w * m.annihilator.adjoint() * lower;
            h += term + term.adjoint();
        }
    }
    m.hamiltonian = 0.5 * (h + h.adjoint().eval());

    m.channels.push_back({m.annihilator, m.kappa, "cavity_decay"});

    // Radiative decay split across the two legs of each trion by dipole branch.
    for (QdState trion : {kT1, kT2}) {
        const double mu_up2 = std::pow(params.dipole(trion, kUp), 2);
        const double mu_dn2 = std::pow(params.dipole(trion, kDown), 2);
        const double total = mu_up2 + mu_dn2;
        if (total <= 0.0 || params.radiative_rate <= 0.0) continue;
        const std::string tname = trion == kT1 ? "T1" : "T2";
        m.channels.push_back({qd_lowering(m.space, kUp, trion),
                              params.radiative_rate * mu_up2 / total, "radiative_" + tname + "_up"});
        m.channels.push_back({qd_lowering(m.space, kDown, trion),
                              params.radiative_rate * mu_dn2 / total, "radiative_" + tname + "_down"});
    }

    // Ground-doublet pure dephasing; rate gamma_s/2 on sigma_z gives the spin
    // coherence an energy HWHM of gamma_s, i.e. Raman sidebands of FWHM
    // 2*gamma_s.
    if (params.spin_dephasing_rate > 0.0) {
        const MatrixXcd sz = qd_projector(m.space, kUp) - qd_projector(m.space, kDown);
        m.channels.push_back({sz, 0.5 * params.spin_dephasing_rate, "spin_dephasing"});
    }

    const double flip_du = opts.flip_down_to_up.value_or(params.spin_flip_rate);
    const double flip_ud = opts.flip_up_to_down.value_or(params.spin_flip_rate);
    if (flip_du > 0.0) {
        MatrixXcd op = MatrixXcd::Zero(n, n);
        for (int k = 0; k <= fock_cutoff; ++k)
            op(m.space.index(kUp, k), m.space.index(kDown, k)) = 1.0;
        m.channels.push_back({op, flip_du, "spin_flip_down_to_up"});
    }
    if (flip_ud > 0.0) {
        MatrixXcd op = MatrixXcd::Zero(n, n);
        for (int k = 0; k <= fock_cutoff; ++k)
            op(m.space.index(kDown, k), m.space.index(kUp, k)) = 1.0;
        m.channels.push_back({op, flip_ud, "spin_flip_up_to_down"});
    }

    if (opts.trion_dephasing > 0.0) {
        const MatrixXcd pt = qd_projector(m.space, kT1) + qd_projector(m.space, kT2);
        m.channels.push_back({pt, opts.trion_dephasing, "trion_dephasing"});
    }

    m.validate();
    return m;
}

double DensityMatrix::trace_error() const { return std::abs(rho.trace() - 1.0); }

double DensityMatrix::hermiticity_error() const {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (rho + rho.adjoint()));
    return es.eigenvalues().minCoeff();
}

void DensityMatrix::validate(double trace_tol, double herm_tol, double min_eig) const {
    if (trace_error() > trace_tol) throw PhysicsError("density matrix trace differs from 1");
    if (hermiticity_error() > herm_tol) throw PhysicsError("density matrix is not Hermitian");
    if (min_eigenvalue() < min_eig) throw PhysicsError("density matrix has a negative eigenvalue");
}

// ---------------------------------------------------------------------------

namespace {

struct SpectrumExpansion {
    VectorXcd coeffs;       // c_k excluding the stationary mode
    VectorXcd lambdas;      // matching eigenvalues
    double coherent = 0.0;  // Re c_0 of the stationary mode = |<a>|^2
};

struct SpectrumEval {
    // S_inc(nu) = (kappa/pi) sum_k Re[-c_k / (lambda_k + i nu)]
    static double value(const SpectrumExpansion& ex, double kappa, double nu) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < ex.coeffs.size(); ++k) {
            const complex<double> den = ex.lambdas(k) + kI * nu;
            acc += std::real(-ex.coeffs(k) / den);
        }
        return kappa / M_PI * acc;
    }

    // Exact integral of S_inc over [nu1, nu2].
    static double integral(const SpectrumExpansion& ex, double kappa, double nu1, double nu2) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < ex.coeffs.size(); ++k) {
            const double r = -std::real(ex.lambdas(k));
            const double s = std::imag(ex.lambdas(k));
            const double re_c = std::real(ex.coeffs(k));
            const double im_c = std::imag(ex.coeffs(k));
            const double u2 = s + nu2, u1 = s + nu1;
            acc += re_c * (std::atan2(u2, r) - std::atan2(u1, r));
            acc -= 0.5 * im_c * std::log((r * r + u2 * u2) / (r * r + u1 * u1));
        }
        return kappa / M_PI * acc;
    }
};

} // namespace

struct MasterSolver::Impl {
    LindbladModel model;
    MatrixXcd liouv;
    double liouv_fro = 0.0;
    double liouv_row_norm = 0.0;

    bool steady_done = false;
    DensityMatrix steady;
    double steady_resid = 0.0;

    bool eig_done = false;
    bool eig_ok = false;
    VectorXcd evals;
    MatrixXcd evecs;
    std::optional<Eigen::PartialPivLU<MatrixXcd>> evec_lu;
    double eig_residual = 0.0;
    Eigen::Index stationary_mode = -1;

    std::map<double, MatrixXcd> propagators;  // keyed by tau' gap

    explicit Impl(LindbladModel m) : model(std::move(m)) {
        model.validate();
        liouv = liouvillian_matrix(model);
        liouv_fro = liouv.norm();
        liouv_row_norm = liouv.cwiseAbs().rowwise().sum().maxCoeff();
    }

    void solve_steady() {
        if (steady_done) return;
        Eigen::JacobiSVD<MatrixXcd> svd(liouv, Eigen::ComputeThinV);
        const auto& sing = svd.singularValues();
        const double smax = sing(0);
        int null_dim = 0;
        for (Eigen::Index i = 0; i < sing.size(); ++i)
            if (sing(i) <= 1e-10 * smax) ++null_dim;
        if (null_dim > 1)
            throw NonUniqueSteadyStateError(
                "steady state is not unique (null space dimension " + std::to_string(null_dim) + ")");
        const Eigen::Index n = model.hamiltonian.rows();
        VectorXcd v = svd.matrixV().col(sing.size() - 1);
        MatrixXcd rho = unvec(v, n);
        const complex<double> tr = rho.trace();
        if (std::abs(tr) < 1e-8 * rho.norm())
            throw NonUniqueSteadyStateError("steady-state candidate is traceless");
        rho /= tr;
        rho = 0.5 * (rho + rho.adjoint().eval());
        steady.rho = rho;
        steady_resid = (liouv * vec(rho)).norm() / (liouv_fro * vec(rho).norm());
        if (steady_resid > 1e-9)
            throw PhysicsError("steady-state residual exceeds 1e-9");
        steady_done = true;
        check_fock_guard(steady);
    }

    void check_fock_guard(const DensityMatrix& state) const {
        if (model.fock_guard <= 0.0) return;
        double top = 0.0;
        for (int q = 0; q < HilbertSpace::qd_dim; ++q) {
            const int i = model.space.index(q, model.space.fock_cutoff);
            top += std::real(state.rho(i, i));
        }
        if (top > model.fock_guard) {
            std::ostringstream msg;
            msg << "highest Fock level population " << top << " exceeds guard "
                << model.fock_guard << "; increase the Fock cutoff (N_max = "
                << model.space.fock_cutoff << ")";
            throw PhysicsError(msg.str());
        }
    }

    void decompose() {
        if (eig_done) return;
        eig_done = true;
        Eigen::ComplexEigenSolver<MatrixXcd> es(liouv);
        if (es.info() != Eigen::Success) { eig_ok = false; return; }
        evals = es.eigenvalues();
        evecs = es.eigenvectors();
        evec_lu.emplace(evecs);
        eig_residual = (liouv * evecs - evecs * evals.asDiagonal()).norm() / liouv_fro;
        eig_ok = eig_residual < 1e-8;
        stationary_mode = 0;
        for (Eigen::Index k = 1; k < evals.size(); ++k)
            if (std::abs(evals(k)) < std::abs(evals(stationary_mode))) stationary_mode = k;
    }

    // Expansion coefficients c_k with C(tau') = sum_k c_k exp(lambda_k tau')
    // for C(tau) = Tr[readout * exp(L tau)(initial)].
    VectorXcd mode_coefficients(const MatrixXcd& readout, const MatrixXcd& initial) {
        decompose();
        if (!eig_ok) throw PhysicsError("Liouvillian eigendecomposition unreliable");
        const VectorXcd alpha = evec_lu->solve(vec(initial));
        const VectorXcd beta = evecs.adjoint() * vec(readout);
        return beta.conjugate().cwiseProduct(alpha);
    }

    const MatrixXcd& propagator(double dtau) {
        auto it = propagators.find(dtau);
        if (it != propagators.end()) return it->second;
        MatrixXcd p = (liouv * dtau).exp();
        return propagators.emplace(dtau, std::move(p)).first->second;
    }

    SpectrumExpansion emission_expansion() {
        solve_steady();
        const MatrixXcd& a = model.annihilator;
        const MatrixXcd initial = steady.rho * a.adjoint();
        // C(tau) = <a'(0) a(tau)> = Tr[a exp(L tau)(rho a')]
        decompose();
        if (!eig_ok) throw PhysicsError("emission_spectrum: eigendecomposition unreliable");
        const VectorXcd alpha = evec_lu->solve(vec(initial));
        const VectorXcd beta = evecs.adjoint() * vec(MatrixXcd(a.adjoint()));
        const VectorXcd coeffs = beta.conjugate().cwiseProduct(alpha);

        SpectrumExpansion ex;
        const Eigen::Index nmodes = coeffs.size();
        ex.coeffs.resize(nmodes - 1);
        ex.lambdas.resize(nmodes - 1);
        Eigen::Index j = 0;
        for (Eigen::Index k = 0; k < nmodes; ++k) {
            if (k == stationary_mode) {
                ex.coherent = std::real(coeffs(k));
                continue;
            }
            if (std::real(evals(k)) > 0.0 && std::real(evals(k)) > 1e-10 * liouv_row_norm)
                throw PhysicsError("emission_spectrum: Liouvillian has a growing mode");
            ex.coeffs(j) = coeffs(k);
            // Clamp decay rates away from zero so the mode integrals stay finite.
            const double re = std::min(std::real(evals(k)), -1e-14 * std::max(liouv_row_norm, 1.0));
            ex.lambdas(j) = complex<double>(re, std::imag(evals(k)));
            ++j;
        }
        return ex;
    }
};

MasterSolver::MasterSolver(LindbladModel model) : impl_(std::make_unique<Impl>(std::move(model))) {}
MasterSolver::~MasterSolver() = default;
MasterSolver::MasterSolver(MasterSolver&&) noexcept = default;
MasterSolver& MasterSolver::operator=(MasterSolver&&) noexcept = default;

const LindbladModel& MasterSolver::model() const { return impl_->model; }
const Eigen::MatrixXcd& MasterSolver::generator() const { return impl_->liouv; }

const DensityMatrix& MasterSolver::steady_state() {
    impl_->solve_steady();
    return impl_->steady;
}

double MasterSolver::steady_state_residual() {
    impl_->solve_steady();
    return impl_->steady_resid;
}

double MasterSolver::mean_photon_number() {
    impl_->solve_steady();
    return std::real((impl_->model.number_op * impl_->steady.rho).trace());
}

double MasterSolver::photon_flux() { return impl_->model.kappa * mean_photon_number(); }

double MasterSolver::top_fock_population(const DensityMatrix& state) const {
    double top = 0.0;
    for (int q = 0; q < HilbertSpace::qd_dim; ++q) {
        const int i = impl_->model.space.index(q, impl_->model.space.fock_cutoff);
        top += std::real(state.rho(i, i));
    }
    return top;
}

// --------------------------- time evolution -------------------------------

namespace {

// Dormand-Prince 5(4) pair with FSAL.
struct Rk45 {
    static constexpr double c[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double a2[1] = {1.0 / 5};
    static constexpr double a3[2] = {3.0 / 40, 9.0 / 40};
    static constexpr double a4[3] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
    static constexpr double a5[4] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
    static constexpr double a6[5] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                                     -5103.0 / 18656};
    static constexpr double b5[7] = {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
                                     11.0 / 84, 0};
    static constexpr double b4[7] = {5179.0 / 57600, 0, 7571.0 / 16695, 393.0 / 640,
                                     -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
};

double error_norm(const VectorXcd& err, const VectorXcd& y0, const VectorXcd& y1,
                  double abs_tol, double rel_tol) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = abs_tol + rel_tol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        const double e = std::abs(err(i)) / sc;
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

} // namespace

std::vector<DensityMatrix> MasterSolver::evolve(const DensityMatrix& initial,
                                                std::span<const double> times_ps,
                                                const EvolveOptions& opts) {
    if (times_ps.empty()) throw ConfigError("evolve: empty time grid");
    for (std::size_t i = 0; i < times_ps.size(); ++i) {
        if (!std::isfinite(times_ps[i]) || times_ps[i] < 0.0)
            throw ConfigError("evolve: times must be finite and >= 0");
        if (i > 0 && times_ps[i] <= times_ps[i - 1])
            throw ConfigError("evolve: times must be strictly increasing");
    }
    const Eigen::Index n = impl_->model.hamiltonian.rows();
    if (initial.rho.rows() != n || initial.rho.cols() != n)
        throw ConfigError("evolve: initial state has wrong dimension");

    std::vector<double> taus(times_ps.size());
    for (std::size_t i = 0; i < times_ps.size(); ++i) taus[i] = units::evolution_time(times_ps[i]);

    auto method = opts.method;
    if (method == EvolveOptions::Method::automatic) {
        const double est_steps = taus.back() * impl_->liouv_row_norm / 3.0;
        method = est_steps > 2.0e4 ? EvolveOptions::Method::expm : EvolveOptions::Method::rk45;
    }

    std::vector<DensityMatrix> out;
    out.reserve(times_ps.size());

    if (method == EvolveOptions::Method::expm) {
        VectorXcd y = vec(initial.rho);
        double tau_prev = 0.0;
        for (double tau : taus) {
            const double gap = tau - tau_prev;
            if (gap > 0.0) y = impl_->propagator(gap) * y;
            tau_prev = tau;
            DensityMatrix d{unvec(y, n)};
            impl_->check_fock_guard(d);
            out.push_back(std::move(d));
        }
        return out;
    }

    // Adaptive RK45 over the vectorized master equation.
    const MatrixXcd& liouv = impl_->liouv;
    VectorXcd y = vec(initial.rho);
    VectorXcd k1 = liouv * y;
    double tau = 0.0;
    double h = std::min(taus.back() > 0 ? taus.back() : 1.0, 0.1 / std::max(impl_->liouv_row_norm, 1e-12));
    std::size_t steps = 0;
    std::size_t next_sample = 0;

    auto record_if_due = [&](double at_tau, const VectorXcd& state) {
        while (next_sample < taus.size() && std::abs(taus[next_sample] - at_tau) < 1e-15 * std::max(1.0, at_tau)) {
            DensityMatrix d{unvec(state, n)};
            impl_->check_fock_guard(d);
            out.push_back(std::move(d));
            ++next_sample;
        }
    };

    record_if_due(0.0, y);
    while (next_sample < taus.size()) {
        if (++steps > opts.max_steps)
            throw PhysicsError("evolve: step budget exhausted (possible stiffness); tau'=" +
                               std::to_string(tau));
        const double target = taus[next_sample];
        bool clipped = false;
        if (tau + h >= target) { h = target - tau; clipped = true; }

        const VectorXcd k2 = liouv * (y + h * (Rk45::a2[0] * k1));
        const VectorXcd k3 = liouv * (y + h * (Rk45::a3[0] * k1 + Rk45::a3[1] * k2));
        const VectorXcd k4 = liouv * (y + h * (Rk45::a4[0] * k1 + Rk45::a4[1] * k2 + Rk45::a4[2] * k3));
        const VectorXcd k5 = liouv * (y + h * (Rk45::a5[0] * k1 + Rk45::a5[1] * k2 +
                                               Rk45::a5[2] * k3 + Rk45::a5[3] * k4));
        const VectorXcd k6 = liouv * (y + h * (Rk45::a6[0] * k1 + Rk45::a6[1] * k2 + Rk45::a6[2] * k3 +
                                               Rk45::a6[3] * k4 + Rk45::a6[4] * k5));
        const VectorXcd y5 = y + h * (Rk45::b5[0] * k1 + Rk45::b5[2] * k3 + Rk45::b5[3] * k4 +
                                      Rk45::b5[4] * k5 + Rk45::b5[5] * k6);
        const VectorXcd k7 = liouv * y5;
        const VectorXcd y4 = y + h * (Rk45::b4[0] * k1 + Rk45::b4[2] * k3 + Rk45::b4[3] * k4 +
                                      Rk45::b4[4] * k5 + Rk45::b4[5] * k6 + Rk45::b4[6] * k7);
        const double err = error_norm(y5 - y4, y, y5, opts.abs_tol, opts.rel_tol);

        if (err <= 1.0) {
            tau += h;
            y = y5;
            k1 = k7;  // FSAL
            record_if_due(tau, y);
        }
        double factor = 0.9 * std::pow(std::max(err, 1e-16), -0.2);
        factor = std::clamp(factor, 0.2, 5.0);
        const double h_new = h * factor;
        h = clipped && err <= 1.0 ? std::max(h_new, h) : h_new;
        if (h < 1e-14 * std::max(1.0, taus.back()))
            throw PhysicsError("evolve: step size underflow at tau'=" + std::to_string(tau) +
                               " (stiff problem; consider the expm method)");
    }
    return out;
}

// ----------------------------- spectra -------------------------------------

Spectrum MasterSolver::emission_spectrum(std::span<const double> absolute_grid) {
    if (absolute_grid.size() < 2) throw ConfigError("emission_spectrum: grid too small");
    const auto ex = impl_->emission_expansion();
    Spectrum s;
    s.grid.assign(absolute_grid.begin(), absolute_grid.end());
    s.values.resize(absolute_grid.size());
    s.grid_spacing = absolute_grid[1] - absolute_grid[0];
    for (std::size_t i = 0; i < absolute_grid.size(); ++i) {
        const double nu = absolute_grid[i] - impl_->model.laser_energy;
        s.values[i] = std::max(0.0, SpectrumEval::value(ex, impl_->model.kappa, nu));
    }
    s.validate();
    return s;
}

Spectrum MasterSolver::emission_spectrum() {
    const double ez = impl_->model.levels.electron_zeeman;
    const double half = ez + std::max(10.0 * impl_->model.params.spin_dephasing_rate, 15.0);
    const double spacing = 0.1;
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * half / spacing)) + 1;
    const auto grid = linspace(impl_->model.laser_energy - half, impl_->model.laser_energy + half, n);
    return emission_spectrum(grid);
}

SidebandWeights MasterSolver::sideband_weights(double window_halfwidth) {
    impl_->solve_steady();
    const double ez = impl_->model.levels.electron_zeeman;
    if (ez <= 0.0) throw PhysicsError("sideband_weights: needs a finite Zeeman splitting");
    double w = window_halfwidth;
    if (w <= 0.0) w = std::min(0.45 * ez, 45.0);
    const auto ex = impl_->emission_expansion();
    SidebandWeights out;
    out.window_halfwidth = w;
    out.stokes = SpectrumEval::integral(ex, impl_->model.kappa, -ez - w, -ez + w);
    out.antistokes = SpectrumEval::integral(ex, impl_->model.kappa, ez - w, ez + w);
    out.coherent = impl_->model.kappa * ex.coherent;
    out.total = photon_flux();
    return out;
}

SidebandWeights MasterSolver::raman_line_weights(double decay_cap) {
    impl_->solve_steady();
    const double ez = impl_->model.levels.electron_zeeman;
    if (ez <= 0.0) throw PhysicsError("raman_line_weights: needs a finite Zeeman splitting");
    if (decay_cap <= 0.0) {
        const auto& p = impl_->model.params;
        decay_cap = 6.0 * (p.spin_dephasing_rate + p.spin_flip_rate) + 0.5;
    }
    const auto ex = impl_->emission_expansion();
    SidebandWeights out;
    out.window_halfwidth = 0.5 * ez;
    out.total = photon_flux();
    out.coherent = impl_->model.kappa * ex.coherent;
    for (Eigen::Index k = 0; k < ex.coeffs.size(); ++k) {
        if (-std::real(ex.lambdas(k)) > decay_cap) continue;
        // a mode at emission energy nu contributes at nu = -Im(lambda)
        const double nu = -std::imag(ex.lambdas(k));
        const double w = impl_->model.kappa * std::real(ex.coeffs(k));
        if (std::abs(nu - ez) < 0.5 * ez) out.antistokes += w;
        else if (std::abs(nu + ez) < 0.5 * ez) out.stokes += w;
    }
    return out;
}

double MasterSolver::spectrum_integral() {
    impl_->solve_steady();
    const auto ex = impl_->emission_expansion();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < ex.coeffs.size(); ++k) acc += std::real(ex.coeffs(k));
    return impl_->model.kappa * acc + impl_->model.kappa * ex.coherent;
}

double MasterSolver::coherent_flux() {
    impl_->solve_steady();
    const auto ex = impl_->emission_expansion();
    return impl_->model.kappa * ex.coherent;
}

CorrelationTrace MasterSolver::g2(std::span<const double> tau_ps) {
    if (tau_ps.empty()) throw ConfigError("g2: empty tau grid");
    impl_->solve_steady();
    const double nbar = mean_photon_number();
    if (nbar < 1e-14)
        throw PhysicsError("g2 undefined: steady-state photon flux is zero");

    const MatrixXcd& a = impl_->model.annihilator;
    const MatrixXcd conditional = a * impl_->steady.rho * a.adjoint();
    const MatrixXcd readout = impl_->model.number_op;

    CorrelationTrace trace;
    trace.tau_ps.assign(tau_ps.begin(), tau_ps.end());
    trace.g2.resize(tau_ps.size());
    trace.normalization_flux = photon_flux();

    impl_->decompose();
    if (impl_->eig_ok) {
        const VectorXcd coeffs = impl_->mode_coefficients(readout, conditional);
        for (std::size_t i = 0; i < tau_ps.size(); ++i) {
            const double tau = units::evolution_time(tau_ps[i]);
            complex<double> acc = 0.0;
            for (Eigen::Index k = 0; k < coeffs.size(); ++k)
                acc += coeffs(k) * std::exp(impl_->evals(k) * tau);
            trace.g2[i] = std::max(0.0, std::real(acc) / (nbar * nbar));
        }
    } else {
        VectorXcd y = vec(conditional);
        double tau_prev = 0.0;
        const VectorXcd w = vec(readout);
        for (std::size_t i = 0; i < tau_ps.size(); ++i) {
            const double tau = units::evolution_time(tau_ps[i]);
            if (tau < tau_prev) throw ConfigError("g2: taus must be nondecreasing");
            if (tau > tau_prev) y = impl_->propagator(tau - tau_prev) * y;
            tau_prev = tau;
            trace.g2[i] = std::max(0.0, std::real(w.dot(y)) / (nbar * nbar));
        }
    }
    trace.validate();
    return trace;
}

std::string MasterSolver::report() {
    impl_->solve_steady();
    std::ostringstream os;
    const auto& m = impl_->model;
    os << "hilbert_dim " << m.space.dim() << " (fock_cutoff " << m.space.fock_cutoff << ")\n";
    os << "laser_energy_uev " << format_double(m.laser_energy) << "\n";
    os << "cavity_detuning_uev " << format_double(m.params.cavity_energy - m.laser_energy) << "\n";
    os << "kappa_uev " << format_double(m.kappa) << "\n";
    os << "hamiltonian_norm_uev " << format_double(m.hamiltonian.norm()) << "\n";
    for (const auto& ch : m.channels)
        os << "channel " << ch.label << " rate_uev " << format_double(ch.rate) << "\n";
    for (const auto& t : m.levels.transitions)
        os << "transition " << leg_name(t.role) << " energy_uev " << format_double(t.energy)
           << (t.cavity_coupled ? " cavity" : " cross") << "\n";
    os << "steady_residual " << format_double(steady_state_residual()) << "\n";
    os << "mean_photon_number " << format_double(mean_photon_number()) << "\n";
    os << "photon_flux_uev " << format_double(photon_flux()) << "\n";
    os << "top_fock_population " << format_double(top_fock_population(impl_->steady)) << "\n";
    return os.str();
}

// ------------------------ free-function wrappers ---------------------------

DensityMatrix steady_state(const LindbladModel& model) {
    MasterSolver solver(model);
    return solver.steady_state();
}

std::vector<DensityMatrix> evolve(const LindbladModel& model, const DensityMatrix& initial,
                                  std::span<const double> times_ps, const EvolveOptions& opts) {
    MasterSolver solver(model);
    return solver.evolve(initial, times_ps, opts);
}

Spectrum emission_spectrum(const LindbladModel& model) {
    MasterSolver solver(model);
    return solver.emission_spectrum();
}

CorrelationTrace g2(const LindbladModel& model, std::span<const double> tau_ps) {
    MasterSolver solver(model);
    return solver.g2(tau_ps);
}

// --------------------- dressed lines and calibration -----------------------

namespace {

DressedLine dressed_mode(const DeviceParameters& params, const LevelStructure& levels,
                         const MatrixXcd& probe_op, double probe_laser) {
    DeviceParameters p = params;
    p.drive_rabi = 0.0;
    ModelOptions opts;
    opts.fock_guard = 0.0;
    LindbladModel m = build_model(p, levels, probe_laser, 1, opts);
    const MatrixXcd liouv = liouvillian_matrix(m);
    Eigen::ComplexEigenSolver<MatrixXcd> es(liouv);
    if (es.info() != Eigen::Success) throw PhysicsError("dressed line: eigendecomposition failed");
    const VectorXcd alpha = es.eigenvectors().lu().solve(vec(probe_op));
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < alpha.size(); ++k)
        if (std::abs(alpha(k)) > std::abs(alpha(best))) best = k;
    const complex<double> lambda = es.eigenvalues()(best);
    DressedLine line;
    line.fwhm = -2.0 * std::real(lambda);
    line.energy = probe_laser - std::imag(lambda);
    return line;
}

} // namespace

DressedLine dressed_transition(const DeviceParameters& params, const LevelStructure& levels,
                               LegRole leg_role) {
    const Transition& leg = levels.leg(leg_role);
    HilbertSpace space{1};
    MatrixXcd probe = MatrixXcd::Zero(space.dim(), space.dim());
    probe(space.index(leg.trion, 0), space.index(leg.ground, 0)) = 1.0;
    return dressed_mode(params, levels, probe, leg.energy);
}

DressedLine dressed_cavity(const DeviceParameters& params, const LevelStructure& levels,
                           QdState ground_sector) {
    HilbertSpace space{1};
    MatrixXcd probe = MatrixXcd::Zero(space.dim(), space.dim());
    probe(space.index(ground_sector, 1), space.index(ground_sector, 0)) = 1.0;
    return dressed_mode(params, levels, probe, params.cavity_energy);
}

double calibrate_coupling(const DeviceParameters& params, const LevelStructure& levels,
                          double target_fwhm, LegRole probe) {
    if (target_fwhm <= 0.0) throw CalibrationError("calibrate_coupling: target must be positive");
    auto width_at = [&](double g) {
        DeviceParameters p = params;
        p.qd_cavity_coupling = g;
        return dressed_transition(p, levels, probe).fwhm;
    };
    const double natural = width_at(0.0);
    if (target_fwhm < natural * (1.0 - 1e-9))
        throw CalibrationError("calibrate_coupling: target below the natural linewidth (" +
                               format_double(natural) + " ueV)");
    if (std::abs(target_fwhm - natural) <= 1e-9 * natural) return 0.0;

    double lo = 0.0, hi = 20.0;
    while (width_at(hi) < target_fwhm) {
        hi *= 2.0;
        if (hi > 4096.0)
            throw CalibrationError("calibrate_coupling: target linewidth unattainable");
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (width_at(mid) < target_fwhm) lo = mid; else hi = mid;
        if (hi - lo <= 1e-9 * hi) break;
    }
    const double g = 0.5 * (lo + hi);
    const double achieved = width_at(g);
    if (std::abs(achieved - target_fwhm) > 0.02 * target_fwhm)
        throw CalibrationError("calibrate_coupling: failed to reach target within 2%");
    return g;
}

} // namespace spinraman
