// First-principles open-system model of the driven QD-cavity system: the
// 4-level QD tensored with a truncated Fock space, evolved by a Lindblad
// master equation in the frame rotating at the laser frequency. Provides
// steady states, dynamics, emission spectra via the quantum regression
// theorem and two-time photon correlations.
#pragma once

#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinraman/device.hpp"
#include "spinraman/spectrum.hpp"

namespace spinraman {

struct HilbertSpace {
    int fock_cutoff = 2;  // N_max >= 1
    static constexpr int qd_dim = 4;

    int dim() const { return qd_dim * (fock_cutoff + 1); }
    // Basis ordering: |q, n> -> q + 4*n with q in {down, up, T1, T2}.
    int index(int qd_state, int n_photons) const { return qd_state + qd_dim * n_photons; }
};

struct CollapseChannel {
    Eigen::MatrixXcd op;
    double rate = 0.0;  // ueV
    std::string label;
};

struct ModelOptions {
    double trion_dephasing = 0.0;             // extra trion pure dephasing, ueV
    std::optional<double> flip_down_to_up;    // override Gamma_ct per direction
    std::optional<double> flip_up_to_down;
    double fock_guard = 1e-4;                 // top Fock level population limit; <= 0 disables
    // Restrict the classical drive to a single leg (narrow pump laser model
    // used for optical spin initialization).
    std::optional<LegRole> drive_only;
};

struct LindbladModel {
    HilbertSpace space;
    Eigen::MatrixXcd hamiltonian;  // ueV, rotating frame at the laser
    std::vector<CollapseChannel> channels;
    double laser_energy = 0.0;     // omega_L, ueV (absolute)
    double kappa = 0.0;            // cavity energy decay = 2*Gamma, ueV
    double fock_guard = 1e-4;
    DeviceParameters params;
    LevelStructure levels;

    Eigen::MatrixXcd annihilator;  // a
    Eigen::MatrixXcd number_op;    // a'a

    void validate() const;  // Hermiticity of H, nonnegative rates
};

LindbladModel build_model(const DeviceParameters& params, const LevelStructure& levels,
                          double laser_energy, int fock_cutoff, const ModelOptions& opts = {});

struct DensityMatrix {
    Eigen::MatrixXcd rho;

    double trace_error() const;
    double hermiticity_error() const;  // max elementwise |rho - rho^dag|
    double min_eigenvalue() const;
    void validate(double trace_tol = 1e-10, double herm_tol = 1e-10,
                  double min_eig = -1e-9) const;
};

struct EvolveOptions {
    enum class Method { automatic, rk45, expm };
    Method method = Method::automatic;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    std::size_t max_steps = 50'000'000;
};

struct SidebandWeights {
    double stokes = 0.0;           // integrated flux in the Stokes window
    double antistokes = 0.0;       // integrated flux in the anti-Stokes window
    double coherent = 0.0;         // flux of the coherent (laser-frequency) component
    double total = 0.0;            // kappa * <a'a>_ss
    double window_halfwidth = 0.0; // ueV
};

struct DressedLine {
    double energy = 0.0;  // absolute ueV
    double fwhm = 0.0;    // ueV
};

// Workspace caching the Liouvillian, its spectral decomposition and the
// steady state for one immutable model.
class MasterSolver {
public:
    explicit MasterSolver(LindbladModel model);
    ~MasterSolver();
    MasterSolver(MasterSolver&&) noexcept;
    MasterSolver& operator=(MasterSolver&&) noexcept;

    const LindbladModel& model() const;
    const Eigen::MatrixXcd& generator() const;  // L over vec(rho), ueV units

    const DensityMatrix& steady_state();
    double steady_state_residual();  // ||L vec(rho)|| / (||L||_F ||vec(rho)||)
    double mean_photon_number();
    double photon_flux();            // kappa * <a'a>_ss
    double top_fock_population(const DensityMatrix& state) const;

    std::vector<DensityMatrix> evolve(const DensityMatrix& initial,
                                      std::span<const double> times_ps,
                                      const EvolveOptions& opts = {});

    Spectrum emission_spectrum();
    Spectrum emission_spectrum(std::span<const double> absolute_grid);
    SidebandWeights sideband_weights(double window_halfwidth = 0.0);
    // Integrated flux of the narrow Raman line at each sideband, read off the
    // spectral decomposition: modes within half the electron Zeeman of the
    // sideband frequency whose decay rate is below decay_cap. Immune to the
    // broad trion emission underneath the window.
    SidebandWeights raman_line_weights(double decay_cap = 0.0);
    double spectrum_integral();      // analytic integral of the incoherent part
    double coherent_flux();          // kappa * |<a>_ss|^2

    CorrelationTrace g2(std::span<const double> tau_ps);

    std::string report();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Free-function forms.
DensityMatrix steady_state(const LindbladModel& model);
std::vector<DensityMatrix> evolve(const LindbladModel& model, const DensityMatrix& initial,
                                  std::span<const double> times_ps,
                                  const EvolveOptions& opts = {});
Spectrum emission_spectrum(const LindbladModel& model);
CorrelationTrace g2(const LindbladModel& model, std::span<const double> tau_ps);

// Linewidth and center of one optical transition including the cavity
// dressing, from the Liouvillian spectrum of the undriven model.
DressedLine dressed_transition(const DeviceParameters& params, const LevelStructure& levels,
                               LegRole leg);
// Dressed cavity response seen from one ground-state sector.
DressedLine dressed_cavity(const DeviceParameters& params, const LevelStructure& levels,
                           QdState ground_sector);

// Root-find over g_c so that the dressed linewidth of the probe leg equals
// target_fwhm (within 2%). Throws CalibrationError when the target is below
// the natural width or unattainable.
double calibrate_coupling(const DeviceParameters& params, const LevelStructure& levels,
                          double target_fwhm, LegRole probe = LegRole::stokes_emit);

} // namespace spinraman
