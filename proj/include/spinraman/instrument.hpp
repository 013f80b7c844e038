// Measurement apparatus models: scanning Fabry-Perot filter, Gaussian
// detector response for g2, polarization projection, and the least-squares
// fit routines used to extract linewidths and rise times.
#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "spinraman/spectrum.hpp"

namespace spinraman {

struct FabryPerotFilter {
    double fwhm = 1.7;     // ueV
    double fsr = 400.0;    // ueV
    double center = 0.0;   // scan position, ueV

    void validate() const;               // 0 < fwhm < fsr
    double finesse() const { return fsr / fwhm; }
    double transmission(double energy) const;  // periodic Airy, peak 1
};

struct DetectorResponse {
    double dt_ps = 400.0;  // Gaussian width: kernel exp(-tau^2/dt^2)

    // Normalized kernel value at delay tau.
    double kernel(double tau_ps) const;
};

// Pointwise Airy transmission at the filter's current center. Rejects grids
// coarser than fwhm/4 (undersampled).
Spectrum fp_transmit(const Spectrum& spectrum, const FabryPerotFilter& filter);

// Scanning mode: total transmitted intensity as a function of filter center,
// emulating the measured trace.
Spectrum fp_scan(const Spectrum& spectrum, const FabryPerotFilter& filter,
                 std::span<const double> centers);

// Discrete convolution with the normalized Gaussian kernel; the trace is
// treated as symmetric about tau = 0 and extended by its final value.
CorrelationTrace convolve_g2(const CorrelationTrace& trace, const DetectorResponse& detector);

struct FitResult {
    std::string model;
    std::vector<std::string> parameter_names;
    std::vector<double> values;
    std::vector<double> sigmas;  // one-sigma from the linearized covariance
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;

    double value(const std::string& name) const;
    double sigma(const std::string& name) const;
    std::string to_text() const;
    // rows of "model,param,value,sigma"
    std::vector<std::string> to_csv_rows() const;
};

// Lorentzian peak fit: amplitude, center, fwhm, baseline. Deterministic
// initialization: peak sample seeds center/amplitude, second moment seeds
// the width.
FitResult fit_lorentzian(const Spectrum& spectrum);

// Fit of baseline * (1 - depth * exp_rise(|tau|; t_rise)) convolved with the
// Gaussian detector kernel (analytic form). Returns t_rise as parameter 0.
FitResult fit_g2_rise(const CorrelationTrace& trace, const DetectorResponse& detector);

// Malus-law projection of a field with (parallel, perpendicular) components
// onto an analyzer at the given angle from the parallel axis.
double polarization_project(const std::array<double, 2>& field, double analyzer_angle);

// exp(x^2) * erfc(x), stable for large x.
double erfcx(double x);

} // namespace spinraman
