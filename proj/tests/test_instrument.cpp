#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "spinraman/device.hpp"
#include "spinraman/errors.hpp"
#include "spinraman/instrument.hpp"
#include "spinraman/lindblad.hpp"
#include "spinraman/spectrum.hpp"

using namespace spinraman;

namespace {

CorrelationTrace synthetic_rise(double t_rise, double tau_max, double step) {
    CorrelationTrace tr;
    for (double tau = 0.0; tau <= tau_max + 0.5 * step; tau += step) {
        tr.tau_ps.push_back(tau);
        tr.g2.push_back(1.0 - std::exp(-tau / t_rise));
    }
    return tr;
}

// Independent quadrature of the convolution of 1 - exp(-|tau|/t) with the
// normalized Gaussian kernel, evaluated at delay tau.
double convolution_quadrature(double tau, double t_rise, double dt) {
    const double span = 8.0 * dt;
    const double h = dt / 400.0;
    double acc = 0.0, wsum = 0.0;
    for (double u = -span; u <= span; u += h) {
        const double w = std::exp(-u * u / (dt * dt));
        acc += w * (1.0 - std::exp(-std::abs(tau - u) / t_rise));
        wsum += w;
    }
    return acc / wsum;
}

} // namespace

TEST_CASE("airy transmission geometry") {
    FabryPerotFilter fp;
    fp.center = 1'290'700.0;
    fp.validate();
    CHECK(fp.finesse() == doctest::Approx(235.29).epsilon(1e-3));

    CHECK(fp.transmission(fp.center) == 1.0);
    // the stated FWHM is exact by construction
    CHECK(fp.transmission(fp.center + 0.5 * fp.fwhm) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(fp.transmission(fp.center - 0.5 * fp.fwhm) == doctest::Approx(0.5).epsilon(1e-8));
    // periodic orders
    CHECK(fp.transmission(fp.center + fp.fsr) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fp.transmission(fp.center + fp.fsr + 0.5 * fp.fwhm) ==
          doctest::Approx(0.5).epsilon(1e-9));

    // half-FSR suppression: golden value by direct Airy evaluation
    const double s = std::sin(M_PI * 0.5 * fp.fwhm / fp.fsr);
    const double expected = 1.0 / (1.0 + 1.0 / (s * s));
    CHECK(fp.transmission(fp.center + 0.5 * fp.fsr) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(4.4565e-5).epsilon(1e-3));
    // ~ (pi^2/4) (fwhm/fsr)^2 suppression
    CHECK(expected == doctest::Approx(M_PI * M_PI / 4.0 * std::pow(fp.fwhm / fp.fsr, 2))
                          .epsilon(1e-4));

    FabryPerotFilter bad;
    bad.fwhm = 500.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("fp_transmit is linear, bounded, and periodic across orders") {
    FabryPerotFilter fp;
    fp.center = 1000.0;

    Spectrum line;
    line.grid = linspace(900.0, 1100.0, 2001);  // 0.1 ueV spacing
    line.values.resize(line.grid.size());
    for (std::size_t i = 0; i < line.grid.size(); ++i) {
        const double d = line.grid[i] - 1000.0;
        line.values[i] = 1.0 / (d * d + 0.25);
    }

    const Spectrum out = fp_transmit(line, fp);
    CHECK(out.values[line.peak_index()] == line.values[line.peak_index()]);  // T(0) = 1
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.values[i] <= line.values[i] + 1e-15);

    // a line displaced by one FSR transmits identically through the next order
    Spectrum shifted = line;
    for (auto& g : shifted.grid) g += fp.fsr;
    const Spectrum out_shifted = fp_transmit(shifted, fp);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out_shifted.values[i] == doctest::Approx(out.values[i]).epsilon(1e-9));

    // linearity in the input spectrum
    Spectrum doubled = line;
    for (auto& v : doubled.values) v *= 2.0;
    const Spectrum out2 = fp_transmit(doubled, fp);
    for (std::size_t i = 0; i < out.size(); i += 13)
        CHECK(out2.values[i] == doctest::Approx(2.0 * out.values[i]).epsilon(1e-12));

    // undersampled grid rejected
    Spectrum coarse;
    coarse.grid = linspace(900.0, 1100.0, 41);
    coarse.values.assign(41, 1.0);
    CHECK_THROWS_AS(fp_transmit(coarse, fp), ConfigError);
}

TEST_CASE("fp_scan reproduces a narrow line at the filter resolution") {
    FabryPerotFilter fp;
    Spectrum line;
    line.grid = linspace(-30.0, 30.0, 1501);
    line.values.resize(line.grid.size());
    for (std::size_t i = 0; i < line.grid.size(); ++i) {
        const double d = line.grid[i] - 3.0;
        line.values[i] = 0.01 / (d * d + 0.01);  // much narrower than the filter
    }
    const auto centers = linspace(-20.0, 20.0, 401);
    const Spectrum scan = fp_scan(line, fp, centers);
    CHECK(std::abs(scan.grid[scan.peak_index()] - 3.0) < 0.2);
}

TEST_CASE("g2 convolution against the quadrature oracle") {
    const DetectorResponse det{400.0};
    const auto trace = synthetic_rise(1100.0, 12000.0, 20.0);
    const auto conv = convolve_g2(trace, det);

    CHECK(conv.g2.front() == doctest::Approx(convolution_quadrature(0.0, 1100.0, 400.0)).epsilon(2e-3));
    CHECK(conv.g2.front() == doctest::Approx(0.18).epsilon(0.12));      // derived value 0.176
    CHECK(conv.g2.front() == doctest::Approx(0.176134).epsilon(2e-3));  // frozen oracle value
    CHECK(conv.g2[conv.size() / 2] ==
          doctest::Approx(convolution_quadrature(trace.tau_ps[conv.size() / 2], 1100.0, 400.0))
              .epsilon(2e-3));
    // the long-delay asymptote is preserved
    CHECK(conv.g2.back() == doctest::Approx(trace.g2.back()).epsilon(1e-3));
}

TEST_CASE("g2 convolution invariances") {
    const DetectorResponse det{400.0};
    CorrelationTrace flat;
    flat.tau_ps = linspace(0.0, 4000.0, 201);
    flat.g2.assign(201, 1.0);
    const auto conv_flat = convolve_g2(flat, det);
    for (double v : conv_flat.g2) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    // affine invariance: conv(a + b f) = a + b conv(f)
    const auto f = synthetic_rise(900.0, 8000.0, 25.0);
    CorrelationTrace affine = f;
    for (auto& v : affine.g2) v = 0.4 + 0.5 * v;
    const auto conv_f = convolve_g2(f, det);
    const auto conv_affine = convolve_g2(affine, det);
    for (std::size_t i = 0; i < f.size(); i += 17)
        CHECK(conv_affine.g2[i] == doctest::Approx(0.4 + 0.5 * conv_f.g2[i]).epsilon(1e-9));

    // non-uniform and too-coarse grids rejected
    CorrelationTrace bad = f;
    bad.tau_ps[3] += 1.0;
    CHECK_THROWS_AS(convolve_g2(bad, det), ConfigError);
    const auto coarse = synthetic_rise(900.0, 8000.0, 150.0);
    CHECK_THROWS_AS(convolve_g2(coarse, det), ConfigError);
}

TEST_CASE("lorentzian fit recovers noiseless parameters") {
    Spectrum s;
    s.grid = linspace(-60.0, 60.0, 601);
    s.values.resize(s.grid.size());
    const double amp = 2.5, center = 4.2, fwhm = 18.0, base = 0.1;
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        const double d = s.grid[i] - center;
        s.values[i] = amp * 81.0 / (d * d + 81.0) + base;
    }
    const auto fit = fit_lorentzian(s);
    CHECK(fit.converged);
    CHECK(fit.value("amplitude") == doctest::Approx(amp).epsilon(1e-6));
    CHECK(fit.value("center") == doctest::Approx(center).epsilon(1e-6));
    CHECK(fit.value("fwhm") == doctest::Approx(fwhm).epsilon(1e-6));
    CHECK(fit.value("baseline") == doctest::Approx(base).epsilon(1e-6));
    CHECK(fit.residual_norm < 1e-6);

    // deterministic: identical input bits give identical output bits
    const auto fit2 = fit_lorentzian(s);
    CHECK(fit2.value("fwhm") == fit.value("fwhm"));
    CHECK(fit2.value("center") == fit.value("center"));
}

TEST_CASE("lorentzian fit with 1% noise recovers an 18 ueV width") {
    Spectrum s;
    s.grid = linspace(-70.0, 70.0, 561);
    s.values.resize(s.grid.size());
    std::mt19937 rng(41);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        const double d = s.grid[i];
        s.values[i] = std::max(0.0, 81.0 / (d * d + 81.0) + noise(rng));
    }
    const auto fit = fit_lorentzian(s);
    CHECK(fit.value("fwhm") == doctest::Approx(18.0).epsilon(0.028));
    CHECK(fit.sigma("fwhm") < 0.5);
}

TEST_CASE("g2 rise fit recovers the generating time constant") {
    const DetectorResponse det{400.0};
    const auto conv = convolve_g2(synthetic_rise(1100.0, 12000.0, 20.0), det);
    const auto fit = fit_g2_rise(conv, det);
    CHECK(fit.converged);
    CHECK(fit.value("t_rise_ps") == doctest::Approx(1100.0).epsilon(0.045));
    CHECK(std::abs(fit.value("t_rise_ps") - 1100.0) < 50.0);

    // delta-kernel limit reduces to a plain exponential-rise fit
    const DetectorResponse ideal{0.0};
    const auto plain = synthetic_rise(800.0, 10000.0, 20.0);
    const auto fit2 = fit_g2_rise(plain, ideal);
    CHECK(fit2.value("t_rise_ps") == doctest::Approx(800.0).epsilon(1e-6));
}

TEST_CASE("engine sideband linewidth fits to 3 ueV") {
    DeviceParameters p;
    p.finalize();
    const auto levels = build_level_structure(p);
    MasterSolver solver(build_model(p, levels, p.cavity_energy, 2));
    const double center = p.cavity_energy + levels.electron_zeeman;
    const auto grid = linspace(center - 12.0, center + 12.0, 961);
    const auto spectrum = solver.emission_spectrum(grid);
    const auto fit = fit_lorentzian(spectrum);
    CHECK(fit.value("fwhm") == doctest::Approx(3.0).epsilon(0.1));
    CHECK(std::abs(fit.value("fwhm") - 3.0) < 0.3);
    CHECK(std::abs(fit.value("center") - center) < 0.5);
}

TEST_CASE("polarization projection follows Malus's law") {
    CHECK(polarization_project({1.0, 0.0}, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(polarization_project({1.0, 0.0}, M_PI / 2.0) == doctest::Approx(0.0).epsilon(1e-15));
    const double mix = 5.0 * M_PI / 180.0;
    const double leakage = polarization_project({std::cos(mix), std::sin(mix)}, M_PI / 2.0);
    CHECK(leakage == doctest::Approx(std::pow(std::sin(mix), 2)).epsilon(1e-12));
    CHECK(leakage == doctest::Approx(0.0076).epsilon(1e-2));
}

TEST_CASE("erfcx is continuous across the asymptotic switch") {
    CHECK(erfcx(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(erfcx(25.0 - 1e-9) == doctest::Approx(erfcx(25.0 + 1e-9)).epsilon(1e-9));
    CHECK(erfcx(0.1818181818) == doctest::Approx(0.823867).epsilon(1e-5));
}
