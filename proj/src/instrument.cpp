#include "spinraman/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Dense>

#include "spinraman/errors.hpp"

namespace spinraman {

void FabryPerotFilter::validate() const {
    if (!(fwhm > 0.0) || !(fwhm < fsr))
        throw ConfigError("Fabry-Perot filter needs 0 < fwhm < fsr");
}

double FabryPerotFilter::transmission(double energy) const {
    // Airy function with the coefficient chosen so the FWHM is exact.
    const double s = std::sin(M_PI * 0.5 * fwhm / fsr);
    const double coeff = 1.0 / (s * s);
    const double phase = std::sin(M_PI * (energy - center) / fsr);
    return 1.0 / (1.0 + coeff * phase * phase);
}

double DetectorResponse::kernel(double tau_ps) const {
    if (dt_ps <= 0.0) throw ConfigError("detector response width must be positive");
    return std::exp(-tau_ps * tau_ps / (dt_ps * dt_ps)) / (dt_ps * std::sqrt(M_PI));
}

Spectrum fp_transmit(const Spectrum& spectrum, const FabryPerotFilter& filter) {
    filter.validate();
    spectrum.validate();
    if (spectrum.size() < 2) throw ConfigError("fp_transmit: spectrum too small");
    double max_gap = 0.0;
    for (std::size_t i = 1; i < spectrum.size(); ++i)
        max_gap = std::max(max_gap, spectrum.grid[i] - spectrum.grid[i - 1]);
    if (max_gap > 0.25 * filter.fwhm)
        throw ConfigError("fp_transmit: grid undersamples the filter (need spacing <= fwhm/4)");
    Spectrum out = spectrum;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] *= filter.transmission(out.grid[i]);
    return out;
}

Spectrum fp_scan(const Spectrum& spectrum, const FabryPerotFilter& filter,
                 std::span<const double> centers) {
    filter.validate();
    spectrum.validate();
    if (centers.size() < 2) throw ConfigError("fp_scan: need at least two scan positions");
    Spectrum out;
    out.grid.assign(centers.begin(), centers.end());
    out.values.resize(centers.size());
    out.grid_spacing = centers[1] - centers[0];
    for (std::size_t c = 0; c < centers.size(); ++c) {
        FabryPerotFilter f = filter;
        f.center = centers[c];
        double acc = 0.0;
        for (std::size_t i = 1; i < spectrum.size(); ++i) {
            const double t0 = f.transmission(spectrum.grid[i - 1]) * spectrum.values[i - 1];
            const double t1 = f.transmission(spectrum.grid[i]) * spectrum.values[i];
            acc += 0.5 * (t0 + t1) * (spectrum.grid[i] - spectrum.grid[i - 1]);
        }
        out.values[c] = acc;
    }
    out.validate();
    return out;
}

CorrelationTrace convolve_g2(const CorrelationTrace& trace, const DetectorResponse& detector) {
    trace.validate();
    double step = 0.0;
    if (!trace.uniform_grid(&step))
        throw ConfigError("convolve_g2: tau grid must be uniform");
    if (step > 0.25 * detector.dt_ps)
        throw ConfigError("convolve_g2: tau grid must be finer than dt/4");

    const auto n = static_cast<std::ptrdiff_t>(trace.size());
    const auto half = static_cast<std::ptrdiff_t>(std::ceil(6.0 * detector.dt_ps / step));
    std::vector<double> weights(static_cast<std::size_t>(2 * half + 1));
    double wsum = 0.0;
    for (std::ptrdiff_t j = -half; j <= half; ++j) {
        const double w = detector.kernel(static_cast<double>(j) * step);
        weights[static_cast<std::size_t>(j + half)] = w;
        wsum += w;
    }
    for (double& w : weights) w /= wsum;  // unit discrete integral

    // The trace is g2(|tau|): mirror below zero, hold the asymptote above.
    auto sample = [&](std::ptrdiff_t k) {
        if (k < 0) k = -k;
        if (k >= n) k = n - 1;
        return trace.g2[static_cast<std::size_t>(k)];
    };

    CorrelationTrace out = trace;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t j = -half; j <= half; ++j)
            acc += weights[static_cast<std::size_t>(j + half)] * sample(i - j);
        out.g2[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

double erfcx(double x) {
    if (x < 0.0) throw PhysicsError("erfcx: negative argument not supported here");
    if (x < 25.0) return std::exp(x * x) * std::erfc(x);
    const double ix2 = 1.0 / (x * x);
    return (1.0 - 0.5 * ix2 + 0.75 * ix2 * ix2 - 1.875 * ix2 * ix2 * ix2) /
           (x * std::sqrt(M_PI));
}

// ----------------------------- fitting ------------------------------------

double FitResult::value(const std::string& name) const {
    for (std::size_t i = 0; i < parameter_names.size(); ++i)
        if (parameter_names[i] == name) return values[i];
    throw ConfigError("fit result has no parameter " + name);
}

double FitResult::sigma(const std::string& name) const {
    for (std::size_t i = 0; i < parameter_names.size(); ++i)
        if (parameter_names[i] == name) return sigmas[i];
    throw ConfigError("fit result has no parameter " + name);
}

std::string FitResult::to_text() const {
    std::ostringstream os;
    os << "model " << model << (converged ? "" : " (NOT CONVERGED)") << "\n";
    for (std::size_t i = 0; i < parameter_names.size(); ++i)
        os << "  " << parameter_names[i] << " " << format_double(values[i]) << " +- "
           << format_double(sigmas[i]) << "\n";
    os << "  residual_norm " << format_double(residual_norm) << " iterations " << iterations
       << "\n";
    return os.str();
}

std::vector<std::string> FitResult::to_csv_rows() const {
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < parameter_names.size(); ++i)
        rows.push_back(model + "," + parameter_names[i] + "," + format_double(values[i]) + "," +
                       format_double(sigmas[i]));
    return rows;
}

namespace {

using ModelFn = std::function<double(const std::vector<double>&, double)>;

FitResult levenberg_marquardt(const std::string& name, const ModelFn& fn,
                              const std::vector<std::string>& param_names,
                              std::vector<double> p, std::span<const double> x,
                              std::span<const double> y) {
    const std::size_t n = x.size();
    const std::size_t k = p.size();
    if (n <= k) throw ConfigError("fit: not enough samples for the parameter count");

    auto chi2_of = [&](const std::vector<double>& params) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - fn(params, x[i]);
            acc += r * r;
        }
        return acc;
    };

    double chi2 = chi2_of(p);
    double lambda = 1e-3;
    bool converged = false;
    int iter = 0;
    Eigen::MatrixXd jac(n, k);
    Eigen::VectorXd resid(n);

    for (; iter < 200; ++iter) {
        for (std::size_t i = 0; i < n; ++i) resid(static_cast<Eigen::Index>(i)) = y[i] - fn(p, x[i]);
        for (std::size_t j = 0; j < k; ++j) {
            const double h = std::max(1e-6 * std::abs(p[j]), 1e-9);
            std::vector<double> pj = p;
            pj[j] += h;
            for (std::size_t i = 0; i < n; ++i)
                jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    (fn(pj, x[i]) - (y[i] - resid(static_cast<Eigen::Index>(i)))) / h;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * resid;

        bool improved = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            for (std::size_t j = 0; j < k; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                damped(jj, jj) += lambda * std::max(jtj(jj, jj), 1e-30);
            }
            const Eigen::VectorXd delta = damped.ldlt().solve(jtr);
            std::vector<double> trial = p;
            for (std::size_t j = 0; j < k; ++j) trial[j] += delta(static_cast<Eigen::Index>(j));
            const double trial_chi2 = chi2_of(trial);
            if (trial_chi2 <= chi2) {
                const double rel_drop = (chi2 - trial_chi2) / std::max(chi2, 1e-300);
                const double step = delta.norm() / std::max(1e-12, Eigen::Map<Eigen::VectorXd>(
                                                                       p.data(), static_cast<Eigen::Index>(k))
                                                                       .norm());
                p = trial;
                chi2 = trial_chi2;
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                if (rel_drop < 1e-10 && step < 1e-10) converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved || converged) {
            converged = converged || !improved;
            break;
        }
    }

    FitResult out;
    out.model = name;
    out.parameter_names = param_names;
    out.values = p;
    out.iterations = iter + 1;
    out.converged = converged;
    out.residual_norm = std::sqrt(chi2);

    // one-sigma uncertainties from the linearized covariance at the optimum
    for (std::size_t i = 0; i < n; ++i) resid(static_cast<Eigen::Index>(i)) = y[i] - fn(p, x[i]);
    for (std::size_t j = 0; j < k; ++j) {
        const double h = std::max(1e-6 * std::abs(p[j]), 1e-9);
        std::vector<double> pj = p;
        pj[j] += h;
        for (std::size_t i = 0; i < n; ++i)
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                (fn(pj, x[i]) - fn(p, x[i])) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const double dof_scale = chi2 / static_cast<double>(n - k);
    const Eigen::MatrixXd cov = jtj.ldlt().solve(
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
    out.sigmas.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out.sigmas[j] = std::sqrt(std::max(cov(jj, jj) * dof_scale, 0.0));
    }
    return out;
}

} // namespace

FitResult fit_lorentzian(const Spectrum& spectrum) {
    spectrum.validate();
    if (spectrum.size() < 8) throw ConfigError("fit_lorentzian: spectrum too small");
    const auto& x = spectrum.grid;
    const auto& y = spectrum.values;

    const std::size_t ip = spectrum.peak_index();
    const double baseline0 = *std::min_element(y.begin(), y.end());
    const double amp0 = y[ip] - baseline0;
    const double center0 = x[ip];
    double m0 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = y[i] - baseline0;
        m0 += w;
        m2 += w * (x[i] - center0) * (x[i] - center0);
    }
    const double span = x.back() - x.front();
    double width0 = m0 > 0.0 ? 2.0 * std::sqrt(m2 / m0) : span / 4.0;
    width0 = std::clamp(width0, 2.0 * (x[1] - x[0]), 0.5 * span);

    auto model = [](const std::vector<double>& p, double xx) {
        const double hw = 0.5 * std::max(std::abs(p[2]), 1e-12);
        const double d = xx - p[1];
        return p[0] * hw * hw / (d * d + hw * hw) + p[3];
    };
    auto fit = levenberg_marquardt("lorentzian", model, {"amplitude", "center", "fwhm", "baseline"},
                                   {amp0, center0, width0, baseline0}, x, y);
    fit.values[2] = std::abs(fit.values[2]);
    return fit;
}

namespace {

// 1 - exp(-|tau|/t) convolved with the normalized Gaussian kernel
// exp(-tau^2/dt^2)/(dt sqrt(pi)); analytic and numerically stable form.
double exp_rise_convolved(double tau, double t_rise, double dt) {
    tau = std::abs(tau);
    const double t = std::max(t_rise, 1e-3);
    if (dt <= 0.0) return 1.0 - std::exp(-tau / t);
    const double a = 0.5 * dt / t;
    const double gauss = std::exp(-tau * tau / (dt * dt));
    const double b = a - tau / dt;
    const double plus = gauss * erfcx(a + tau / dt);
    double minus;
    if (b >= 0.0) {
        minus = gauss * erfcx(b);
    } else {
        minus = 2.0 * std::exp(a * a - tau / t) - gauss * erfcx(-b);
    }
    return 1.0 - 0.5 * (minus + plus);
}

} // namespace

FitResult fit_g2_rise(const CorrelationTrace& trace, const DetectorResponse& detector) {
    trace.validate();
    if (trace.size() < 16) throw ConfigError("fit_g2_rise: trace too small");
    const auto& x = trace.tau_ps;
    const auto& y = trace.g2;

    double plateau = 0.0;
    const std::size_t tail = std::max<std::size_t>(1, y.size() / 10);
    for (std::size_t i = y.size() - tail; i < y.size(); ++i) plateau += y[i];
    plateau /= static_cast<double>(tail);
    const double floor_v = *std::min_element(y.begin(), y.end());
    const double depth0 = std::clamp(plateau > 0.0 ? (plateau - floor_v) / plateau : 1.0, 0.05, 1.5);

    // first crossing of the 1 - 1/e level seeds the rise time
    const double level = plateau * (1.0 - depth0 / M_E);
    double t0 = x.back() / 10.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] >= level && x[i] > 0.0) {
            t0 = std::max(x[i], x[1] - x[0]);
            break;
        }
    }

    const double dt = detector.dt_ps;
    // convolution of C * (1 - A exp(-|tau|/t)) with the Gaussian kernel
    auto model = [dt](const std::vector<double>& p, double tau) {
        return p[2] * (1.0 - p[1] * (1.0 - exp_rise_convolved(tau, p[0], dt)));
    };
    auto fit = levenberg_marquardt("g2_exponential_rise", model, {"t_rise_ps", "depth", "baseline"},
                                   {t0, depth0, std::max(plateau, 1e-6)}, x, y);
    fit.values[0] = std::max(fit.values[0], 1e-3);
    return fit;
}

double polarization_project(const std::array<double, 2>& field, double analyzer_angle) {
    const double projected =
        field[0] * std::cos(analyzer_angle) + field[1] * std::sin(analyzer_angle);
    return projected * projected;
}

} // namespace spinraman
