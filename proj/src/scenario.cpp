#include "spinraman/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <atomic>
#include <thread>

#include "json.hpp"

#include "spinraman/errors.hpp"
#include "spinraman/instrument.hpp"
#include "spinraman/lindblad.hpp"
#include "spinraman/raman.hpp"
#include "spinraman/spectrum.hpp"
#include "spinraman/spin.hpp"
#include "spinraman/units.hpp"

namespace spinraman {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 14695981039346656037ULL;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string file_digest_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read back output file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    const std::uint64_t h = fnv1a64(content.data(), content.size());
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["scenario"] = scenario;
    j["version"] = version;
    j["digest_algorithm"] = "fnv1a64";
    j["config"] = config;
    j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : files)
        j["files"].push_back({{"name", f.name}, {"bytes", f.bytes}, {"digest", f.digest}});
    return j.dump(2) + "\n";
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {
        "sidebands_fig2d", "excitation_fig3c", "asymmetry_fig4a", "ratio_fig4b",
        "g2_fig4c",        "selectivity_fig5b", "spin_resolved_fig5de", "oracle_check"};
    return names;
}

namespace {

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), 8);
    if (workers <= 1 || count < 4) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    for (auto& t : pool) t.join();
}

struct Run {
    const Config& cfg;
    fs::path dir;
    std::vector<std::string> file_names;
    std::ostringstream report;

    std::string path(const std::string& name) {
        file_names.push_back(name);
        return (dir / name).string();
    }

    void finish_report() {
        const std::string name = "report.txt";
        std::ofstream out(dir / name, std::ios::binary);
        out << report.str();
        file_names.push_back(name);
    }
};

std::vector<double> arange(double first, double last, double step) {
    std::vector<double> out;
    for (double v = first; v <= last + 0.5 * step; v += step) out.push_back(v);
    return out;
}

ModelOptions engine_options(const Config& cfg) {
    ModelOptions opts;
    opts.trion_dephasing = cfg.engine.trion_dephasing;
    opts.fock_guard = cfg.engine.fock_guard;
    return opts;
}

void check_finite(const std::vector<double>& values, const std::string& what) {
    for (double v : values)
        if (!std::isfinite(v)) throw PhysicsError(what + ": non-finite value in scenario output");
}

// ------------------------------ scenarios ----------------------------------

void scenario_sidebands(Run& run) {
    const auto& p = run.cfg.device;
    const auto levels = build_level_structure(p);
    const double laser = p.cavity_energy;

    MasterSolver solver(build_model(p, levels, laser, run.cfg.engine.fock_cutoff,
                                    engine_options(run.cfg)));
    const Spectrum engine = solver.emission_spectrum();
    const Spectrum model = sideband_lineshape(laser, p, levels, engine.grid);
    check_finite(engine.values, "sidebands_fig2d");

    write_spectrum_csv(run.path("engine_spectrum.csv"), engine);
    write_spectrum_csv(run.path("perturbative_sidebands.csv"), model);

    run.report << "scenario sidebands_fig2d\n";
    run.report << "laser_ueV " << format_double(laser) << "\n";
    run.report << "electron_zeeman_ueV " << format_double(levels.electron_zeeman) << "\n";
    run.report << solver.report();
}

std::vector<std::vector<double>> scan_rows(const Spectrum& stokes, const Spectrum& antistokes) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < stokes.size(); ++i)
        rows.push_back({stokes.grid[i], stokes.values[i], antistokes.values[i]});
    return rows;
}

void scenario_excitation(Run& run) {
    const auto& p = run.cfg.device;
    const auto levels = build_level_structure(p);
    const double w1 = levels.leg(LegRole::stokes_pump).energy;
    const double w4 = levels.leg(LegRole::as_pump).energy;
    const auto grid = arange(w4 - 60.0, w1 + 60.0, run.cfg.scenario.laser_step_narrow);
    const auto [stokes, antistokes] = excitation_spectrum(grid, p, levels);

    write_csv(run.path("excitation_scan.csv"), {}, {"laser_ueV", "I_S", "I_AS"},
              scan_rows(stokes, antistokes));

    auto window = [&](const Spectrum& s, double center) {
        Spectrum out;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (std::abs(s.grid[i] - center) <= 45.0) {
                out.grid.push_back(s.grid[i]);
                out.values.push_back(s.values[i]);
            }
        }
        out.grid_spacing = s.grid_spacing;
        return out;
    };
    const FitResult fit_s = fit_lorentzian(window(stokes, w1));
    const FitResult fit_as = fit_lorentzian(window(antistokes, w4));

    std::vector<std::string> rows;
    for (const auto& r : fit_s.to_csv_rows()) rows.push_back("stokes_excitation_" + r);
    for (const auto& r : fit_as.to_csv_rows()) rows.push_back("antistokes_excitation_" + r);
    {
        std::ofstream out(run.dir / "fits.csv", std::ios::binary);
        out << "scan_model,param,value,sigma\n";
        for (const auto& r : rows) out << r << "\n";
        run.file_names.push_back("fits.csv");
    }

    run.report << "scenario excitation_fig3c\n";
    run.report << "stokes excitation resonance (transition 1)\n" << fit_s.to_text();
    run.report << "antistokes excitation resonance (transition 4)\n" << fit_as.to_text();
}

void scenario_asymmetry(Run& run) {
    const auto& p = run.cfg.device;
    const auto levels = build_level_structure(p);
    const double ex = p.qd_center_energy;
    const auto grid = arange(ex - run.cfg.scenario.laser_span, ex + run.cfg.scenario.laser_span,
                             run.cfg.scenario.laser_step_wide);
    const auto [stokes, antistokes] = excitation_spectrum(grid, p, levels);
    write_csv(run.path("excitation_scan.csv"), {}, {"laser_ueV", "I_S", "I_AS"},
              scan_rows(stokes, antistokes));

    run.report << "scenario asymmetry_fig4a\n";
    run.report << "points " << grid.size() << "\n";
}

void scenario_ratio(Run& run) {
    const auto& p = run.cfg.device;
    const auto levels = build_level_structure(p);
    const double ex = p.qd_center_energy;
    const auto red = raman_intensities(ex - 440.0, p, levels);
    const auto blue = raman_intensities(ex + 440.0, p, levels);
    const double ratio = (red.stokes + red.antistokes) / (blue.stokes + blue.antistokes);

    write_spectrum_csv(run.path("sidebands_red_detuned.csv"),
                       sideband_lineshape(ex - 440.0, p, levels),
                       {"laser at E_X - 440 ueV (cavity side)"});
    write_spectrum_csv(run.path("sidebands_blue_detuned.csv"),
                       sideband_lineshape(ex + 440.0, p, levels),
                       {"laser at E_X + 440 ueV"});

    run.report << "scenario ratio_fig4b\n";
    run.report << "total_raman_red " << format_double(red.stokes + red.antistokes) << "\n";
    run.report << "total_raman_blue " << format_double(blue.stokes + blue.antistokes) << "\n";
    run.report << "asymmetry_ratio " << format_double(ratio) << "\n";
    run.report << "reference_band [15, 30] (measured ~20)\n";
    if (!(ratio >= 15.0 && ratio <= 30.0))
        throw PhysicsError("ratio_fig4b: asymmetry ratio outside the expected band");
}

void scenario_g2(Run& run) {
    const auto& p = run.cfg.device;
    const auto levels = build_level_structure(p);
    // laser resonant with the dressed Stokes pump leg; Stokes lands on the cavity
    const double laser = dressed_transition(p, levels, LegRole::stokes_pump).energy;

    MasterSolver solver(build_model(p, levels, laser, run.cfg.engine.fock_cutoff,
                                    engine_options(run.cfg)));
    const auto taus = arange(0.0, run.cfg.scenario.g2_tau_max_ps, run.cfg.scenario.g2_tau_step_ps);
    const CorrelationTrace raw = solver.g2(taus);
    const DetectorResponse detector{run.cfg.instrument.detector_dt_ps};
    const CorrelationTrace convolved = convolve_g2(raw, detector);
    const FitResult fit = fit_g2_rise(convolved, detector);

    write_trace_csv(run.path("g2_raw.csv"), raw);
    write_trace_csv(run.path("g2_convolved.csv"), convolved,
                    {"Gaussian detector response dt_ps=" +
                     format_double(run.cfg.instrument.detector_dt_ps)});
    {
        std::ofstream out(run.dir / "fit.csv", std::ios::binary);
        out << "model,param,value,sigma\n";
        for (const auto& r : fit.to_csv_rows()) out << r << "\n";
        run.file_names.push_back("fit.csv");
    }

    run.report << "scenario g2_fig4c\n";
    run.report << "laser_ueV " << format_double(laser) << "\n";
    run.report << "g2_zero_raw " << format_double(raw.g2.front()) << "\n";
    run.report << "g2_zero_convolved " << format_double(convolved.g2.front()) << "\n";
    run.report << fit.to_text();
    run.report << "t_rise_ns " << format_double(fit.value("t_rise_ps") / 1000.0)
               << " (measured 1.1 ns)\n";
}

void scenario_selectivity(Run& run) {
    const auto& p = run.cfg.device;
    const auto fields = arange(run.cfg.scenario.field_min_t, run.cfg.scenario.field_max_t,
                               run.cfg.scenario.field_step_t);
    std::vector<std::vector<double>> rows(fields.size());
    parallel_for(fields.size(), [&](std::size_t i) {
        const double b = fields[i];
        const double ez = zeeman_splitting(p.electron_g, b);
        rows[i] = {b, ez, selectivity(b, p)};
    });
    for (const auto& r : rows) check_finite(r, "selectivity_fig5b");
    write_csv(run.path("selectivity.csv"), {}, {"B_T", "E_z_ueV", "selectivity"}, rows);

    run.report << "scenario selectivity_fig5b\n";
    run.report << "selectivity_at_4T " << format_double(selectivity(4.0, p))
               << " (measured 0.75; equal-dipole model, no adjustable parameters)\n";
}

void scenario_spin_resolved(Run& run) {
    const auto& p = run.cfg.device;
    const auto levels = build_level_structure(p);
    const double laser = p.cavity_energy - levels.electron_zeeman;  // AS pinned on the cavity
    const SpinDynamicsOptions opts{run.cfg.engine.fock_cutoff, run.cfg.engine.reset_rate_factor};

    const double pump_duration = pump_saturation_duration_ps(p, levels, 1);
    const PumpResult down = pump_spin(p, levels, 1, pump_duration, opts);
    const PumpResult up = pump_spin(p, levels, 4, pump_duration, opts);

    const auto emission_down = spin_resolved_raman(p, levels, down.state, laser, opts);
    const auto emission_up = spin_resolved_raman(p, levels, up.state, laser, opts);
    const auto emission_mixed = randomized_spin_raman(p, levels, laser, opts);

    auto dump = [&](const SpinResolvedEmission& e, const std::string& tag) {
        write_spectrum_csv(run.path("stokes_spin_" + tag + ".csv"), e.stokes, {"spin=" + tag});
        write_spectrum_csv(run.path("antistokes_spin_" + tag + ".csv"), e.antistokes,
                           {"spin=" + tag});
    };
    dump(emission_down, "down");
    dump(emission_up, "up");
    dump(emission_mixed, "mixed");

    run.report << "scenario spin_resolved_fig5de\n";
    run.report << "pump_duration_ps " << format_double(pump_duration) << "\n";
    run.report << "fidelity_down " << format_double(down.fidelity) << "\n";
    run.report << "fidelity_up " << format_double(up.fidelity) << "\n";
    run.report << "as_weight_down " << format_double(emission_down.antistokes_weight) << "\n";
    run.report << "as_weight_up " << format_double(emission_up.antistokes_weight) << "\n";
    run.report << "as_contrast_up_over_down "
               << format_double(emission_up.antistokes_weight / emission_down.antistokes_weight)
               << "\n";
    run.report << "as_weight_mixed " << format_double(emission_mixed.antistokes_weight) << "\n";
    run.report << "stokes_weight_mixed " << format_double(emission_mixed.stokes_weight) << "\n";
}

struct OracleOutcome {
    double rms = 0.0;
    std::size_t points = 0;
};

OracleOutcome scenario_oracle(Run& run) {
    const auto& p = run.cfg.device;
    const auto levels = build_level_structure(p);
    const double ex = p.qd_center_energy;
    const double ez = levels.electron_zeeman;
    if (ez <= 0.0) throw PhysicsError("oracle_check: needs a finite magnetic field");

    // Reference: the closed-form model evaluated with the engine's dressed
    // line positions and widths (the formula's inputs are measured values).
    const DressedLine d_spump = dressed_transition(p, levels, LegRole::stokes_pump);
    const DressedLine d_apump = dressed_transition(p, levels, LegRole::as_pump);
    const DressedLine cav_down = dressed_cavity(p, levels, kDown);
    const DressedLine cav_up = dressed_cavity(p, levels, kUp);

    auto reference = [&](double wl) {
        const double gs = 0.5 * d_spump.fwhm;
        const double ga = 0.5 * d_apump.fwhm;
        const double ds = wl - d_spump.energy;
        const double da = wl - d_apump.energy;
        const double mu_s = std::pow(levels.leg(LegRole::stokes_pump).dipole *
                                     levels.leg(LegRole::stokes_emit).dipole, 2);
        const double mu_a = std::pow(levels.leg(LegRole::as_pump).dipole *
                                     levels.leg(LegRole::as_emit).dipole, 2);
        const double stokes = mu_s / (ds * ds + gs * gs) *
                              cavity_dos(wl - ez, cav_down.energy, 0.5 * cav_down.fwhm);
        const double antistokes = mu_a / (da * da + ga * ga) *
                                  cavity_dos(wl + ez, cav_up.energy, 0.5 * cav_up.fwhm);
        return std::pair{stokes, antistokes};
    };

    std::vector<double> lasers;
    for (double off = -run.cfg.scenario.laser_span; off <= run.cfg.scenario.laser_span + 1e-9;
         off += 25.0) {
        const double wl = ex + off;
        if (std::abs(wl - d_spump.energy) < 50.0 || std::abs(wl - d_apump.energy) < 50.0)
            continue;  // exclude the pump resonances; the formula assumes far detuning
        lasers.push_back(wl);
    }

    std::vector<double> eng_s(lasers.size()), eng_as(lasers.size());
    std::vector<double> ref_s(lasers.size()), ref_as(lasers.size());
    parallel_for(lasers.size(), [&](std::size_t i) {
        MasterSolver solver(build_model(p, levels, lasers[i], run.cfg.engine.fock_cutoff,
                                        engine_options(run.cfg)));
        const auto w = solver.raman_line_weights();
        eng_s[i] = w.stokes;
        eng_as[i] = w.antistokes;
        const auto [rs, ras] = reference(lasers[i]);
        ref_s[i] = rs;
        ref_as[i] = ras;
    });
    check_finite(eng_s, "oracle_check");
    check_finite(eng_as, "oracle_check");

    // single global scale fitted jointly over both sidebands
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lasers.size(); ++i) {
        num += eng_s[i] * ref_s[i] + eng_as[i] * ref_as[i];
        den += ref_s[i] * ref_s[i] + ref_as[i] * ref_as[i];
    }
    const double scale = num / den;
    double acc = 0.0;
    for (std::size_t i = 0; i < lasers.size(); ++i) {
        const double r1 = (eng_s[i] - scale * ref_s[i]) / (scale * ref_s[i]);
        const double r2 = (eng_as[i] - scale * ref_as[i]) / (scale * ref_as[i]);
        acc += r1 * r1 + r2 * r2;
    }
    const double rms = std::sqrt(acc / static_cast<double>(2 * lasers.size()));

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < lasers.size(); ++i)
        rows.push_back({lasers[i], eng_s[i], eng_as[i], scale * ref_s[i], scale * ref_as[i]});
    write_csv(run.path("oracle.csv"), {},
              {"laser_ueV", "engine_S", "engine_AS", "reference_S", "reference_AS"}, rows);

    run.report << "scenario oracle_check\n";
    run.report << "points " << lasers.size() << "\n";
    run.report << "global_scale " << format_double(scale) << "\n";
    run.report << "rms_relative_deviation " << format_double(rms) << "\n";
    run.report << "tolerance " << format_double(run.cfg.scenario.oracle_tolerance) << "\n";
    return {rms, lasers.size()};
}

void apply_baked_patch(const std::string& name, Config& cfg) {
    if (name == "g2_fig4c") {
        // QD lines tuned to 150 ueV above the cavity at 6.75 T, spin refresh
        // near 1 ns (plateau edge)
        cfg.device.magnetic_field = 6.75;
        cfg.device.cavity_energy = cfg.device.qd_center_energy - 150.0;
        cfg.device.spin_flip_rate = 0.3;
        cfg.spin_flip_explicit = true;
    } else if (name == "spin_resolved_fig5de") {
        if (!cfg.spin_flip_explicit) {
            cfg.relaxation.regime = CotunnelingRegime::plateau_center;
            cfg.device.spin_flip_rate = cfg.relaxation.gamma_ct();
        }
    }
}

} // namespace

RunManifest run_scenario(const std::string& name, const Config& config,
                         const std::string& out_dir, const std::vector<std::string>& overrides) {
    if (std::find(scenario_names().begin(), scenario_names().end(), name) ==
        scenario_names().end())
        throw ConfigError("unknown scenario '" + name + "'");

    Config cfg = config;
    apply_baked_patch(name, cfg);
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + ov + "' must have the form key=value");
        apply_setting(cfg, ov.substr(0, eq), ov.substr(eq + 1), "override");
    }
    cfg.device.finalize();

    fs::create_directories(out_dir);
    Run run{cfg, fs::path(out_dir), {}, {}};

    OracleOutcome oracle{};
    if (name == "sidebands_fig2d") scenario_sidebands(run);
    else if (name == "excitation_fig3c") scenario_excitation(run);
    else if (name == "asymmetry_fig4a") scenario_asymmetry(run);
    else if (name == "ratio_fig4b") scenario_ratio(run);
    else if (name == "g2_fig4c") scenario_g2(run);
    else if (name == "selectivity_fig5b") scenario_selectivity(run);
    else if (name == "spin_resolved_fig5de") scenario_spin_resolved(run);
    else if (name == "oracle_check") oracle = scenario_oracle(run);

    run.finish_report();

    RunManifest manifest;
    manifest.scenario = name;
    manifest.version = kVersion;
    manifest.config = cfg.snapshot();
    for (const auto& fname : run.file_names) {
        const auto full = fs::path(out_dir) / fname;
        RunManifest::FileEntry entry;
        entry.name = fname;
        entry.bytes = static_cast<std::uint64_t>(fs::file_size(full));
        entry.digest = file_digest_hex(full.string());
        manifest.files.push_back(entry);
    }
    {
        std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
        out << manifest.to_json();
    }

    if (name == "oracle_check" && oracle.rms > cfg.scenario.oracle_tolerance) {
        std::ostringstream msg;
        msg << "oracle_check: engine-vs-model RMS deviation " << oracle.rms
            << " exceeds tolerance " << cfg.scenario.oracle_tolerance;
        throw OracleMismatchError(msg.str());
    }
    return manifest;
}

} // namespace spinraman
