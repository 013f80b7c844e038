#include "spinraman/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "spinraman/errors.hpp"
#include "spinraman/spectrum.hpp"
#include "spinraman/units.hpp"

namespace spinraman {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_number(const std::string& value, const std::string& where) {
    const std::string v = trim(value);
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty())
        throw ConfigError(where + ": expected a number, got '" + value + "'");
    if (!std::isfinite(d)) throw ConfigError(where + ": value must be finite");
    return d;
}

int parse_int(const std::string& value, const std::string& where) {
    const double d = parse_number(value, where);
    const int i = static_cast<int>(std::llround(d));
    if (std::abs(d - i) > 1e-9) throw ConfigError(where + ": expected an integer");
    return i;
}

bool parse_bool(const std::string& value, const std::string& where) {
    const std::string v = trim(value);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(where + ": expected true/false, got '" + value + "'");
}

struct KeyHandler {
    std::string doc;
    std::function<void(Config&, const std::string&, const std::string&)> apply;
    std::function<std::string(const Config&)> read;
};

std::string fmt(double v) { return format_double(v); }

const std::map<std::string, KeyHandler>& key_table() {
    static const std::map<std::string, KeyHandler> table = [] {
        std::map<std::string, KeyHandler> t;
        auto num = [](std::string doc, double DeviceParameters::* field) {
            return KeyHandler{
                std::move(doc),
                [field](Config& c, const std::string& v, const std::string& w) {
                    c.device.*field = parse_number(v, w);
                },
                [field](const Config& c) { return fmt(c.device.*field); }};
        };
        t["device.qd_center_energy"] = num("trion transition centroid E_X (ueV)",
                                           &DeviceParameters::qd_center_energy);
        t["device.cavity_energy"] = num("cavity mode energy (ueV)", &DeviceParameters::cavity_energy);
        t["device.cavity_hwhm"] = num("cavity half width Gamma (ueV); FWHM = 2*Gamma",
                                      &DeviceParameters::cavity_hwhm);
        t["device.cavity_q"] = KeyHandler{
            "cavity quality factor (optional alternative to cavity_hwhm)",
            [](Config& c, const std::string& v, const std::string& w) {
                c.device.cavity_q = parse_number(v, w);
            },
            [](const Config& c) { return c.device.cavity_q ? fmt(*c.device.cavity_q) : "unset"; }};
        t["device.electron_g"] = num("in-plane electron g-factor", &DeviceParameters::electron_g);
        t["device.trion_g"] = num("in-plane trion (hole) g-factor", &DeviceParameters::trion_g);
        t["device.qd_hwhm"] = num("optical transition half width gamma (ueV)",
                                  &DeviceParameters::qd_hwhm);
        t["device.spin_dephasing_rate"] = num("ground-spin dephasing gamma_s (ueV); sideband FWHM = 2*gamma_s",
                                              &DeviceParameters::spin_dephasing_rate);
        t["device.spin_flip_rate"] = KeyHandler{
            "co-tunneling flip rate Gamma_ct per direction (ueV); overrides spin.regime",
            [](Config& c, const std::string& v, const std::string& w) {
                c.device.spin_flip_rate = parse_number(v, w);
                c.spin_flip_explicit = true;
            },
            [](const Config& c) { return fmt(c.device.spin_flip_rate); }};
        t["device.radiative_rate"] = num("free-space trion decay gamma_r (ueV)",
                                         &DeviceParameters::radiative_rate);
        t["device.qd_cavity_coupling"] = num("QD-cavity coupling g_c (ueV)",
                                             &DeviceParameters::qd_cavity_coupling);
        t["device.drive_rabi"] = num("drive Rabi energy Omega (ueV)", &DeviceParameters::drive_rabi);
        t["device.polarization_mixing_angle"] = num(
            "deviation of transitions 2/3 from exact cavity alignment (rad)",
            &DeviceParameters::polarization_mixing_angle);
        t["device.magnetic_field"] = num("in-plane magnetic field (T)",
                                         &DeviceParameters::magnetic_field);
        t["device.dipole_t1_up"] = num("relative dipole of the T1-up leg", &DeviceParameters::dipole_t1_up);
        t["device.dipole_t1_down"] = num("relative dipole of the T1-down leg", &DeviceParameters::dipole_t1_down);
        t["device.dipole_t2_up"] = num("relative dipole of the T2-up leg", &DeviceParameters::dipole_t2_up);
        t["device.dipole_t2_down"] = num("relative dipole of the T2-down leg", &DeviceParameters::dipole_t2_down);
        t["device.swap_lambda_legs"] = KeyHandler{
            "mirror the spin/trion labeling of the lambda legs",
            [](Config& c, const std::string& v, const std::string& w) {
                c.device.swap_lambda_legs = parse_bool(v, w);
            },
            [](const Config& c) { return c.device.swap_lambda_legs ? "true" : "false"; }};

        t["engine.fock_cutoff"] = KeyHandler{
            "photon number cutoff N_max (>= 1)",
            [](Config& c, const std::string& v, const std::string& w) {
                c.engine.fock_cutoff = parse_int(v, w);
                if (c.engine.fock_cutoff < 1) throw ConfigError(w + ": fock_cutoff must be >= 1");
            },
            [](const Config& c) { return std::to_string(c.engine.fock_cutoff); }};
        t["engine.trion_dephasing"] = KeyHandler{
            "extra trion pure dephasing (ueV, default 0)",
            [](Config& c, const std::string& v, const std::string& w) {
                c.engine.trion_dephasing = parse_number(v, w);
                if (c.engine.trion_dephasing < 0) throw ConfigError(w + ": must be >= 0");
            },
            [](const Config& c) { return fmt(c.engine.trion_dephasing); }};
        t["engine.fock_guard"] = KeyHandler{
            "error threshold for the top Fock level population (<= 0 disables)",
            [](Config& c, const std::string& v, const std::string& w) {
                c.engine.fock_guard = parse_number(v, w);
            },
            [](const Config& c) { return fmt(c.engine.fock_guard); }};
        t["engine.reset_rate_factor"] = KeyHandler{
            "spin pinning rate for conditional spectra, as a fraction of gamma_s",
            [](Config& c, const std::string& v, const std::string& w) {
                c.engine.reset_rate_factor = parse_number(v, w);
                if (c.engine.reset_rate_factor <= 0) throw ConfigError(w + ": must be > 0");
            },
            [](const Config& c) { return fmt(c.engine.reset_rate_factor); }};

        t["spin.cotunneling_regime"] = KeyHandler{
            "plateau-edge (fast flips) or plateau-center (slow)",
            [](Config& c, const std::string& v, const std::string& w) {
                const std::string r = trim(v);
                if (r == "plateau-edge") c.relaxation.regime = CotunnelingRegime::plateau_edge;
                else if (r == "plateau-center") c.relaxation.regime = CotunnelingRegime::plateau_center;
                else throw ConfigError(w + ": expected plateau-edge or plateau-center");
            },
            [](const Config& c) {
                return c.relaxation.regime == CotunnelingRegime::plateau_edge ? "plateau-edge"
                                                                              : "plateau-center";
            }};
        t["spin.plateau_edge_factor"] = KeyHandler{
            "edge-to-center co-tunneling rate ratio",
            [](Config& c, const std::string& v, const std::string& w) {
                c.relaxation.plateau_edge_factor = parse_number(v, w);
                if (c.relaxation.plateau_edge_factor <= 0) throw ConfigError(w + ": must be > 0");
            },
            [](const Config& c) { return fmt(c.relaxation.plateau_edge_factor); }};
        t["spin.t1_cold_k"] = KeyHandler{
            "temperature of the cold T1 point (K)",
            [](Config& c, const std::string& v, const std::string& w) {
                c.relaxation.t1_points[0].temperature_k = parse_number(v, w);
            },
            [](const Config& c) { return fmt(c.relaxation.t1_points[0].temperature_k); }};
        t["spin.t1_cold_ps"] = KeyHandler{
            "T1 at the cold point (ps)",
            [](Config& c, const std::string& v, const std::string& w) {
                c.relaxation.t1_points[0].t1_ps = parse_number(v, w);
            },
            [](const Config& c) { return fmt(c.relaxation.t1_points[0].t1_ps); }};
        t["spin.t1_hot_k"] = KeyHandler{
            "temperature of the hot T1 point (K)",
            [](Config& c, const std::string& v, const std::string& w) {
                c.relaxation.t1_points[1].temperature_k = parse_number(v, w);
            },
            [](const Config& c) { return fmt(c.relaxation.t1_points[1].temperature_k); }};
        t["spin.t1_hot_ps"] = KeyHandler{
            "T1 at the hot point (ps)",
            [](Config& c, const std::string& v, const std::string& w) {
                c.relaxation.t1_points[1].t1_ps = parse_number(v, w);
            },
            [](const Config& c) { return fmt(c.relaxation.t1_points[1].t1_ps); }};

        auto inst = [](std::string doc, double InstrumentSettings::* field) {
            return KeyHandler{
                std::move(doc),
                [field](Config& c, const std::string& v, const std::string& w) {
                    c.instrument.*field = parse_number(v, w);
                    if (c.instrument.*field <= 0) throw ConfigError(w + ": must be > 0");
                },
                [field](const Config& c) { return fmt(c.instrument.*field); }};
        };
        t["instrument.fp_fwhm"] = inst("Fabry-Perot resolution FWHM (ueV)", &InstrumentSettings::fp_fwhm);
        t["instrument.fp_fsr"] = inst("Fabry-Perot free spectral range (ueV)", &InstrumentSettings::fp_fsr);
        t["instrument.detector_dt_ps"] = inst("detector Gaussian response width (ps)",
                                              &InstrumentSettings::detector_dt_ps);

        auto scen = [](std::string doc, double ScenarioSettings::* field, bool positive = true) {
            return KeyHandler{
                std::move(doc),
                [field, positive](Config& c, const std::string& v, const std::string& w) {
                    c.scenario.*field = parse_number(v, w);
                    if (positive && c.scenario.*field <= 0) throw ConfigError(w + ": must be > 0");
                },
                [field](const Config& c) { return fmt(c.scenario.*field); }};
        };
        t["scenario.field_min_t"] = scen("field sweep start (T)", &ScenarioSettings::field_min_t, false);
        t["scenario.field_max_t"] = scen("field sweep end (T)", &ScenarioSettings::field_max_t, false);
        t["scenario.field_step_t"] = scen("field sweep step (T)", &ScenarioSettings::field_step_t);
        t["scenario.laser_span"] = scen("half-span of wide laser scans (ueV)", &ScenarioSettings::laser_span);
        t["scenario.laser_step_wide"] = scen("wide-scan laser step (ueV)", &ScenarioSettings::laser_step_wide);
        t["scenario.laser_step_narrow"] = scen("narrow-scan laser step (ueV)",
                                               &ScenarioSettings::laser_step_narrow);
        t["scenario.g2_tau_max_ps"] = scen("g2 trace span (ps)", &ScenarioSettings::g2_tau_max_ps);
        t["scenario.g2_tau_step_ps"] = scen("g2 trace step (ps)", &ScenarioSettings::g2_tau_step_ps);
        t["scenario.oracle_tolerance"] = scen("allowed engine-vs-model RMS deviation",
                                              &ScenarioSettings::oracle_tolerance);
        return t;
    }();
    return table;
}

} // namespace

void apply_setting(Config& config, const std::string& key, const std::string& value,
                   const std::string& origin) {
    const auto& table = key_table();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(origin + ": unknown key '" + key + "'");
    it->second.apply(config, value, origin + ": " + key);
}

std::map<std::string, std::string> Config::snapshot() const {
    std::map<std::string, std::string> out;
    for (const auto& [key, handler] : key_table()) out[key] = handler.read(*this);
    return out;
}

std::vector<std::pair<std::string, std::string>> config_key_docs() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [key, handler] : key_table()) out.emplace_back(key, handler.doc);
    return out;
}

namespace {

void finalize_config(Config& config) {
    if (!config.spin_flip_explicit)
        config.device.spin_flip_rate = config.relaxation.gamma_ct();
    auto warnings = config.device.finalize();
    config.warnings.insert(config.warnings.end(), warnings.begin(), warnings.end());
    if (config.scenario.field_max_t < config.scenario.field_min_t)
        throw ConfigError("scenario.field_max_t must be >= scenario.field_min_t");
    for (const auto& p : config.relaxation.t1_points)
        if (p.t1_ps <= 0.0) throw ConfigError("spin T1 points must be positive");
}

} // namespace

Config parse_config_text(const std::string& text, const std::string& origin,
                         const std::vector<std::string>& overrides) {
    Config config;
    config.relaxation = RelaxationModel::measured_default();

    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + " line " + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        const std::string full_key = section.empty() ? key : section + "." + key;
        apply_setting(config, full_key, value, where);
    }

    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + ov + "' must have the form key=value");
        apply_setting(config, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)), "override");
    }

    finalize_config(config);
    return config;
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
    if (path.empty()) return parse_config_text("", "<defaults>", overrides);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path, overrides);
}

} // namespace spinraman
