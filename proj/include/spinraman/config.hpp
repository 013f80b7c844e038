// Structured key-value configuration (TOML-style sections of key = value
// lines) resolving to the device profile plus engine, instrument, spin and
// scenario settings. Unknown keys are errors carrying the key path and line.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "spinraman/device.hpp"
#include "spinraman/spin.hpp"

namespace spinraman {

struct EngineSettings {
    int fock_cutoff = 2;
    double trion_dephasing = 0.0;   // ueV
    double fock_guard = 1e-4;
    double reset_rate_factor = 0.02;
};

struct InstrumentSettings {
    double fp_fwhm = 1.7;       // ueV
    double fp_fsr = 400.0;      // ueV
    double detector_dt_ps = 400.0;
};

struct ScenarioSettings {
    double field_min_t = 1.0;
    double field_max_t = 7.0;
    double field_step_t = 0.25;
    double laser_span = 600.0;        // ueV, half-span of wide scans
    double laser_step_wide = 2.0;     // ueV
    double laser_step_narrow = 0.5;   // ueV
    double g2_tau_max_ps = 12000.0;
    double g2_tau_step_ps = 20.0;
    double oracle_tolerance = 0.05;
};

struct Config {
    DeviceParameters device;
    EngineSettings engine;
    InstrumentSettings instrument;
    ScenarioSettings scenario;
    RelaxationModel relaxation;
    bool spin_flip_explicit = false;  // device.spin_flip_rate set by the user
    std::vector<std::string> warnings;

    // Resolved key -> value snapshot (deterministic ordering).
    std::map<std::string, std::string> snapshot() const;
};

// Parse and apply one "section.key = value" assignment. Throws ConfigError
// with the key path (and origin) on unknown keys, type mismatches or
// violated invariants.
void apply_setting(Config& config, const std::string& key, const std::string& value,
                   const std::string& origin);

// Load a configuration file; an empty path yields the built-in base profile.
// finalize() is applied: parameter invariants checked, dipoles normalized,
// co-tunneling rate resolved from the regime unless set explicitly.
Config load_config(const std::string& path, const std::vector<std::string>& overrides = {});

Config parse_config_text(const std::string& text, const std::string& origin,
                         const std::vector<std::string>& overrides = {});

// List of all documented keys with one-line descriptions (for --help/README).
std::vector<std::pair<std::string, std::string>> config_key_docs();

} // namespace spinraman
