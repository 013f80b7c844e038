// spinraman CLI: runs named scenarios, validates configurations, and checks
// the Lindblad engine against the closed-form Raman model.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "spinraman/config.hpp"
#include "spinraman/errors.hpp"
#include "spinraman/scenario.hpp"
#include "spinraman/spectrum.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPhysics = 2;
constexpr int kExitOracle = 3;

void print_warnings(const spinraman::Config& config) {
    for (const auto& w : config.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

int run_simulate(const std::string& scenario, const std::string& config_path,
                 const std::string& out_dir, const std::vector<std::string>& sets) {
    const auto config = spinraman::load_config(config_path);
    print_warnings(config);
    const std::string dir = out_dir.empty() ? "out/" + scenario : out_dir;
    const auto manifest = spinraman::run_scenario(scenario, config, dir, sets);
    std::printf("scenario %s -> %s (%zu files)\n", scenario.c_str(), dir.c_str(),
                manifest.files.size());
    for (const auto& f : manifest.files)
        std::printf("  %s  %llu bytes  %s\n", f.name.c_str(),
                    static_cast<unsigned long long>(f.bytes), f.digest.c_str());
    return kExitOk;
}

int run_validate(const std::string& config_path) {
    const auto config = spinraman::load_config(config_path);
    print_warnings(config);
    for (const auto& [key, value] : config.snapshot())
        std::printf("%s = %s\n", key.c_str(), value.c_str());
    return kExitOk;
}

int run_oracle_check(const std::string& config_path, double tolerance,
                     const std::string& out_dir) {
    auto config = spinraman::load_config(config_path);
    print_warnings(config);
    config.scenario.oracle_tolerance = tolerance;
    const std::string dir = out_dir.empty() ? "out/oracle_check" : out_dir;
    spinraman::run_scenario("oracle_check", config, dir);
    std::printf("oracle check passed (tolerance %s), outputs in %s\n",
                spinraman::format_double(tolerance).c_str(), dir.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cavity-stimulated Raman spin-flip emission simulator"};
    app.require_subcommand(1);

    std::string scenario, config_path, out_dir;
    std::vector<std::string> sets;
    double tolerance = 0.05;

    auto* simulate = app.add_subcommand("simulate", "run a named scenario");
    simulate->add_option("--scenario", scenario, "scenario name")
        ->required()
        ->check(CLI::IsMember(spinraman::scenario_names()));
    simulate->add_option("--config", config_path, "configuration file (TOML-style key = value)");
    simulate->add_option("--out", out_dir, "output directory (default out/<scenario>)");
    simulate->add_option("--set", sets, "override, key=value (repeatable)");

    auto* validate = app.add_subcommand("validate", "validate a configuration file");
    validate->add_option("--config", config_path, "configuration file")->required();

    auto* oracle = app.add_subcommand("oracle-check",
                                      "compare the Lindblad engine against the closed-form model");
    oracle->add_option("--tolerance", tolerance, "allowed RMS relative deviation");
    oracle->add_option("--config", config_path, "configuration file");
    oracle->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
        if (simulate->parsed()) return run_simulate(scenario, config_path, out_dir, sets);
        if (validate->parsed()) return run_validate(config_path);
        if (oracle->parsed()) return run_oracle_check(config_path, tolerance, out_dir);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const spinraman::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const spinraman::OracleMismatchError& e) {
        std::fprintf(stderr, "oracle mismatch: %s\n", e.what());
        return kExitOracle;
    } catch (const spinraman::PhysicsError& e) {
        std::fprintf(stderr, "physics error: %s\n", e.what());
        return kExitPhysics;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitPhysics;
    }
}
