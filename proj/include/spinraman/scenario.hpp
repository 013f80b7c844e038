// Named figure-reproduction scenarios: each maps the resolved configuration
// onto a pipeline, writes CSV outputs plus a plain-text report into the run
// directory, and returns a manifest with content digests.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spinraman/config.hpp"

namespace spinraman {

inline constexpr const char* kVersion = "1.0.0";

struct RunManifest {
    std::string scenario;
    std::string version;
    std::map<std::string, std::string> config;

    struct FileEntry {
        std::string name;
        std::uint64_t bytes = 0;
        std::string digest;  // fnv1a64, hex
    };
    std::vector<FileEntry> files;

    std::string to_json() const;
};

const std::vector<std::string>& scenario_names();

// Runs the named scenario. The scenario's baked geometry patch is applied to
// a copy of the configuration first, then the user overrides (key=value) so
// they always win. Outputs are deterministic for identical inputs.
RunManifest run_scenario(const std::string& name, const Config& config,
                         const std::string& out_dir,
                         const std::vector<std::string>& overrides = {});

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string file_digest_hex(const std::string& path);

} // namespace spinraman
