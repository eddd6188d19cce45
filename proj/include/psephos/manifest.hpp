#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "psephos/common.hpp"

namespace psephos {

inline constexpr const char* kToolVersion = "0.1.0";

// Single source of truth for a run: seed, per-stage config snapshots, and the
// relative paths of every artifact each stage produced. A stage finds its
// inputs here, so re-running any stage from the manifest alone reproduces it.
struct RunManifest {
    std::string run_id;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    nlohmann::json config = nlohmann::json::object();      // stage -> settings
    std::map<std::string, std::string> artifacts;          // name -> relative path

    // Paths are stored relative to the manifest's directory.
    std::string artifact(const std::string& name, const std::string& required_stage) const;
    bool has(const std::string& name) const { return artifacts.count(name) > 0; }

    static RunManifest load(const std::filesystem::path& path);
    static RunManifest load_or_create(const std::filesystem::path& path, std::uint64_t seed);
    void save(const std::filesystem::path& path) const;
};

std::string derive_run_id(std::uint64_t seed);

}  // namespace psephos
