#include "psephos/manifest.hpp"

#include <fstream>
#include <sstream>

#include "psephos/rng.hpp"

namespace psephos {

using nlohmann::json;

std::string derive_run_id(std::uint64_t seed) {
    std::ostringstream ss;
    ss << "run-" << std::hex << Rng::mix(seed ^ Rng::hash_str(kToolVersion));
    return ss.str();
}

std::string RunManifest::artifact(const std::string& name, const std::string& required_stage) const {
    const auto it = artifacts.find(name);
    if (it == artifacts.end())
        throw DependencyError("missing upstream artifact '" + name + "'; run the " +
                              required_stage + " stage first");
    return it->second;
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (j.value("schema_version", 0) != 1)
        throw ValidationError(path.string() + ": unsupported manifest schema, migration required");
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config = j.value("config", json::object());
    const json artifacts_json = j.value("artifacts", json::object());
    for (const auto& [name, rel] : artifacts_json.items())
        m.artifacts[name] = rel.get<std::string>();
    return m;
}

RunManifest RunManifest::load_or_create(const std::filesystem::path& path, std::uint64_t seed) {
    if (std::filesystem::exists(path)) {
        RunManifest m = load(path);
        if (m.seed != seed)
            throw ValidationError("manifest " + path.string() + " was created with seed " +
                                  std::to_string(m.seed) + ", rerun with the same seed or a fresh "
                                  "out-dir");
        return m;
    }
    RunManifest m;
    m.seed = seed;
    m.run_id = derive_run_id(seed);
    return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
    const auto dir = path.parent_path();
    for (const auto& [name, rel] : artifacts) {
        if (!std::filesystem::exists(dir / rel))
            throw ValidationError("manifest artifact '" + name + "' points to missing file " +
                                  (dir / rel).string());
    }
    json j;
    j["schema_version"] = 1;
    j["run_id"] = run_id;
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    j["config"] = config;
    json arts = json::object();
    for (const auto& [name, rel] : artifacts) arts[name] = rel;
    j["artifacts"] = arts;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace psephos
