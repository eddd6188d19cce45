#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psephos/beliefs.hpp"
#include "psephos/common.hpp"
#include "psephos/corpus.hpp"
#include "psephos/population.hpp"

namespace psephos {

struct CalibrationReport {
    std::array<double, kOrientationCount> pre_pct{};
    std::array<double, kOrientationCount> post_pct{};
    std::array<double, kOrientationCount> target_pct{};
    // Signed (current - target) agent counts at calibration time.
    std::array<std::int64_t, kOrientationCount> deltas{};
    std::int64_t n_reassigned = 0;
    bool ran = false;  // false when the pre-distribution was already in tolerance
    double tolerance_pp = 2.0;

    struct RegionCheck {
        Region region;
        Orientation pre_plurality;
        Orientation post_plurality;
        bool preserved = false;
    };
    std::vector<RegionCheck> regional_checks;  // regions with at least one agent
    bool regional_pass = true;

    std::string to_json_string() const;
};

struct CalibrationConfig {
    std::array<double, kOrientationCount> target_pct = {26.0, 48.0, 26.0};
    double tolerance_pp = 2.0;
    // When set, a failed regional plurality check raises instead of being
    // reported advisory-only.
    bool strict_regional = false;
    double blend_keep = 0.7;    // weight on the agent's existing belief
    double noise_sigma = 0.03;  // sd of the per-dimension nudge noise
};

// Reassigns agents from excess orientations into deficit orientations until
// the distribution matches the target counts. Borderline (plain-detail)
// agents move before "very"-detail agents; selection within a priority class
// is uniform on the seeded stream; excess pools drain into deficits
// proportionally. Reassigned agents take the plain detail of their new
// orientation and get their beliefs blended toward the new orientation's
// prior means with clipped Gaussian noise. Demographics never change.
std::pair<std::vector<AgentRecord>, CalibrationReport> calibrate_population(
    std::vector<AgentRecord> agents, const CalibrationConfig& config, const BeliefPriors& priors,
    const RegionMap& regions, std::uint64_t seed);

}  // namespace psephos
