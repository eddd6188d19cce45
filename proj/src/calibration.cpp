#include "psephos/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "psephos/rng.hpp"

namespace psephos {

using nlohmann::json;

namespace {

enum StreamTag : std::uint64_t {
    kTagSelect = 64,
    kTagNudgeBase = 72,  // +dimension
};

std::array<std::int64_t, kOrientationCount> orientation_counts(
    const std::vector<AgentRecord>& agents) {
    std::array<std::int64_t, kOrientationCount> n{};
    for (const auto& a : agents) n[static_cast<int>(a.orientation)]++;
    return n;
}

// Integer target counts from percent targets, largest-remainder so they sum
// to the population size. Ties break in orientation enum order.
std::array<std::int64_t, kOrientationCount> target_counts(
    const std::array<double, kOrientationCount>& target_pct, std::int64_t n) {
    std::array<double, kOrientationCount> quota{};
    std::array<std::int64_t, kOrientationCount> counts{};
    std::int64_t sum = 0;
    for (int o = 0; o < kOrientationCount; ++o) {
        quota[o] = static_cast<double>(n) * target_pct[o] / 100.0;
        counts[o] = static_cast<std::int64_t>(std::floor(quota[o]));
        sum += counts[o];
    }
    std::array<int, kOrientationCount> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
    });
    for (int i = 0; sum < n; ++i, ++sum) counts[order[i % kOrientationCount]]++;
    return counts;
}

// Partisan lean of a region: the larger of its conservative and progressive
// camps. Comparing against moderates would be vacuous, since redistributing
// to a moderate-heavy target makes moderate the raw plurality everywhere.
std::optional<Orientation> region_plurality(const std::vector<AgentRecord>& agents,
                                            const RegionMap& regions, Region r) {
    std::array<std::int64_t, kOrientationCount> n{};
    bool any = false;
    for (const auto& a : agents) {
        if (regions.region_of(a.sido) != r) continue;
        n[static_cast<int>(a.orientation)]++;
        any = true;
    }
    if (!any) return std::nullopt;
    const auto cons = n[static_cast<int>(Orientation::conservative)];
    const auto prog = n[static_cast<int>(Orientation::progressive)];
    if (cons > prog) return Orientation::conservative;
    if (prog > cons) return Orientation::progressive;
    return Orientation::moderate;  // no lean
}

}  // namespace

std::pair<std::vector<AgentRecord>, CalibrationReport> calibrate_population(
    std::vector<AgentRecord> agents, const CalibrationConfig& config, const BeliefPriors& priors,
    const RegionMap& regions, std::uint64_t seed) {
    const double target_sum =
        std::accumulate(config.target_pct.begin(), config.target_pct.end(), 0.0);
    if (std::abs(target_sum - 100.0) > 0.01)
        throw ValidationError("calibration target sums to " + format_double(target_sum, 4) +
                              ", expected 100");
    if (agents.empty()) throw ValidationError("calibrate_population: empty population");
    for (const auto& a : agents) {
        if (a.stage != Stage::full)
            throw ValidationError("calibrate_population expects stage full agents");
    }
    priors.validate();

    const std::int64_t n = static_cast<std::int64_t>(agents.size());
    const auto pre = orientation_counts(agents);
    const auto targets = target_counts(config.target_pct, n);

    CalibrationReport report;
    report.tolerance_pp = config.tolerance_pp;
    report.target_pct = config.target_pct;
    for (int o = 0; o < kOrientationCount; ++o) {
        report.pre_pct[o] = 100.0 * static_cast<double>(pre[o]) / static_cast<double>(n);
        report.deltas[o] = pre[o] - targets[o];
    }

    std::array<std::optional<Orientation>, kRegionCount> pre_plurality;
    for (int r = 0; r < kRegionCount; ++r)
        pre_plurality[r] = region_plurality(agents, regions, static_cast<Region>(r));

    bool within = true;
    for (int o = 0; o < kOrientationCount; ++o)
        within &= std::abs(report.pre_pct[o] - config.target_pct[o]) <= config.tolerance_pp;

    if (!within) {
        report.ran = true;

        // Per excess orientation: plain-detail agents first, then very-detail,
        // each class shuffled on the seeded stream.
        std::array<std::vector<std::size_t>, kOrientationCount> pool;
        for (int o = 0; o < kOrientationCount; ++o) {
            if (report.deltas[o] <= 0) continue;
            std::vector<std::size_t> plain;
            std::vector<std::size_t> very;
            for (std::size_t i = 0; i < agents.size(); ++i) {
                if (static_cast<int>(agents[i].orientation) != o) continue;
                (is_very_detail(agents[i].orientation_detail) ? very : plain).push_back(i);
            }
            Rng rng = Rng::stream(seed, {kTagSelect, static_cast<std::uint64_t>(o)});
            rng.shuffle(plain);
            rng.shuffle(very);
            pool[o] = std::move(plain);
            pool[o].insert(pool[o].end(), very.begin(), very.end());
        }

        const std::int64_t total_excess =
            std::accumulate(report.deltas.begin(), report.deltas.end(), std::int64_t{0},
                            [](std::int64_t acc, std::int64_t d) { return acc + std::max<std::int64_t>(d, 0); });

        // Flows from each excess pool into each deficit, proportional to the
        // pool's share of the total excess. Floors first, then fill the
        // remaining shortfall by largest fractional remainder subject to both
        // margins, so every row drains exactly its excess and every column
        // receives exactly its need.
        std::array<std::array<std::int64_t, kOrientationCount>, kOrientationCount> flow{};
        std::array<std::array<double, kOrientationCount>, kOrientationCount> exact{};
        std::array<std::int64_t, kOrientationCount> row_left{};
        std::array<std::int64_t, kOrientationCount> col_left{};
        for (int e = 0; e < kOrientationCount; ++e)
            row_left[e] = std::max<std::int64_t>(report.deltas[e], 0);
        for (int d = 0; d < kOrientationCount; ++d)
            col_left[d] = -std::min<std::int64_t>(report.deltas[d], 0);
        for (int e = 0; e < kOrientationCount; ++e) {
            if (report.deltas[e] <= 0) continue;
            for (int d = 0; d < kOrientationCount; ++d) {
                if (report.deltas[d] >= 0) continue;
                exact[e][d] = static_cast<double>(col_left[d]) *
                              static_cast<double>(report.deltas[e]) /
                              static_cast<double>(total_excess);
                flow[e][d] = static_cast<std::int64_t>(std::floor(exact[e][d]));
            }
        }
        for (int e = 0; e < kOrientationCount; ++e)
            for (int d = 0; d < kOrientationCount; ++d) row_left[e] -= flow[e][d];
        for (int d = 0; d < kOrientationCount; ++d)
            for (int e = 0; e < kOrientationCount; ++e) col_left[d] -= flow[e][d];
        for (;;) {
            int pick_e = -1;
            int pick_d = -1;
            double best = -1.0;
            for (int e = 0; e < kOrientationCount; ++e) {
                if (row_left[e] <= 0) continue;
                for (int d = 0; d < kOrientationCount; ++d) {
                    if (col_left[d] <= 0) continue;
                    const double rem = exact[e][d] - static_cast<double>(flow[e][d]);
                    if (rem > best) {
                        best = rem;
                        pick_e = e;
                        pick_d = d;
                    }
                }
            }
            if (pick_e < 0) break;
            flow[pick_e][pick_d]++;
            row_left[pick_e]--;
            col_left[pick_d]--;
        }

        std::array<std::size_t, kOrientationCount> cursor{};
        for (int e = 0; e < kOrientationCount; ++e) {
            for (int d = 0; d < kOrientationCount; ++d) {
                for (std::int64_t k = 0; k < flow[e][d]; ++k) {
                    if (cursor[e] >= pool[e].size())
                        throw ValidationError(
                            "calibration deficit unfillable: ran out of " +
                            std::string(to_token(static_cast<Orientation>(e))) + " agents with " +
                            std::to_string(flow[e][d] - k) + " reassignments outstanding");
                    AgentRecord& a = agents[pool[e][cursor[e]++]];
                    const auto new_orientation = static_cast<Orientation>(d);
                    a.orientation = new_orientation;
                    a.orientation_detail = plain_detail(new_orientation);
                    for (int dim = 0; dim < 5; ++dim) {
                        Rng rng = Rng::stream(seed, {kTagNudgeBase + static_cast<std::uint64_t>(dim),
                                                     static_cast<std::uint64_t>(a.agent_id)});
                        const double nudged = config.blend_keep * a.beliefs[dim] +
                                              (1.0 - config.blend_keep) * priors.at(new_orientation, dim).mu +
                                              rng.normal(0.0, config.noise_sigma);
                        a.beliefs[dim] = std::clamp(nudged, 0.0, 1.0);
                    }
                    report.n_reassigned++;
                }
            }
        }
    }

    const auto post = orientation_counts(agents);
    for (int o = 0; o < kOrientationCount; ++o)
        report.post_pct[o] = 100.0 * static_cast<double>(post[o]) / static_cast<double>(n);

    for (int r = 0; r < kRegionCount; ++r) {
        if (!pre_plurality[r]) continue;
        const auto post_plu = region_plurality(agents, regions, static_cast<Region>(r));
        CalibrationReport::RegionCheck check;
        check.region = static_cast<Region>(r);
        check.pre_plurality = *pre_plurality[r];
        check.post_plurality = *post_plu;
        // A lean may soften to a tie in small regions; only a reversal to the
        // opposite pole fails the check.
        const bool reversed =
            (check.pre_plurality == Orientation::conservative &&
             check.post_plurality == Orientation::progressive) ||
            (check.pre_plurality == Orientation::progressive &&
             check.post_plurality == Orientation::conservative);
        check.preserved = !reversed;
        report.regional_pass &= check.preserved;
        report.regional_checks.push_back(check);
    }
    if (config.strict_regional && !report.regional_pass)
        throw ValidationError("calibration changed a regional plurality and strict mode is on");

    return {std::move(agents), std::move(report)};
}

std::string CalibrationReport::to_json_string() const {
    json j;
    j["schema_version"] = 1;
    j["ran"] = ran;
    j["tolerance_pp"] = tolerance_pp;
    j["n_reassigned"] = n_reassigned;
    for (int o = 0; o < kOrientationCount; ++o) {
        const std::string key(to_token(static_cast<Orientation>(o)));
        j["pre_pct"][key] = pre_pct[o];
        j["post_pct"][key] = post_pct[o];
        j["target_pct"][key] = target_pct[o];
        j["delta_agents"][key] = deltas[o];
    }
    json checks = json::array();
    for (const auto& c : regional_checks) {
        checks.push_back({{"region", std::string(to_token(c.region))},
                          {"pre_plurality", std::string(to_token(c.pre_plurality))},
                          {"post_plurality", std::string(to_token(c.post_plurality))},
                          {"preserved", c.preserved}});
    }
    j["regional_checks"] = checks;
    j["regional_pass"] = regional_pass;
    return j.dump(2) + "\n";
}

}  // namespace psephos
