#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psephos/common.hpp"
#include "psephos/decision.hpp"
#include "psephos/population.hpp"
#include "psephos/scenario.hpp"

namespace psephos {

// Mention-rate decomposition over reasoning text: how often each candidate is
// mentioned at all (salience) and how often a mention converts to a vote
// (decision). Mention matching is alias-substring over whitespace-normalized
// text; abstainers are excluded from every denominator.
struct MentionEntry {
    std::string candidate;
    std::string model_id;
    std::int64_t n_nonabstain = 0;
    std::int64_t n_mention = 0;
    std::int64_t n_vote_and_mention = 0;
    double mention_rate_pct = 0.0;
    std::optional<double> vote_given_mention_pct;  // absent when nothing mentions
};

struct MentionReport {
    std::vector<MentionEntry> entries;  // candidate-major, model-minor order

    const MentionEntry* find(const std::string& candidate, const std::string& model_id) const;
    std::string to_json_string() const;
};

MentionReport mention_report(const std::vector<VoteRecord>& records,
                             const ElectionScenario& scenario);

bool reasoning_mentions(const std::string& reasoning, const Candidate& candidate);

// Per-orientation split of non-abstaining votes landing on a named candidate
// lineage (e.g. the progressive-party candidates across elections).
struct ConsistencyEntry {
    std::int64_t n_voting = 0;
    std::int64_t n_lineage = 0;
    std::optional<double> lineage_pct;
};

std::array<ConsistencyEntry, kOrientationCount> orientation_vote_consistency(
    const std::vector<VoteRecord>& records, const std::vector<AgentRecord>& agents,
    const std::vector<std::string>& lineage_names);

// Stratified audit sample for external coding of reasoning traces: per model,
// up to n_hits mention-hits and n_nonhits non-hits, uniformly sampled on the
// seeded stream. Returns the number of rows written.
std::size_t export_audit_sample(const std::vector<VoteRecord>& records, const Candidate& candidate,
                                const std::filesystem::path& out_csv, std::uint64_t seed,
                                int n_hits_per_model = 25, int n_nonhits_per_model = 25,
                                std::vector<std::string>* warnings = nullptr);

}  // namespace psephos
