#include "psephos/diagnostics.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "psephos/csv.hpp"
#include "psephos/rng.hpp"

namespace psephos {

using nlohmann::json;

namespace {

enum StreamTag : std::uint64_t {
    kTagAudit = 512,
};

}  // namespace

bool reasoning_mentions(const std::string& reasoning, const Candidate& candidate) {
    const std::string text = normalize_whitespace(reasoning);
    for (const auto& alias : candidate.aliases) {
        const std::string a = normalize_whitespace(alias);
        if (!a.empty() && text.find(a) != std::string::npos) return true;
    }
    return false;
}

MentionReport mention_report(const std::vector<VoteRecord>& records,
                             const ElectionScenario& scenario) {
    std::vector<std::string> models;
    for (const auto& r : records) {
        if (std::find(models.begin(), models.end(), r.model_id) == models.end())
            models.push_back(r.model_id);
    }
    std::sort(models.begin(), models.end());

    MentionReport report;
    for (const auto& cand : scenario.candidates) {
        for (const auto& model : models) {
            MentionEntry e;
            e.candidate = cand.name;
            e.model_id = model;
            for (const auto& r : records) {
                if (r.model_id != model || r.vote == kAbstainVote) continue;
                ++e.n_nonabstain;
                if (!reasoning_mentions(r.reasoning, cand)) continue;
                ++e.n_mention;
                if (r.vote == cand.name) ++e.n_vote_and_mention;
            }
            if (e.n_nonabstain > 0)
                e.mention_rate_pct =
                    100.0 * static_cast<double>(e.n_mention) / static_cast<double>(e.n_nonabstain);
            if (e.n_mention > 0)
                e.vote_given_mention_pct = 100.0 * static_cast<double>(e.n_vote_and_mention) /
                                           static_cast<double>(e.n_mention);
            report.entries.push_back(std::move(e));
        }
    }
    return report;
}

const MentionEntry* MentionReport::find(const std::string& candidate,
                                        const std::string& model_id) const {
    for (const auto& e : entries) {
        if (e.candidate == candidate && e.model_id == model_id) return &e;
    }
    return nullptr;
}

std::string MentionReport::to_json_string() const {
    json arr = json::array();
    for (const auto& e : entries) {
        json je = {{"candidate", e.candidate},
                   {"model_id", e.model_id},
                   {"n_nonabstain", e.n_nonabstain},
                   {"n_mention", e.n_mention},
                   {"n_vote_and_mention", e.n_vote_and_mention},
                   {"mention_rate_pct", e.mention_rate_pct}};
        if (e.vote_given_mention_pct) je["vote_given_mention_pct"] = *e.vote_given_mention_pct;
        arr.push_back(je);
    }
    json j = {{"schema_version", 1}, {"entries", arr}};
    return j.dump(2) + "\n";
}

std::array<ConsistencyEntry, kOrientationCount> orientation_vote_consistency(
    const std::vector<VoteRecord>& records, const std::vector<AgentRecord>& agents,
    const std::vector<std::string>& lineage_names) {
    std::map<std::int64_t, Orientation> orientation_of_agent;
    for (const auto& a : agents) {
        if (a.stage != Stage::full)
            throw ValidationError("orientation_vote_consistency needs stage full agents");
        orientation_of_agent[a.agent_id] = a.orientation;
    }
    const std::set<std::string> lineage(lineage_names.begin(), lineage_names.end());

    std::array<ConsistencyEntry, kOrientationCount> out{};
    for (const auto& r : records) {
        if (r.vote == kAbstainVote) continue;
        const auto it = orientation_of_agent.find(r.agent_id);
        if (it == orientation_of_agent.end())
            throw ValidationError("vote record references unknown agent " +
                                  std::to_string(r.agent_id));
        auto& e = out[static_cast<int>(it->second)];
        ++e.n_voting;
        if (lineage.count(r.vote)) ++e.n_lineage;
    }
    for (auto& e : out) {
        if (e.n_voting > 0)
            e.lineage_pct = 100.0 * static_cast<double>(e.n_lineage) / static_cast<double>(e.n_voting);
    }
    return out;
}

std::size_t export_audit_sample(const std::vector<VoteRecord>& records, const Candidate& candidate,
                                const std::filesystem::path& out_csv, std::uint64_t seed,
                                int n_hits_per_model, int n_nonhits_per_model,
                                std::vector<std::string>* warnings) {
    std::vector<std::string> models;
    for (const auto& r : records) {
        if (std::find(models.begin(), models.end(), r.model_id) == models.end())
            models.push_back(r.model_id);
    }
    std::sort(models.begin(), models.end());

    CsvTable csv;
    csv.header = {"model_id", "agent_id", "hit_flag", "reasoning", "vote"};

    for (const auto& model : models) {
        std::vector<const VoteRecord*> hits;
        std::vector<const VoteRecord*> nonhits;
        for (const auto& r : records) {
            if (r.model_id != model) continue;
            (reasoning_mentions(r.reasoning, candidate) ? hits : nonhits).push_back(&r);
        }
        auto sample_stratum = [&](std::vector<const VoteRecord*>& stratum, int want,
                                  const char* label, std::uint64_t tag) {
            std::sort(stratum.begin(), stratum.end(),
                      [](const VoteRecord* a, const VoteRecord* b) { return a->agent_id < b->agent_id; });
            if (static_cast<int>(stratum.size()) < want && warnings) {
                warnings->push_back("model " + model + ": only " + std::to_string(stratum.size()) +
                                    " " + label + " records available, wanted " +
                                    std::to_string(want));
            }
            Rng rng = Rng::stream(seed, {kTagAudit, Rng::hash_str(model), tag});
            rng.shuffle(stratum);
            const int take = std::min<int>(want, static_cast<int>(stratum.size()));
            std::vector<const VoteRecord*> chosen(stratum.begin(), stratum.begin() + take);
            std::sort(chosen.begin(), chosen.end(),
                      [](const VoteRecord* a, const VoteRecord* b) { return a->agent_id < b->agent_id; });
            return chosen;
        };
        const auto chosen_hits = sample_stratum(hits, n_hits_per_model, "mention-hit", 1);
        const auto chosen_nonhits = sample_stratum(nonhits, n_nonhits_per_model, "non-hit", 2);
        for (const VoteRecord* r : chosen_hits)
            csv.rows.push_back({model, std::to_string(r->agent_id), "1", r->reasoning, r->vote});
        for (const VoteRecord* r : chosen_nonhits)
            csv.rows.push_back({model, std::to_string(r->agent_id), "0", r->reasoning, r->vote});
    }
    write_csv(out_csv, csv);
    return csv.rows.size();
}

}  // namespace psephos
