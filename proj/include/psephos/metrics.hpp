#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psephos/common.hpp"
#include "psephos/corpus.hpp"
#include "psephos/decision.hpp"
#include "psephos/population.hpp"
#include "psephos/scenario.hpp"

namespace psephos {

struct ShareEntry {
    std::string name;
    double share = 0.0;  // percent of non-abstaining votes
    std::int64_t votes = 0;
    std::optional<std::pair<double, double>> ci;  // (lo, hi) percent
};

struct ShareTable {
    std::vector<ShareEntry> entries;  // presentation order
    std::int64_t n_voting = 0;
    std::int64_t n_abstain = 0;
    std::string scope = "national";

    double share_of(const std::string& name) const;
    const ShareEntry* find(const std::string& name) const;
    double abstain_rate_pct() const;
    void validate() const;

    std::string to_json_string() const;
};

// Candidate order for a share table. When empty, candidates appear in order
// of first appearance in the records; zero-vote candidates can only be listed
// by passing the slate order explicitly.
std::vector<std::string> candidate_order(const ElectionScenario& scenario);
std::vector<std::string> party_order(const ElectionScenario& scenario);

ShareTable national_shares(const std::vector<VoteRecord>& records,
                           const std::vector<std::string>& order = {});

// Vote shares aggregated by the voted candidate's party; used for parallel
// (local) races evaluated at party level.
ShareTable party_shares(const std::vector<VoteRecord>& records, const ElectionScenario& scenario);

std::map<Sido, ShareTable> sido_share_tables(const std::vector<VoteRecord>& records,
                                             const std::vector<AgentRecord>& agents,
                                             const std::vector<std::string>& order = {});

std::map<Sido, ShareTable> sido_party_share_tables(const std::vector<VoteRecord>& records,
                                                   const std::vector<AgentRecord>& agents,
                                                   const ElectionScenario& scenario);

// Percentile bootstrap over agent resamples. Intervals are widened to include
// the point estimate when a finite resample set falls short of it.
ShareTable bootstrap_ci(const std::vector<VoteRecord>& records, int n_resamples, double level_pct,
                        std::uint64_t seed, const std::vector<std::string>& order = {});

// ---------------------------------------------------------------------------
// Evaluation against a certified result.

struct EvalReport {
    double mae_pp = 0.0;
    bool winner_correct = false;
    std::string predicted_winner;
    std::string actual_winner;
    double wasserstein_sim = 1.0;
    double abstain_rate_pct = 0.0;

    struct SidoDetail {
        Sido sido;
        std::string predicted;
        std::string actual;
        bool hit = false;
        bool tie_flagged = false;
    };
    std::optional<double> sido_hit_rate;
    std::vector<SidoDetail> sido_detail;
    std::vector<std::string> warnings;

    std::string to_json_string() const;
};

EvalReport evaluate(const ShareTable& predicted, const ActualResult& actual,
                    const std::map<Sido, ShareTable>& predicted_per_sido = {});

// W1 on the presentation order with unit spacing between adjacent candidates,
// converted to similarity: 1 - W1 / ((K - 1) * 100). Shares are percents.
double wasserstein_similarity(const std::vector<double>& pred, const std::vector<double>& act);

// CSV of (candidate, sim, actual, ci_lo, ci_hi) for external charting.
void write_plot_data(const std::filesystem::path& path, const ShareTable& predicted,
                     const ActualResult& actual);

// ---------------------------------------------------------------------------
// Turnout reweighting: each agent's contribution scaled by its age bracket's
// turnout rate, abstentions still excluded.

ShareTable turnout_reweight(const std::vector<VoteRecord>& records,
                            const std::vector<AgentRecord>& agents, const TurnoutTable& turnout,
                            const std::vector<std::string>& order = {});

// ---------------------------------------------------------------------------
// Subgroup cell validation against an external cell benchmark.

enum class SubgroupAxes { age_sex, age };

struct SubgroupCellShare {
    AgeBracket age_bracket;
    std::optional<Sex> sex;  // absent for age-only cells
    std::string candidate;
    double share = 0.0;
};

std::vector<SubgroupCellShare> load_subgroup_cells(const std::filesystem::path& path);

struct SubgroupReport {
    double cell_mae = 0.0;
    double pearson_r = 0.0;
    int n_pairs = 0;

    std::string to_json_string() const;
};

SubgroupReport subgroup_cells(const std::vector<VoteRecord>& records,
                              const std::vector<AgentRecord>& agents, SubgroupAxes axes,
                              const std::vector<SubgroupCellShare>& actual_cells);

}  // namespace psephos
