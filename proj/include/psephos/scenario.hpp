#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psephos/common.hpp"

namespace psephos {

struct Candidate {
    std::string name;
    std::string party;
    Orientation orientation = Orientation::moderate;
    bool incumbent = false;
    bool third_party = false;
    std::vector<std::string> pledges;
    // Alternate surface forms used for mention matching; always includes the
    // name itself.
    std::vector<std::string> aliases;
    // Optional disambiguator when two candidates in one election share the
    // same (orientation, incumbent, third_party) triple.
    std::string feature_tag;

    bool operator==(const Candidate&) const = default;
};

enum class ElectionType { presidential, general, local };
std::string_view to_token(ElectionType t);
ElectionType parse_election_type(std::string_view tok);

enum class PromptVariant { full, vanilla };
std::string_view to_token(PromptVariant v);
PromptVariant parse_prompt_variant(std::string_view tok);

struct ElectionScenario {
    std::string election_id;
    ElectionType election_type = ElectionType::presidential;
    // Order is meaningful: it is the prompt presentation order.
    std::vector<Candidate> candidates;
    std::string context;
    std::map<Sido, std::vector<std::string>> per_sido_slates;  // names, local races
    std::map<Sido, std::string> per_sido_context;
    PromptVariant prompt_variant = PromptVariant::full;

    const Candidate& candidate(const std::string& name) const;
    const Candidate* find(const std::string& name) const;

    void validate() const;

    static ElectionScenario load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool operator==(const ElectionScenario&) const = default;
};

// Ballot an agent in the given sido sees: the sido slate for local races,
// the national candidate list otherwise.
std::vector<const Candidate*> slate_for(const ElectionScenario& scenario, Sido sido);

struct ReframeSpec {
    std::string promote;  // candidate moved to the front of the list
    std::map<std::string, std::vector<std::string>> pledge_expansion;
    std::optional<std::string> context_override;
};

// Pure transformation: reorders, swaps pledges, rewrites context. The
// candidate set itself is unchanged.
ElectionScenario reframe_scenario(ElectionScenario scenario, const ReframeSpec& spec);

}  // namespace psephos
