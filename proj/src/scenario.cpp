#include "psephos/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

namespace psephos {

using nlohmann::json;

std::string_view to_token(ElectionType t) {
    switch (t) {
        case ElectionType::presidential: return "presidential";
        case ElectionType::general: return "general";
        case ElectionType::local: return "local";
    }
    throw ValidationError("bad election type");
}

ElectionType parse_election_type(std::string_view tok) {
    if (tok == "presidential") return ElectionType::presidential;
    if (tok == "general") return ElectionType::general;
    if (tok == "local") return ElectionType::local;
    throw ParseError("unknown election type: '" + std::string(tok) + "'");
}

std::string_view to_token(PromptVariant v) {
    return v == PromptVariant::full ? "full" : "vanilla";
}

PromptVariant parse_prompt_variant(std::string_view tok) {
    if (tok == "full") return PromptVariant::full;
    if (tok == "vanilla") return PromptVariant::vanilla;
    throw ParseError("unknown prompt variant: '" + std::string(tok) + "'");
}

const Candidate* ElectionScenario::find(const std::string& name) const {
    for (const auto& c : candidates)
        if (c.name == name) return &c;
    return nullptr;
}

const Candidate& ElectionScenario::candidate(const std::string& name) const {
    const Candidate* c = find(name);
    if (!c) throw ValidationError("scenario " + election_id + " has no candidate '" + name + "'");
    return *c;
}

void ElectionScenario::validate() const {
    if (election_id.empty()) throw ValidationError("scenario missing election_id");
    std::set<std::string> names;
    for (const auto& c : candidates) {
        if (c.name.empty()) throw ValidationError("scenario has a candidate with an empty name");
        if (!names.insert(c.name).second)
            throw ValidationError("duplicate candidate name in scenario: " + c.name);
        if (std::find(c.aliases.begin(), c.aliases.end(), c.name) == c.aliases.end())
            throw ValidationError("candidate " + c.name + " aliases must include the name itself");
    }
    if (election_type == ElectionType::local) {
        for (int s = 0; s < kSidoCount; ++s) {
            const auto sido = static_cast<Sido>(s);
            const auto it = per_sido_slates.find(sido);
            if (it == per_sido_slates.end())
                throw ValidationError("local scenario missing slate for sido " +
                                      std::string(to_token(sido)));
            if (it->second.size() < 2)
                throw ValidationError("slate for sido " + std::string(to_token(sido)) +
                                      " needs at least 2 candidates");
            std::set<std::string> slate_names;
            for (const auto& n : it->second) {
                if (!find(n))
                    throw ValidationError("slate for " + std::string(to_token(sido)) +
                                          " references unknown candidate '" + n + "'");
                if (!slate_names.insert(n).second)
                    throw ValidationError("slate for " + std::string(to_token(sido)) +
                                          " lists candidate '" + n + "' twice");
            }
        }
    } else {
        if (candidates.size() < 2)
            throw ValidationError("scenario needs at least 2 candidates, has " +
                                  std::to_string(candidates.size()));
    }
    for (const auto& [sido, names_in_slate] : per_sido_slates) {
        for (const auto& n : names_in_slate) {
            if (!find(n))
                throw ValidationError("slate for " + std::string(to_token(sido)) +
                                      " references unknown candidate '" + n + "'");
        }
    }
}

ElectionScenario ElectionScenario::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scenario file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (j.value("schema_version", 0) != 1)
        throw ValidationError(path.string() + ": unsupported scenario schema version, migration required");

    ElectionScenario s;
    s.election_id = j.at("election_id").get<std::string>();
    s.election_type = parse_election_type(j.at("election_type").get<std::string>());
    for (const auto& jc : j.at("candidates")) {
        Candidate c;
        c.name = jc.at("name").get<std::string>();
        c.party = jc.value("party", "");
        c.orientation = parse_orientation(jc.at("orientation").get<std::string>());
        c.incumbent = jc.value("incumbent", false);
        c.third_party = jc.value("third_party", false);
        for (const auto& p : jc.value("pledges", json::array())) c.pledges.push_back(p.get<std::string>());
        for (const auto& a : jc.value("aliases", json::array())) c.aliases.push_back(a.get<std::string>());
        if (std::find(c.aliases.begin(), c.aliases.end(), c.name) == c.aliases.end())
            c.aliases.insert(c.aliases.begin(), c.name);
        c.feature_tag = jc.value("feature_tag", "");
        s.candidates.push_back(std::move(c));
    }
    s.context = j.value("context", "");
    const json slates_json = j.value("per_sido_slates", json::object());
    for (const auto& [sido_tok, slate] : slates_json.items()) {
        auto& names = s.per_sido_slates[parse_sido(sido_tok)];
        for (const auto& n : slate) names.push_back(n.get<std::string>());
    }
    const json context_json = j.value("per_sido_context", json::object());
    for (const auto& [sido_tok, text] : context_json.items()) {
        s.per_sido_context[parse_sido(sido_tok)] = text.get<std::string>();
    }
    s.prompt_variant = parse_prompt_variant(j.value("prompt_variant", "full"));
    s.validate();
    return s;
}

void ElectionScenario::save(const std::filesystem::path& path) const {
    json j;
    j["schema_version"] = 1;
    j["election_id"] = election_id;
    j["election_type"] = std::string(to_token(election_type));
    json cands = json::array();
    for (const auto& c : candidates) {
        json jc = {{"name", c.name},
                   {"party", c.party},
                   {"orientation", std::string(to_token(c.orientation))},
                   {"incumbent", c.incumbent},
                   {"third_party", c.third_party},
                   {"pledges", c.pledges},
                   {"aliases", c.aliases}};
        if (!c.feature_tag.empty()) jc["feature_tag"] = c.feature_tag;
        cands.push_back(jc);
    }
    j["candidates"] = cands;
    j["context"] = context;
    if (!per_sido_slates.empty()) {
        json slates = json::object();
        for (const auto& [sido, names] : per_sido_slates)
            slates[std::string(to_token(sido))] = names;
        j["per_sido_slates"] = slates;
    }
    if (!per_sido_context.empty()) {
        json ctx = json::object();
        for (const auto& [sido, text] : per_sido_context) ctx[std::string(to_token(sido))] = text;
        j["per_sido_context"] = ctx;
    }
    j["prompt_variant"] = std::string(to_token(prompt_variant));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write scenario file: " + path.string());
    out << j.dump(2) << "\n";
}

std::vector<const Candidate*> slate_for(const ElectionScenario& scenario, Sido sido) {
    std::vector<const Candidate*> slate;
    if (scenario.election_type == ElectionType::local) {
        const auto it = scenario.per_sido_slates.find(sido);
        if (it == scenario.per_sido_slates.end())
            throw ValidationError("local scenario has no slate for sido " +
                                  std::string(to_token(sido)));
        for (const auto& name : it->second) slate.push_back(&scenario.candidate(name));
    } else {
        for (const auto& c : scenario.candidates) slate.push_back(&c);
    }
    return slate;
}

ElectionScenario reframe_scenario(ElectionScenario scenario, const ReframeSpec& spec) {
    if (!spec.promote.empty()) {
        const auto it = std::find_if(scenario.candidates.begin(), scenario.candidates.end(),
                                     [&](const Candidate& c) { return c.name == spec.promote; });
        if (it == scenario.candidates.end())
            throw ValidationError("reframe: unknown candidate '" + spec.promote + "'");
        std::rotate(scenario.candidates.begin(), it, it + 1);
    }
    for (const auto& [name, pledges] : spec.pledge_expansion) {
        auto it = std::find_if(scenario.candidates.begin(), scenario.candidates.end(),
                               [&](const Candidate& c) { return c.name == name; });
        if (it == scenario.candidates.end())
            throw ValidationError("reframe: unknown candidate '" + name + "' in pledge expansion");
        it->pledges = pledges;
    }
    if (spec.context_override) scenario.context = *spec.context_override;
    return scenario;
}

}  // namespace psephos
