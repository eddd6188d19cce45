#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "psephos/common.hpp"
#include "psephos/population.hpp"
#include "psephos/scenario.hpp"

namespace psephos {

inline constexpr const char* kAbstainVote = "ABSTAIN";

enum class MatchMethod : std::uint8_t { exact, fuzzy, abstained };
std::string_view to_token(MatchMethod m);
MatchMethod parse_match_method(std::string_view tok);

struct VoteRecord {
    std::int64_t agent_id = 0;
    std::string election_id;
    std::string model_id;
    std::string vote;  // slate candidate name or kAbstainVote
    std::string reasoning;
    double confidence = 0.0;
    std::string raw_response;
    MatchMethod match_method = MatchMethod::abstained;

    bool operator==(const VoteRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Deterministic mock decision policy. The mock is a first-class backend: it
// receives the same prompts a remote model would, asserts their structure,
// and emits schema-conformant JSON from a seeded policy so the whole pipeline
// runs offline with testable statistics.
struct MockPolicy {
    double abstain_rate = 0.005;
    // Probability a conservative/progressive agent votes its highest-listed
    // same-orientation candidate.
    double loyalty = 0.9;
    // Probability a moderate votes the progressive major under the full
    // (mitigated) prompt, and without the mitigation block present.
    double moderate_progressive_rate = 0.5;
    double moderate_progressive_rate_unmitigated = 0.85;
    // Probability mass diverted to the first-listed candidate regardless of
    // orientation; reproduces presentation-order effects when > 0.
    double position_bonus = 0.0;
    // Probability the reasoning text also mentions a considered-but-rejected
    // candidate.
    double mention_considered_rate = 0.35;
    // Probability the vote string carries a "후보" suffix, exercising the
    // fuzzy-match path end to end.
    double fuzzy_suffix_rate = 0.02;
    // Agents that emit unparseable text on every attempt.
    std::set<std::int64_t> force_unparseable;
    // When > 0, the backend fails with a transport error after serving this
    // many requests; simulates an endpoint going down mid-run.
    int fail_after_requests = 0;
};

struct BackendConfig {
    std::string endpoint = "MOCK";  // "MOCK" or an http://host:port[/path] URL
    std::string model_id = "mock-small";
    double temperature = 0.5;
    int max_tokens = 300;
    int max_retries = 2;  // parse/match retries; <= max_retries+1 attempts total
    int request_parallelism = 1;
    std::chrono::milliseconds timeout{30000};
    bool structured_output = false;  // request JSON-mode output when supported
    MockPolicy mock;

    void validate() const;
};

// Transport-level failure talking to a backend.
class BackendError : public IoError {
public:
    explicit BackendError(const std::string& msg) : IoError(msg) {}
};

struct DecisionRequest {
    const AgentRecord* agent = nullptr;
    std::vector<const Candidate*> slate;
    std::string system_prompt;
    std::string user_prompt;
    std::string model_id;
    std::uint64_t seed = 0;
    int attempt = 0;
};

class DecisionBackend {
public:
    virtual ~DecisionBackend() = default;
    // Returns the raw completion text. Throws BackendError on transport
    // failure.
    virtual std::string complete(const DecisionRequest& req) = 0;
};

std::unique_ptr<DecisionBackend> make_backend(const BackendConfig& config);

// ---------------------------------------------------------------------------
// Prompt assembly.

std::string build_system_prompt(const AgentRecord& agent, PromptVariant variant);
std::string build_user_prompt(const AgentRecord& agent, const ElectionScenario& scenario);

// Categorical rendering of a belief score: below 0.3 one pole, above 0.7 the
// opposite pole, neutral in between.
std::string belief_label(int dimension, double score);

// ---------------------------------------------------------------------------
// Response parsing.

struct ParsedVote {
    enum class Status { matched, abstained, unmatched, unparseable };
    Status status = Status::unparseable;
    std::string vote;
    std::string reasoning;
    double confidence = 0.5;
    MatchMethod method = MatchMethod::abstained;
};

// Extracts the first well-formed JSON object from raw text and resolves the
// vote against the slate (exact on names/aliases, then the fuzzy matcher).
ParsedVote parse_vote_response(const std::string& raw, const std::vector<const Candidate*>& slate);

// Fuzzy matcher: whitespace-normalized, honorific/party suffixes and
// parentheticals stripped, then the slate entry with maximal
// longest-common-substring coverage wins if coverage >= 0.6 of the shorter
// string and the winner is unique. Returns the matched candidate name.
std::optional<std::string> fuzzy_match_candidate(const std::string& text,
                                                 const std::vector<const Candidate*>& slate);

// ---------------------------------------------------------------------------
// Simulation driver.

struct SimulationOutcome {
    std::vector<VoteRecord> records;  // agent_id order; prefix only when aborted
    bool aborted = false;
    std::string error;
};

// One record per agent, in agent_id order, deterministic for a fixed seed and
// independent of request_parallelism. Parse/match failures retry up to
// max_retries, then record an abstention.
std::vector<VoteRecord> run_simulation(const std::vector<AgentRecord>& agents,
                                       const ElectionScenario& scenario,
                                       const BackendConfig& config, std::uint64_t seed);

// As run_simulation, but transport failures stop the run instead of throwing;
// completed records up to the failure are returned.
SimulationOutcome run_simulation_partial(const std::vector<AgentRecord>& agents,
                                         const ElectionScenario& scenario,
                                         const BackendConfig& config, std::uint64_t seed);

// File-mediated run with checkpoint/resume: records are persisted on abort
// ("<out>.part") and reused on the next invocation, so an interrupted run
// resumes where it stopped and the final file is byte-identical to an
// uninterrupted one. Returns the number of records computed this call.
std::size_t simulate_to_file(const std::vector<AgentRecord>& agents,
                             const ElectionScenario& scenario, const BackendConfig& config,
                             std::uint64_t seed, const std::filesystem::path& out_path);

void write_votes(const std::filesystem::path& path, const std::vector<VoteRecord>& records);
std::vector<VoteRecord> read_votes(const std::filesystem::path& path);

}  // namespace psephos
