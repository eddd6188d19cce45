#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psephos/common.hpp"
#include "psephos/corpus.hpp"

namespace psephos {

enum class Stage : std::uint8_t { meta, tabular, full };
std::string_view to_token(Stage s);
Stage parse_stage(std::string_view tok);

// One synthetic voter. Fields past the core demographics are only meaningful
// at or above the stage that fills them in; the serializer omits them below.
struct AgentRecord {
    std::int64_t agent_id = 0;
    Stage stage = Stage::meta;

    AgeBracket age_bracket = AgeBracket::a18_19;
    int age = 18;
    Sex sex = Sex::male;
    Sido sido = Sido::seoul;
    Education education = Education::middle_or_less;
    Marital marital = Marital::never_married;

    // stage >= tabular
    std::string occupation;
    IncomeLevel income_level = IncomeLevel::mid;
    std::string housing;
    std::string religion;
    std::string media_source;
    IdentityStrength regional_identity_strength = IdentityStrength::mid;

    // stage == full
    Orientation orientation = Orientation::moderate;
    OrientationDetail orientation_detail = OrientationDetail::moderate;
    std::array<double, 5> beliefs{};

    void validate() const;
    bool operator==(const AgentRecord&) const = default;
};

inline constexpr std::array<const char*, 5> kBeliefDimensions = {
    "govt_responsibility", "economic_view", "social_view", "national_pride", "reunification",
};
int belief_dimension_index(std::string_view name);

// ---------------------------------------------------------------------------
// Synthesis operations.

// Proportional allocation kernel: half-up rounding of each exact quota
// n*w_i/sum(w), then a largest-remainder correction so the counts sum to
// exactly n. When over-allocated, the entry whose fractional remainder least
// justified rounding up loses first; when under-allocated, the largest
// remainder below one half gains first. Ties break in index order.
std::vector<int> allocate_proportional(int n, const std::vector<double>& weights);

std::array<int, kSidoCount> allocate_by_sido(int n_agents, const CensusTable& table);

std::vector<AgentRecord> sample_population(int n_agents, const CensusTable& table,
                                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Augmentation tables: conditional categorical distributions keyed on a
// declared subset of the five core dimensions. Rows whose key columns are all
// "*" form the marginal fallback for unseen keys.

struct AugmentationTable {
    std::string attribute;               // one of kAugmentedAttributes
    std::vector<std::string> key_dims;   // subset of kCoreDimensionNames
    std::map<std::string, std::vector<std::pair<std::string, double>>> rows;
    std::vector<std::pair<std::string, double>> marginal;

    std::string key_for(const AgentRecord& a) const;
    void validate() const;

    static AugmentationTable load(const std::filesystem::path& path, const std::string& attribute);
    void save(const std::filesystem::path& path) const;
};

inline constexpr std::array<const char*, 6> kAugmentedAttributes = {
    "occupation", "income_level", "housing", "religion",
    "media_source", "regional_identity_strength",
};

struct AugmentationSet {
    std::vector<AugmentationTable> tables;  // one per augmented attribute

    const AugmentationTable& table_for(const std::string& attribute) const;
    void validate() const;

    // Loads aug_<attribute>.csv for all six attributes from a directory.
    static AugmentationSet load_dir(const std::filesystem::path& dir);
};

std::vector<AgentRecord> augment_population(std::vector<AgentRecord> agents,
                                            const AugmentationSet& tables, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Marginal fidelity report.

struct MarginalReport {
    struct Dimension {
        std::string name;
        double max_abs_dev_pp = 0.0;
        std::string worst_level;
    };
    std::array<Dimension, 5> dimensions;
    double threshold_pp = 1.5;
    bool pass = false;

    std::string to_json_string() const;
};

MarginalReport validate_marginals(const std::vector<AgentRecord>& agents, const CensusTable& table,
                                  double threshold_pp = 1.5);

// ---------------------------------------------------------------------------
// Agents JSONL artifact.

void write_agents(const std::filesystem::path& path, const std::vector<AgentRecord>& agents);
std::vector<AgentRecord> read_agents(const std::filesystem::path& path);

}  // namespace psephos
