#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psephos/common.hpp"

namespace psephos {

// ---------------------------------------------------------------------------
// Census joint distribution over the five core demographic dimensions.

struct CensusCell {
    AgeBracket age_bracket;
    Sex sex;
    Sido sido;
    Education education;
    Marital marital;
    double weight = 0.0;  // weighted population count, >= 0

    std::uint32_t key() const;
    bool operator==(const CensusCell&) const = default;
};

struct CensusTable {
    std::vector<CensusCell> cells;

    double total_weight() const;
    std::array<double, kSidoCount> sido_weights() const;  // absolute, not normalized
    std::size_t nonempty_cell_count() const;

    // Marginal distribution (fractions summing to 1) over one dimension.
    std::vector<double> marginal(int dimension) const;  // 0=age 1=sex 2=sido 3=edu 4=marital

    void validate() const;

    static CensusTable load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool operator==(const CensusTable&) const = default;
};

inline constexpr std::array<const char*, 5> kCoreDimensionNames = {
    "age_bracket", "sex", "sido", "education", "marital",
};

// ---------------------------------------------------------------------------
// Sido -> coarse region mapping. Ships with a documented default but is a
// data file so deployments can override it.

struct RegionMap {
    std::array<Region, kSidoCount> by_sido;

    Region region_of(Sido s) const { return by_sido[static_cast<int>(s)]; }
    void validate() const;  // total and surjective onto the 7 regions

    static RegionMap defaults();
    static RegionMap load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool operator==(const RegionMap&) const = default;
};

// ---------------------------------------------------------------------------
// Survey conditional orientation counts keyed on (age, sex, region, education),
// with region marginals and a national prior as fallback levels.

struct ConditionalCountTable {
    using Counts = std::array<std::int64_t, kOrientationCount>;

    struct CellKey {
        AgeBracket age_bracket;
        Sex sex;
        Region region;
        Education education;

        std::uint32_t packed() const;
        auto operator<=>(const CellKey&) const = default;
    };

    std::map<std::uint32_t, Counts> cells;
    std::array<Counts, kRegionCount> region_marginals{};  // explicit or derived from cells
    Counts national_prior{};

    std::optional<Counts> cell(const CellKey& k) const;
    void validate() const;

    static ConditionalCountTable load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool operator==(const ConditionalCountTable&) const = default;
};

// ---------------------------------------------------------------------------
// Age-bracket turnout rates.

struct TurnoutTable {
    std::array<double, kAgeBracketCount> rate{};  // each in [0, 1]

    void validate() const;
    static TurnoutTable load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool operator==(const TurnoutTable&) const = default;
};

// ---------------------------------------------------------------------------
// Certified election outcome used for evaluation and adapter training.

struct ActualCandidate {
    std::string name;
    std::string party;
    Orientation orientation = Orientation::moderate;
    bool incumbent = false;
    bool third_party = false;
    std::string feature_tag;  // disambiguates identical feature triples

    bool operator==(const ActualCandidate&) const = default;
};

struct ActualResult {
    std::string election_id;
    std::vector<ActualCandidate> candidates;
    // Ordered (name, share-in-percent) pairs; order is presentation order.
    std::vector<std::pair<std::string, double>> national;
    // Share mass of unlisted minor candidates, recorded explicitly so the
    // national block plus residual accounts for ~100%.
    double minor_residual = 0.0;
    std::map<Sido, std::vector<std::pair<std::string, double>>> per_sido;
    std::string winner;

    double national_share(const std::string& name) const;
    void validate() const;

    static ActualResult load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool operator==(const ActualResult&) const = default;
};

}  // namespace psephos
