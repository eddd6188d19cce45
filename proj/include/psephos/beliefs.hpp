#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "psephos/common.hpp"
#include "psephos/corpus.hpp"
#include "psephos/population.hpp"

namespace psephos {

// Gaussian belief priors per orientation and belief dimension.
struct BeliefPrior {
    double mu = 0.5;
    double sigma = 0.15;
};

struct BeliefPriors {
    // [orientation][dimension]
    std::array<std::array<BeliefPrior, 5>, kOrientationCount> prior{};

    const BeliefPrior& at(Orientation o, int dim) const {
        return prior[static_cast<int>(o)][dim];
    }
    void validate() const;

    // Long-run survey estimates used when no priors file is supplied.
    static BeliefPriors defaults();
    static BeliefPriors load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Which fallback level produced an orientation probability triple.
enum class ProbabilitySource : std::uint8_t { cell, region, national };
std::string_view to_token(ProbabilitySource s);

struct OrientationProbabilities {
    std::array<double, kOrientationCount> p{};
    ProbabilitySource source = ProbabilitySource::national;
};

inline constexpr int kDefaultMinCellSize = 5;

// Conditional orientation probabilities for one agent's demographics.
// Uses the (age, sex, region, education) cell when its total count reaches
// min_cell, else the region marginal, else the national prior.
OrientationProbabilities orientation_probabilities(AgeBracket age_bracket, Sex sex, Sido sido,
                                                   Education education,
                                                   const ConditionalCountTable& table,
                                                   const RegionMap& regions,
                                                   int min_cell = kDefaultMinCellSize);

// Probability that a non-moderate orientation refines to its "very" detail.
inline constexpr double kVeryDetailProbability = 0.3;

std::vector<AgentRecord> assign_orientations(std::vector<AgentRecord> agents,
                                             const ConditionalCountTable& table,
                                             const RegionMap& regions, std::uint64_t seed,
                                             int min_cell = kDefaultMinCellSize);

// Draws the five belief dimensions from the agent's orientation prior,
// clipping each draw into [0, 1] by projection.
std::vector<AgentRecord> sample_beliefs(std::vector<AgentRecord> agents, const BeliefPriors& priors,
                                        std::uint64_t seed);

}  // namespace psephos
