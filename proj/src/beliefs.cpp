#include "psephos/beliefs.hpp"

#include <algorithm>
#include <cmath>

#include "psephos/csv.hpp"
#include "psephos/rng.hpp"

namespace psephos {

namespace {

enum StreamTag : std::uint64_t {
    kTagOrientation = 32,
    kTagDetail = 33,
    kTagBeliefBase = 40,  // +dimension
};

}  // namespace

void BeliefPriors::validate() const {
    for (const auto& row : prior) {
        for (const auto& p : row) {
            if (p.mu < 0.0 || p.mu > 1.0)
                throw ValidationError("belief prior mu outside [0,1]: " + std::to_string(p.mu));
            if (p.sigma <= 0.0)
                throw ValidationError("belief prior sigma must be positive");
        }
    }
}

BeliefPriors BeliefPriors::defaults() {
    BeliefPriors b;
    auto set = [&](Orientation o, int dim, double mu, double sigma) {
        b.prior[static_cast<int>(o)][dim] = {mu, sigma};
    };
    using O = Orientation;
    // dim 0: govt_responsibility
    set(O::progressive, 0, 0.75, 0.12);
    set(O::moderate, 0, 0.50, 0.15);
    set(O::conservative, 0, 0.30, 0.12);
    // dim 1: economic_view
    set(O::progressive, 1, 0.72, 0.13);
    set(O::moderate, 1, 0.50, 0.15);
    set(O::conservative, 1, 0.28, 0.13);
    // dim 2: social_view
    set(O::progressive, 2, 0.78, 0.10);
    set(O::moderate, 2, 0.50, 0.15);
    set(O::conservative, 2, 0.25, 0.10);
    // dim 3: national_pride
    set(O::progressive, 3, 0.45, 0.15);
    set(O::moderate, 3, 0.55, 0.15);
    set(O::conservative, 3, 0.70, 0.12);
    // dim 4: reunification
    set(O::progressive, 4, 0.65, 0.15);
    set(O::moderate, 4, 0.50, 0.15);
    set(O::conservative, 4, 0.35, 0.15);
    return b;
}

BeliefPriors BeliefPriors::load(const std::filesystem::path& path) {
    const CsvTable csv = read_csv(path);
    const auto co = csv.col("orientation");
    const auto cd = csv.col("dimension");
    const auto cm = csv.col("mu");
    const auto cs = csv.col("sigma");

    BeliefPriors b;
    std::array<std::array<bool, 5>, kOrientationCount> seen{};
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        Orientation o;
        int dim;
        try {
            o = parse_orientation(row[co]);
            dim = belief_dimension_index(row[cd]);
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": row " + std::to_string(r + 2) + ": " + e.what());
        }
        if (seen[static_cast<int>(o)][dim])
            throw ValidationError(path.string() + ": duplicate prior row at line " +
                                  std::to_string(r + 2));
        seen[static_cast<int>(o)][dim] = true;
        b.prior[static_cast<int>(o)][dim] = {std::stod(row[cm]), std::stod(row[cs])};
    }
    for (int o = 0; o < kOrientationCount; ++o) {
        for (int d = 0; d < 5; ++d) {
            if (!seen[o][d])
                throw ValidationError(path.string() + ": missing prior for " +
                                      std::string(to_token(static_cast<Orientation>(o))) + "/" +
                                      kBeliefDimensions[d]);
        }
    }
    b.validate();
    return b;
}

void BeliefPriors::save(const std::filesystem::path& path) const {
    CsvTable csv;
    csv.header = {"orientation", "dimension", "mu", "sigma"};
    for (int o = 0; o < kOrientationCount; ++o) {
        for (int d = 0; d < 5; ++d) {
            const auto& p = prior[o][d];
            csv.rows.push_back({std::string(to_token(static_cast<Orientation>(o))),
                                kBeliefDimensions[d], format_double(p.mu, 4),
                                format_double(p.sigma, 4)});
        }
    }
    write_csv(path, csv);
}

std::string_view to_token(ProbabilitySource s) {
    switch (s) {
        case ProbabilitySource::cell: return "cell";
        case ProbabilitySource::region: return "region";
        case ProbabilitySource::national: return "national";
    }
    throw ValidationError("bad probability source");
}

OrientationProbabilities orientation_probabilities(AgeBracket age_bracket, Sex sex, Sido sido,
                                                   Education education,
                                                   const ConditionalCountTable& table,
                                                   const RegionMap& regions, int min_cell) {
    const Region region = regions.region_of(sido);

    auto normalize = [](const ConditionalCountTable::Counts& counts)
        -> std::optional<std::array<double, kOrientationCount>> {
        const double total = static_cast<double>(counts[0] + counts[1] + counts[2]);
        if (total <= 0.0) return std::nullopt;
        return std::array<double, kOrientationCount>{counts[0] / total, counts[1] / total,
                                                     counts[2] / total};
    };

    if (const auto counts = table.cell({age_bracket, sex, region, education})) {
        const std::int64_t total = (*counts)[0] + (*counts)[1] + (*counts)[2];
        if (total >= min_cell) {
            if (auto p = normalize(*counts)) return {*p, ProbabilitySource::cell};
        }
    }
    if (auto p = normalize(table.region_marginals[static_cast<int>(region)]))
        return {*p, ProbabilitySource::region};
    if (auto p = normalize(table.national_prior)) return {*p, ProbabilitySource::national};
    throw ValidationError("conditional table has no usable national prior");
}

std::vector<AgentRecord> assign_orientations(std::vector<AgentRecord> agents,
                                             const ConditionalCountTable& table,
                                             const RegionMap& regions, std::uint64_t seed,
                                             int min_cell) {
    table.validate();
    for (auto& a : agents) {
        if (a.stage != Stage::tabular)
            throw ValidationError("assign_orientations expects stage tabular agents");
        const auto probe =
            orientation_probabilities(a.age_bracket, a.sex, a.sido, a.education, table, regions, min_cell);

        Rng rng = Rng::stream(seed, {kTagOrientation, static_cast<std::uint64_t>(a.agent_id)});
        const double u = rng.uniform();
        int pick = kOrientationCount - 1;
        double acc = 0.0;
        for (int o = 0; o < kOrientationCount; ++o) {
            acc += probe.p[o];
            if (u < acc) {
                pick = o;
                break;
            }
        }
        a.orientation = static_cast<Orientation>(pick);

        if (a.orientation == Orientation::moderate) {
            a.orientation_detail = OrientationDetail::moderate;
        } else {
            Rng detail_rng = Rng::stream(seed, {kTagDetail, static_cast<std::uint64_t>(a.agent_id)});
            const bool very = detail_rng.uniform() < kVeryDetailProbability;
            if (a.orientation == Orientation::conservative) {
                a.orientation_detail =
                    very ? OrientationDetail::very_conservative : OrientationDetail::conservative;
            } else {
                a.orientation_detail =
                    very ? OrientationDetail::very_progressive : OrientationDetail::progressive;
            }
        }
        a.stage = Stage::full;
        a.beliefs = {};
    }
    return agents;
}

std::vector<AgentRecord> sample_beliefs(std::vector<AgentRecord> agents, const BeliefPriors& priors,
                                        std::uint64_t seed) {
    priors.validate();
    for (auto& a : agents) {
        if (a.stage != Stage::full)
            throw ValidationError("sample_beliefs expects agents with assigned orientations");
        for (int d = 0; d < 5; ++d) {
            const BeliefPrior& p = priors.at(a.orientation, d);
            Rng rng = Rng::stream(
                seed, {kTagBeliefBase + static_cast<std::uint64_t>(d),
                       static_cast<std::uint64_t>(a.agent_id)});
            a.beliefs[d] = std::clamp(rng.normal(p.mu, p.sigma), 0.0, 1.0);
        }
    }
    return agents;
}

}  // namespace psephos
