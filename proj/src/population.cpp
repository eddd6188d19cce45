#include "psephos/population.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "psephos/csv.hpp"
#include "psephos/rng.hpp"

namespace psephos {

using nlohmann::json;

namespace {

// Stream tag namespaces so different sampling purposes never share a stream.
enum StreamTag : std::uint64_t {
    kTagCell = 1,
    kTagAge = 2,
    kTagAugmentBase = 16,  // +attribute index
};

}  // namespace

std::string_view to_token(Stage s) {
    switch (s) {
        case Stage::meta: return "meta";
        case Stage::tabular: return "tabular";
        case Stage::full: return "full";
    }
    throw ValidationError("bad stage value");
}

Stage parse_stage(std::string_view tok) {
    if (tok == "meta") return Stage::meta;
    if (tok == "tabular") return Stage::tabular;
    if (tok == "full") return Stage::full;
    throw ParseError("unknown stage token: '" + std::string(tok) + "'");
}

int belief_dimension_index(std::string_view name) {
    for (int i = 0; i < 5; ++i)
        if (kBeliefDimensions[i] == name) return i;
    throw ParseError("unknown belief dimension: '" + std::string(name) + "'");
}

void AgentRecord::validate() const {
    const AgeRange r = age_bracket_range(age_bracket);
    if (age < r.lo || age > r.hi)
        throw ValidationError("agent " + std::to_string(agent_id) + ": age " + std::to_string(age) +
                              " outside bracket " + std::string(to_token(age_bracket)));
    if (stage == Stage::full) {
        for (double b : beliefs) {
            if (b < 0.0 || b > 1.0)
                throw ValidationError("agent " + std::to_string(agent_id) + ": belief outside [0,1]");
        }
        if (orientation_of(orientation_detail) != orientation)
            throw ValidationError("agent " + std::to_string(agent_id) +
                                  ": orientation detail inconsistent with orientation");
    }
}

// --------------------------------------------------------------------------- allocation

std::vector<int> allocate_proportional(int n, const std::vector<double>& weights) {
    if (weights.empty()) throw ValidationError("allocate_proportional: no weights");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (total <= 0.0) throw ValidationError("allocate_proportional: no positive weight");
    const std::size_t k = weights.size();

    std::vector<double> quota(k);
    std::vector<int> counts(k);
    int sum = 0;
    for (std::size_t i = 0; i < k; ++i) {
        quota[i] = n * (weights[i] / total);
        counts[i] = static_cast<int>(std::floor(quota[i] + 0.5));
        sum += counts[i];
    }

    auto remainder = [&](std::size_t i) { return quota[i] - std::floor(quota[i]); };
    while (sum > n) {
        std::size_t pick = k;
        for (std::size_t i = 0; i < k; ++i) {
            if (counts[i] <= quota[i]) continue;  // was not rounded up
            if (pick == k || remainder(i) < remainder(pick)) pick = i;
        }
        if (pick == k) throw ValidationError("allocation correction failed");
        --counts[pick];
        --sum;
    }
    while (sum < n) {
        std::size_t pick = k;
        for (std::size_t i = 0; i < k; ++i) {
            if (counts[i] >= std::ceil(quota[i])) continue;  // already at ceiling
            if (pick == k || remainder(i) > remainder(pick)) pick = i;
        }
        if (pick == k) throw ValidationError("allocation correction failed");
        ++counts[pick];
        ++sum;
    }
    return counts;
}

std::array<int, kSidoCount> allocate_by_sido(int n_agents, const CensusTable& table) {
    if (n_agents < kSidoCount)
        throw ValidationError("need at least " + std::to_string(kSidoCount) + " agents, got " +
                              std::to_string(n_agents));
    const auto weights = table.sido_weights();
    for (int s = 0; s < kSidoCount; ++s) {
        if (weights[s] <= 0.0)
            throw ValidationError("cannot allocate: sido " +
                                  std::string(to_token(static_cast<Sido>(s))) + " has zero weight");
    }
    const auto counts = allocate_proportional(n_agents, {weights.begin(), weights.end()});
    std::array<int, kSidoCount> out{};
    std::copy(counts.begin(), counts.end(), out.begin());
    return out;
}

// --------------------------------------------------------------------------- sampling

std::vector<AgentRecord> sample_population(int n_agents, const CensusTable& table,
                                           std::uint64_t seed) {
    table.validate();
    const auto counts = allocate_by_sido(n_agents, table);

    // Per-sido cumulative cell weights, in table order.
    std::array<std::vector<std::pair<double, const CensusCell*>>, kSidoCount> cdf;
    std::array<double, kSidoCount> totals{};
    for (const auto& c : table.cells) {
        if (c.weight <= 0.0) continue;
        const int s = static_cast<int>(c.sido);
        totals[s] += c.weight;
        cdf[s].emplace_back(totals[s], &c);
    }

    std::vector<AgentRecord> agents;
    agents.reserve(static_cast<std::size_t>(n_agents));
    std::int64_t next_id = 0;
    for (int s = 0; s < kSidoCount; ++s) {
        for (int i = 0; i < counts[s]; ++i) {
            AgentRecord a;
            a.agent_id = next_id++;
            a.stage = Stage::meta;

            Rng cell_rng = Rng::stream(seed, {kTagCell, static_cast<std::uint64_t>(a.agent_id)});
            const double u = cell_rng.uniform() * totals[s];
            auto it = std::upper_bound(cdf[s].begin(), cdf[s].end(), u,
                                       [](double v, const auto& e) { return v < e.first; });
            if (it == cdf[s].end()) it = std::prev(cdf[s].end());
            const CensusCell& cell = *it->second;

            a.age_bracket = cell.age_bracket;
            a.sex = cell.sex;
            a.sido = cell.sido;
            a.education = cell.education;
            a.marital = cell.marital;

            const AgeRange range = age_bracket_range(a.age_bracket);
            Rng age_rng = Rng::stream(seed, {kTagAge, static_cast<std::uint64_t>(a.agent_id)});
            a.age = range.lo + static_cast<int>(age_rng.below(
                                   static_cast<std::uint64_t>(range.hi - range.lo + 1)));
            agents.push_back(std::move(a));
        }
    }
    return agents;
}

// --------------------------------------------------------------------------- augmentation

std::string AugmentationTable::key_for(const AgentRecord& a) const {
    std::string key;
    for (const auto& dim : key_dims) {
        if (!key.empty()) key.push_back('|');
        if (dim == "age_bracket") key += to_token(a.age_bracket);
        else if (dim == "sex") key += to_token(a.sex);
        else if (dim == "sido") key += to_token(a.sido);
        else if (dim == "education") key += to_token(a.education);
        else if (dim == "marital") key += to_token(a.marital);
        else throw ValidationError("augmentation table " + attribute + " keyed on unknown dim " + dim);
    }
    return key;
}

void AugmentationTable::validate() const {
    bool known = false;
    for (const char* a : kAugmentedAttributes) known |= attribute == a;
    if (!known) throw ValidationError("unknown augmented attribute: " + attribute);
    if (key_dims.empty()) throw ValidationError("augmentation table " + attribute + " has no key dims");
    for (const auto& dim : key_dims) {
        bool ok = false;
        for (const char* d : kCoreDimensionNames) ok |= dim == d;
        if (!ok) throw ValidationError("augmentation table " + attribute + ": bad key dim " + dim);
    }
    auto check_dist = [&](const std::vector<std::pair<std::string, double>>& dist,
                          const std::string& where) {
        double total = 0.0;
        for (const auto& [value, w] : dist) {
            if (w < 0.0)
                throw ValidationError("augmentation " + attribute + " " + where + ": negative weight");
            if (attribute == "income_level") parse_income_level(value);
            if (attribute == "regional_identity_strength") parse_identity_strength(value);
            total += w;
        }
        if (total <= 0.0)
            throw ValidationError("augmentation " + attribute + " " + where + ": no positive weight");
    };
    for (const auto& [key, dist] : rows) check_dist(dist, "key '" + key + "'");
    if (marginal.empty())
        throw ValidationError("augmentation table " + attribute + " is missing its marginal row");
    check_dist(marginal, "marginal");
}

AugmentationTable AugmentationTable::load(const std::filesystem::path& path,
                                          const std::string& attribute) {
    const CsvTable csv = read_csv(path);
    const auto cv = csv.col("value");
    const auto cw = csv.col("weight");

    AugmentationTable t;
    t.attribute = attribute;
    for (const auto& h : csv.header) {
        if (h != "value" && h != "weight") t.key_dims.push_back(h);
    }

    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        bool all_wild = true;
        std::string key;
        for (std::size_t d = 0; d < t.key_dims.size(); ++d) {
            const std::string& cell = row[csv.col(t.key_dims[d])];
            if (cell != "*") all_wild = false;
            if (!key.empty()) key.push_back('|');
            key += cell;
        }
        double w;
        try {
            std::size_t pos = 0;
            w = std::stod(row[cw], &pos);
            if (pos != row[cw].size()) throw std::invalid_argument("junk");
        } catch (const std::exception&) {
            throw ParseError(path.string() + ": row " + std::to_string(r + 2) + ": bad weight");
        }
        if (all_wild) {
            t.marginal.emplace_back(row[cv], w);
        } else {
            t.rows[key].emplace_back(row[cv], w);
        }
    }
    t.validate();
    return t;
}

void AugmentationTable::save(const std::filesystem::path& path) const {
    CsvTable csv;
    csv.header = key_dims;
    csv.header.push_back("value");
    csv.header.push_back("weight");
    auto split_key = [&](const std::string& key) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : key) {
            if (c == '|') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        parts.push_back(cur);
        return parts;
    };
    for (const auto& [key, dist] : rows) {
        const auto parts = split_key(key);
        for (const auto& [value, w] : dist) {
            auto row = parts;
            row.push_back(value);
            row.push_back(repr_double(w));
            csv.rows.push_back(std::move(row));
        }
    }
    for (const auto& [value, w] : marginal) {
        std::vector<std::string> row(key_dims.size(), "*");
        row.push_back(value);
        row.push_back(repr_double(w));
        csv.rows.push_back(std::move(row));
    }
    write_csv(path, csv);
}

const AugmentationTable& AugmentationSet::table_for(const std::string& attribute) const {
    for (const auto& t : tables)
        if (t.attribute == attribute) return t;
    throw ValidationError("augmentation set is missing table for " + attribute);
}

void AugmentationSet::validate() const {
    for (const char* attr : kAugmentedAttributes) table_for(attr).validate();
}

AugmentationSet AugmentationSet::load_dir(const std::filesystem::path& dir) {
    AugmentationSet set;
    for (const char* attr : kAugmentedAttributes) {
        const auto path = dir / ("aug_" + std::string(attr) + ".csv");
        if (!std::filesystem::exists(path))
            throw IoError("missing augmentation table: " + path.string());
        set.tables.push_back(AugmentationTable::load(path, attr));
    }
    return set;
}

namespace {

const std::string& sample_categorical(const std::vector<std::pair<std::string, double>>& dist,
                                      Rng& rng) {
    double total = 0.0;
    for (const auto& [v, w] : dist) total += w;
    double u = rng.uniform() * total;
    for (const auto& [v, w] : dist) {
        u -= w;
        if (u < 0.0) return v;
    }
    return dist.back().first;
}

}  // namespace

std::vector<AgentRecord> augment_population(std::vector<AgentRecord> agents,
                                            const AugmentationSet& tables, std::uint64_t seed) {
    tables.validate();
    for (auto& a : agents) {
        if (a.stage != Stage::meta)
            throw ValidationError("augment_population expects stage meta agents");
        for (std::size_t t = 0; t < kAugmentedAttributes.size(); ++t) {
            const std::string attr = kAugmentedAttributes[t];
            const AugmentationTable& table = tables.table_for(attr);
            const auto it = table.rows.find(table.key_for(a));
            const auto& dist = it != table.rows.end() ? it->second : table.marginal;
            Rng rng = Rng::stream(seed, {kTagAugmentBase + t, static_cast<std::uint64_t>(a.agent_id)});
            const std::string& value = sample_categorical(dist, rng);
            if (attr == "occupation") a.occupation = value;
            else if (attr == "income_level") a.income_level = parse_income_level(value);
            else if (attr == "housing") a.housing = value;
            else if (attr == "religion") a.religion = value;
            else if (attr == "media_source") a.media_source = value;
            else a.regional_identity_strength = parse_identity_strength(value);
        }
        a.stage = Stage::tabular;
    }
    return agents;
}

// --------------------------------------------------------------------------- marginal report

MarginalReport validate_marginals(const std::vector<AgentRecord>& agents, const CensusTable& table,
                                  double threshold_pp) {
    if (agents.empty()) throw ValidationError("validate_marginals: empty population");

    MarginalReport report;
    report.threshold_pp = threshold_pp;

    static constexpr std::array<int, 5> kLevels = {kAgeBracketCount, kSexCount, kSidoCount,
                                                   kEducationCount, kMaritalCount};
    const double n = static_cast<double>(agents.size());

    for (int dim = 0; dim < 5; ++dim) {
        std::vector<double> sample(kLevels[dim], 0.0);
        for (const auto& a : agents) {
            int level = 0;
            switch (dim) {
                case 0: level = static_cast<int>(a.age_bracket); break;
                case 1: level = static_cast<int>(a.sex); break;
                case 2: level = static_cast<int>(a.sido); break;
                case 3: level = static_cast<int>(a.education); break;
                case 4: level = static_cast<int>(a.marital); break;
            }
            sample[level] += 1.0;
        }
        const std::vector<double> census = table.marginal(dim);
        double worst = 0.0;
        int worst_level = 0;
        for (int l = 0; l < kLevels[dim]; ++l) {
            const double dev = std::abs(sample[l] / n - census[l]) * 100.0;
            if (dev > worst) {
                worst = dev;
                worst_level = l;
            }
        }
        auto level_token = [&](int l) -> std::string {
            switch (dim) {
                case 0: return std::string(to_token(static_cast<AgeBracket>(l)));
                case 1: return std::string(to_token(static_cast<Sex>(l)));
                case 2: return std::string(to_token(static_cast<Sido>(l)));
                case 3: return std::string(to_token(static_cast<Education>(l)));
                default: return std::string(to_token(static_cast<Marital>(l)));
            }
        };
        report.dimensions[dim] = {kCoreDimensionNames[dim], worst, level_token(worst_level)};
    }
    report.pass = std::all_of(report.dimensions.begin(), report.dimensions.end(),
                              [&](const auto& d) { return d.max_abs_dev_pp <= threshold_pp; });
    return report;
}

std::string MarginalReport::to_json_string() const {
    json j;
    j["schema_version"] = 1;
    j["threshold_pp"] = threshold_pp;
    j["pass"] = pass;
    json dims = json::array();
    for (const auto& d : dimensions) {
        dims.push_back({{"dimension", d.name},
                        {"max_abs_dev_pp", d.max_abs_dev_pp},
                        {"worst_level", d.worst_level}});
    }
    j["dimensions"] = dims;
    return j.dump(2) + "\n";
}

// --------------------------------------------------------------------------- JSONL io

namespace {

json agent_to_json(const AgentRecord& a) {
    json j;
    j["agent_id"] = a.agent_id;
    j["stage"] = std::string(to_token(a.stage));
    j["age_bracket"] = std::string(to_token(a.age_bracket));
    j["age"] = a.age;
    j["sex"] = std::string(to_token(a.sex));
    j["sido"] = std::string(to_token(a.sido));
    j["education"] = std::string(to_token(a.education));
    j["marital"] = std::string(to_token(a.marital));
    if (a.stage >= Stage::tabular) {
        j["occupation"] = a.occupation;
        j["income_level"] = std::string(to_token(a.income_level));
        j["housing"] = a.housing;
        j["religion"] = a.religion;
        j["media_source"] = a.media_source;
        j["regional_identity_strength"] = std::string(to_token(a.regional_identity_strength));
    }
    if (a.stage == Stage::full) {
        j["orientation"] = std::string(to_token(a.orientation));
        j["orientation_detail"] = std::string(to_token(a.orientation_detail));
        json beliefs;
        for (int i = 0; i < 5; ++i) beliefs[kBeliefDimensions[i]] = a.beliefs[i];
        j["beliefs"] = beliefs;
    }
    return j;
}

AgentRecord agent_from_json(const json& j) {
    AgentRecord a;
    a.agent_id = j.at("agent_id").get<std::int64_t>();
    a.stage = parse_stage(j.at("stage").get<std::string>());
    a.age_bracket = parse_age_bracket(j.at("age_bracket").get<std::string>());
    a.age = j.at("age").get<int>();
    a.sex = parse_sex(j.at("sex").get<std::string>());
    a.sido = parse_sido(j.at("sido").get<std::string>());
    a.education = parse_education(j.at("education").get<std::string>());
    a.marital = parse_marital(j.at("marital").get<std::string>());
    if (a.stage >= Stage::tabular) {
        a.occupation = j.at("occupation").get<std::string>();
        a.income_level = parse_income_level(j.at("income_level").get<std::string>());
        a.housing = j.at("housing").get<std::string>();
        a.religion = j.at("religion").get<std::string>();
        a.media_source = j.at("media_source").get<std::string>();
        a.regional_identity_strength =
            parse_identity_strength(j.at("regional_identity_strength").get<std::string>());
    }
    if (a.stage == Stage::full) {
        a.orientation = parse_orientation(j.at("orientation").get<std::string>());
        a.orientation_detail = parse_orientation_detail(j.at("orientation_detail").get<std::string>());
        const json& beliefs = j.at("beliefs");
        for (int i = 0; i < 5; ++i) a.beliefs[i] = beliefs.at(kBeliefDimensions[i]).get<double>();
    }
    a.validate();
    return a;
}

}  // namespace

void write_agents(const std::filesystem::path& path, const std::vector<AgentRecord>& agents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write agents file: " + path.string());
    out << json{{"schema_version", 1}, {"kind", "agents"}}.dump() << "\n";
    for (const auto& a : agents) out << agent_to_json(a).dump() << "\n";
    if (!out) throw IoError("error writing agents file: " + path.string());
}

std::vector<AgentRecord> read_agents(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open agents file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty agents file");
    json header;
    try {
        header = json::parse(line);
    } catch (const std::exception& e) {
        throw ParseError(path.string() + ": bad header line: " + e.what());
    }
    if (header.value("kind", "") != "agents" || header.value("schema_version", 0) != 1)
        throw ValidationError(path.string() + ": unsupported agents schema, migration required");

    std::vector<AgentRecord> agents;
    std::set<std::int64_t> seen_ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            agents.push_back(agent_from_json(json::parse(line)));
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen_ids.insert(agents.back().agent_id).second)
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": duplicate agent_id " + std::to_string(agents.back().agent_id));
    }
    return agents;
}

}  // namespace psephos
