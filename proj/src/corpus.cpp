#include "psephos/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "psephos/csv.hpp"

namespace psephos {

using nlohmann::json;

namespace {

double parse_number(const std::string& s, const std::string& origin, std::size_t row) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ParseError(origin + ": row " + std::to_string(row + 2) + ": bad number '" + s + "'");
    }
}

std::int64_t parse_count(const std::string& s, const std::string& origin, std::size_t row) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ParseError(origin + ": row " + std::to_string(row + 2) + ": bad count '" + s + "'");
    }
}



json ordered_shares_to_json(const std::vector<std::pair<std::string, double>>& shares) {
    json arr = json::array();
    for (const auto& [name, share] : shares) arr.push_back({{"name", name}, {"share", share}});
    return arr;
}

std::vector<std::pair<std::string, double>> ordered_shares_from_json(const json& arr,
                                                                     const std::string& origin) {
    if (!arr.is_array()) throw ParseError(origin + ": expected share array");
    std::vector<std::pair<std::string, double>> out;
    for (const auto& e : arr) out.emplace_back(e.at("name").get<std::string>(), e.at("share").get<double>());
    return out;
}

}  // namespace

// --------------------------------------------------------------------------- census

std::uint32_t CensusCell::key() const {
    std::uint32_t k = static_cast<std::uint32_t>(age_bracket);
    k = k * kSexCount + static_cast<std::uint32_t>(sex);
    k = k * kSidoCount + static_cast<std::uint32_t>(sido);
    k = k * kEducationCount + static_cast<std::uint32_t>(education);
    k = k * kMaritalCount + static_cast<std::uint32_t>(marital);
    return k;
}

double CensusTable::total_weight() const {
    double t = 0.0;
    for (const auto& c : cells) t += c.weight;
    return t;
}

std::array<double, kSidoCount> CensusTable::sido_weights() const {
    std::array<double, kSidoCount> w{};
    for (const auto& c : cells) w[static_cast<int>(c.sido)] += c.weight;
    return w;
}

std::size_t CensusTable::nonempty_cell_count() const {
    std::size_t n = 0;
    for (const auto& c : cells)
        if (c.weight > 0.0) ++n;
    return n;
}

std::vector<double> CensusTable::marginal(int dimension) const {
    static constexpr std::array<int, 5> kLevels = {kAgeBracketCount, kSexCount, kSidoCount,
                                                   kEducationCount, kMaritalCount};
    std::vector<double> m(kLevels.at(dimension), 0.0);
    for (const auto& c : cells) {
        int level = 0;
        switch (dimension) {
            case 0: level = static_cast<int>(c.age_bracket); break;
            case 1: level = static_cast<int>(c.sex); break;
            case 2: level = static_cast<int>(c.sido); break;
            case 3: level = static_cast<int>(c.education); break;
            case 4: level = static_cast<int>(c.marital); break;
        }
        m[level] += c.weight;
    }
    const double total = total_weight();
    if (total > 0.0)
        for (double& v : m) v /= total;
    return m;
}

void CensusTable::validate() const {
    if (cells.empty()) throw ValidationError("census table is empty");
    if (cells.size() > 7616)
        throw ValidationError("census table has " + std::to_string(cells.size()) +
                              " cells, more than the 7616-cell cross-product");
    std::set<std::uint32_t> seen;
    std::array<double, kSidoCount> sido_w{};
    for (const auto& c : cells) {
        if (c.weight < 0.0)
            throw ValidationError("census cell has negative weight " + std::to_string(c.weight));
        if (!seen.insert(c.key()).second)
            throw ValidationError("duplicate census cell key: " + std::string(to_token(c.age_bracket)) +
                                  "/" + std::string(to_token(c.sex)) + "/" +
                                  std::string(to_token(c.sido)) + "/" +
                                  std::string(to_token(c.education)) + "/" +
                                  std::string(to_token(c.marital)));
        sido_w[static_cast<int>(c.sido)] += c.weight;
    }
    for (int s = 0; s < kSidoCount; ++s) {
        if (sido_w[s] <= 0.0)
            throw ValidationError("census table has no positive weight in sido " +
                                  std::string(to_token(static_cast<Sido>(s))));
    }
}

CensusTable CensusTable::load(const std::filesystem::path& path) {
    const CsvTable csv = read_csv(path);
    const auto ca = csv.col("age_bracket");
    const auto cs = csv.col("sex");
    const auto cd = csv.col("sido");
    const auto ce = csv.col("education");
    const auto cm = csv.col("marital");
    const auto cw = csv.col("weight");

    CensusTable t;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        CensusCell cell;
        try {
            cell.age_bracket = parse_age_bracket(row[ca]);
            cell.sex = parse_sex(row[cs]);
            cell.sido = parse_sido(row[cd]);
            cell.education = parse_education(row[ce]);
            cell.marital = parse_marital(row[cm]);
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": row " + std::to_string(r + 2) + ": " + e.what());
        }
        cell.weight = parse_number(row[cw], path.string(), r);
        t.cells.push_back(cell);
    }
    t.validate();
    return t;
}

void CensusTable::save(const std::filesystem::path& path) const {
    CsvTable csv;
    csv.header = {"age_bracket", "sex", "sido", "education", "marital", "weight"};
    for (const auto& c : cells) {
        csv.rows.push_back({std::string(to_token(c.age_bracket)), std::string(to_token(c.sex)),
                            std::string(to_token(c.sido)), std::string(to_token(c.education)),
                            std::string(to_token(c.marital)), repr_double(c.weight)});
    }
    write_csv(path, csv);
}

// --------------------------------------------------------------------------- region map

void RegionMap::validate() const {
    std::array<bool, kRegionCount> hit{};
    for (Region r : by_sido) {
        const int i = static_cast<int>(r);
        if (i < 0 || i >= kRegionCount) throw ValidationError("region map has bad region value");
        hit[i] = true;
    }
    for (int i = 0; i < kRegionCount; ++i) {
        if (!hit[i])
            throw ValidationError("region map is not surjective: no sido maps to " +
                                  std::string(to_token(static_cast<Region>(i))));
    }
}

RegionMap RegionMap::defaults() {
    RegionMap m{};
    auto set = [&](Sido s, Region r) { m.by_sido[static_cast<int>(s)] = r; };
    set(Sido::seoul, Region::capital);
    set(Sido::incheon, Region::capital);
    set(Sido::gyeonggi, Region::capital);
    set(Sido::gangwon, Region::gangwon);
    set(Sido::daejeon, Region::chungcheong);
    set(Sido::sejong, Region::chungcheong);
    set(Sido::chungbuk, Region::chungcheong);
    set(Sido::chungnam, Region::chungcheong);
    set(Sido::gwangju, Region::jeolla);
    set(Sido::jeonbuk, Region::jeolla);
    set(Sido::jeonnam, Region::jeolla);
    set(Sido::daegu, Region::gyeongbuk);
    set(Sido::gyeongbuk, Region::gyeongbuk);
    set(Sido::busan, Region::gyeongnam);
    set(Sido::ulsan, Region::gyeongnam);
    set(Sido::gyeongnam, Region::gyeongnam);
    set(Sido::jeju, Region::jeju);
    m.validate();
    return m;
}

RegionMap RegionMap::load(const std::filesystem::path& path) {
    const CsvTable csv = read_csv(path);
    const auto cs = csv.col("sido");
    const auto cr = csv.col("region");
    RegionMap m{};
    std::array<bool, kSidoCount> assigned{};
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        Sido s;
        Region reg;
        try {
            s = parse_sido(csv.rows[r][cs]);
            reg = parse_region(csv.rows[r][cr]);
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": row " + std::to_string(r + 2) + ": " + e.what());
        }
        if (assigned[static_cast<int>(s)])
            throw ValidationError(path.string() + ": sido mapped twice: " + std::string(to_token(s)));
        assigned[static_cast<int>(s)] = true;
        m.by_sido[static_cast<int>(s)] = reg;
    }
    for (int s = 0; s < kSidoCount; ++s) {
        if (!assigned[s])
            throw ValidationError(path.string() + ": region map is not total, missing sido " +
                                  std::string(to_token(static_cast<Sido>(s))));
    }
    m.validate();
    return m;
}

void RegionMap::save(const std::filesystem::path& path) const {
    CsvTable csv;
    csv.header = {"sido", "region"};
    for (int s = 0; s < kSidoCount; ++s) {
        csv.rows.push_back({std::string(to_token(static_cast<Sido>(s))),
                            std::string(to_token(by_sido[s]))});
    }
    write_csv(path, csv);
}

// --------------------------------------------------------------------------- conditional counts

std::uint32_t ConditionalCountTable::CellKey::packed() const {
    std::uint32_t k = static_cast<std::uint32_t>(age_bracket);
    k = k * kSexCount + static_cast<std::uint32_t>(sex);
    k = k * kRegionCount + static_cast<std::uint32_t>(region);
    k = k * kEducationCount + static_cast<std::uint32_t>(education);
    return k;
}

std::optional<ConditionalCountTable::Counts> ConditionalCountTable::cell(const CellKey& k) const {
    const auto it = cells.find(k.packed());
    if (it == cells.end()) return std::nullopt;
    return it->second;
}

void ConditionalCountTable::validate() const {
    for (const auto& [key, counts] : cells) {
        for (std::int64_t n : counts)
            if (n < 0) throw ValidationError("conditional table has negative cell count");
    }
    std::array<Counts, kRegionCount> sums{};
    for (const auto& [key, counts] : cells) {
        const int region = static_cast<int>(key / kEducationCount) % kRegionCount;
        for (int o = 0; o < kOrientationCount; ++o) sums[region][o] += counts[o];
    }
    for (int r = 0; r < kRegionCount; ++r) {
        for (int o = 0; o < kOrientationCount; ++o) {
            if (region_marginals[r][o] < 0)
                throw ValidationError("conditional table has negative region marginal");
            if (region_marginals[r][o] < sums[r][o])
                throw ValidationError("region marginal below the sum of its cells for region " +
                                      std::string(to_token(static_cast<Region>(r))));
        }
    }
    for (int o = 0; o < kOrientationCount; ++o) {
        if (national_prior[o] <= 0)
            throw ValidationError("national prior must be strictly positive for " +
                                  std::string(to_token(static_cast<Orientation>(o))));
    }
}

ConditionalCountTable ConditionalCountTable::load(const std::filesystem::path& path) {
    const CsvTable csv = read_csv(path);
    const auto ca = csv.col("age_bracket");
    const auto cs = csv.col("sex");
    const auto cr = csv.col("region");
    const auto ce = csv.col("education");
    const auto cc = csv.col("n_conservative");
    const auto cm = csv.col("n_moderate");
    const auto cp = csv.col("n_progressive");

    ConditionalCountTable t;
    std::array<bool, kRegionCount> explicit_marginal{};
    bool national_seen = false;
    std::array<Counts, kRegionCount> sums{};

    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        const Counts counts = {parse_count(row[cc], path.string(), r),
                               parse_count(row[cm], path.string(), r),
                               parse_count(row[cp], path.string(), r)};
        const bool wild_a = row[ca] == "*";
        const bool wild_s = row[cs] == "*";
        const bool wild_r = row[cr] == "*";
        const bool wild_e = row[ce] == "*";
        try {
            if (wild_a && wild_s && wild_r && wild_e) {
                if (national_seen) throw ValidationError(path.string() + ": duplicate national prior row");
                t.national_prior = counts;
                national_seen = true;
            } else if (wild_a && wild_s && wild_e && !wild_r) {
                const Region reg = parse_region(row[cr]);
                if (explicit_marginal[static_cast<int>(reg)])
                    throw ValidationError(path.string() + ": duplicate region marginal for " + row[cr]);
                explicit_marginal[static_cast<int>(reg)] = true;
                t.region_marginals[static_cast<int>(reg)] = counts;
            } else if (!wild_a && !wild_s && !wild_r && !wild_e) {
                const CellKey key{parse_age_bracket(row[ca]), parse_sex(row[cs]),
                                  parse_region(row[cr]), parse_education(row[ce])};
                if (!t.cells.emplace(key.packed(), counts).second)
                    throw ValidationError(path.string() + ": duplicate conditional cell at row " +
                                          std::to_string(r + 2));
                for (int o = 0; o < kOrientationCount; ++o)
                    sums[static_cast<int>(key.region)][o] += counts[o];
            } else {
                throw ParseError(path.string() + ": row " + std::to_string(r + 2) +
                                 ": partial wildcards are not a valid marginal encoding");
            }
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": row " + std::to_string(r + 2) + ": " + e.what());
        }
    }
    if (!national_seen)
        throw ValidationError(path.string() + ": conditional table has no national prior row");
    for (int r = 0; r < kRegionCount; ++r) {
        if (!explicit_marginal[r]) t.region_marginals[r] = sums[r];
    }
    t.validate();
    return t;
}

void ConditionalCountTable::save(const std::filesystem::path& path) const {
    CsvTable csv;
    csv.header = {"age_bracket", "sex", "region", "education",
                  "n_conservative", "n_moderate", "n_progressive"};
    for (const auto& [packed, counts] : cells) {
        std::uint32_t k = packed;
        const auto edu = static_cast<Education>(k % kEducationCount);
        k /= kEducationCount;
        const auto reg = static_cast<Region>(k % kRegionCount);
        k /= kRegionCount;
        const auto sex = static_cast<Sex>(k % kSexCount);
        k /= kSexCount;
        const auto age = static_cast<AgeBracket>(k);
        csv.rows.push_back({std::string(to_token(age)), std::string(to_token(sex)),
                            std::string(to_token(reg)), std::string(to_token(edu)),
                            std::to_string(counts[0]), std::to_string(counts[1]),
                            std::to_string(counts[2])});
    }
    for (int r = 0; r < kRegionCount; ++r) {
        const auto& m = region_marginals[r];
        csv.rows.push_back({"*", "*", std::string(to_token(static_cast<Region>(r))), "*",
                            std::to_string(m[0]), std::to_string(m[1]), std::to_string(m[2])});
    }
    csv.rows.push_back({"*", "*", "*", "*", std::to_string(national_prior[0]),
                        std::to_string(national_prior[1]), std::to_string(national_prior[2])});
    write_csv(path, csv);
}

// --------------------------------------------------------------------------- turnout

void TurnoutTable::validate() const {
    for (int b = 0; b < kAgeBracketCount; ++b) {
        if (rate[b] < 0.0 || rate[b] > 1.0)
            throw ValidationError("turnout rate out of [0,1] for bracket " +
                                  std::string(to_token(static_cast<AgeBracket>(b))));
    }
}

TurnoutTable TurnoutTable::load(const std::filesystem::path& path) {
    const CsvTable csv = read_csv(path);
    const auto cb = csv.col("age_bracket");
    const auto cr = csv.col("rate");
    TurnoutTable t;
    std::array<bool, kAgeBracketCount> seen{};
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        AgeBracket b;
        try {
            b = parse_age_bracket(csv.rows[r][cb]);
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": row " + std::to_string(r + 2) + ": " + e.what());
        }
        if (seen[static_cast<int>(b)])
            throw ValidationError(path.string() + ": duplicate turnout bracket " + csv.rows[r][cb]);
        seen[static_cast<int>(b)] = true;
        t.rate[static_cast<int>(b)] = parse_number(csv.rows[r][cr], path.string(), r);
    }
    for (int b = 0; b < kAgeBracketCount; ++b) {
        if (!seen[b])
            throw ValidationError(path.string() + ": turnout table missing bracket " +
                                  std::string(to_token(static_cast<AgeBracket>(b))));
    }
    t.validate();
    return t;
}

void TurnoutTable::save(const std::filesystem::path& path) const {
    CsvTable csv;
    csv.header = {"age_bracket", "rate"};
    for (int b = 0; b < kAgeBracketCount; ++b) {
        csv.rows.push_back({std::string(to_token(static_cast<AgeBracket>(b))), repr_double(rate[b])});
    }
    write_csv(path, csv);
}

// --------------------------------------------------------------------------- actual result

double ActualResult::national_share(const std::string& name) const {
    for (const auto& [n, s] : national)
        if (n == name) return s;
    throw ValidationError("actual result " + election_id + " has no candidate '" + name + "'");
}

void ActualResult::validate() const {
    if (election_id.empty()) throw ValidationError("actual result missing election_id");
    if (national.empty()) throw ValidationError("actual result has no national shares");
    double sum = minor_residual;
    double best = -1.0;
    std::string best_name;
    std::set<std::string> names;
    for (const auto& [name, share] : national) {
        if (share < 0.0 || share > 100.0)
            throw ValidationError("national share out of [0,100] for " + name);
        if (!names.insert(name).second)
            throw ValidationError("duplicate candidate in national shares: " + name);
        sum += share;
        if (share > best) {
            best = share;
            best_name = name;
        }
    }
    if (std::abs(sum - 100.0) > 0.5)
        throw ValidationError("national shares plus residual sum to " + format_double(sum, 3) +
                              ", expected 100 +/- 0.5");
    if (winner != best_name)
        throw ValidationError("declared winner '" + winner + "' is not the national argmax '" +
                              best_name + "'");
}

ActualResult ActualResult::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open actual result file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (j.value("schema_version", 0) != 1)
        throw ValidationError(path.string() + ": unsupported actual-result schema version, migration required");

    ActualResult a;
    a.election_id = j.at("election_id").get<std::string>();
    for (const auto& c : j.value("candidates", json::array())) {
        ActualCandidate cand;
        cand.name = c.at("name").get<std::string>();
        cand.party = c.value("party", "");
        cand.orientation = parse_orientation(c.at("orientation").get<std::string>());
        cand.incumbent = c.value("incumbent", false);
        cand.third_party = c.value("third_party", false);
        cand.feature_tag = c.value("feature_tag", "");
        a.candidates.push_back(std::move(cand));
    }
    a.national = ordered_shares_from_json(j.at("national"), path.string());
    a.minor_residual = j.value("minor_residual", 0.0);
    const json per_sido_json = j.value("per_sido", json::object());
    for (const auto& [sido_tok, shares] : per_sido_json.items()) {
        a.per_sido[parse_sido(sido_tok)] = ordered_shares_from_json(shares, path.string());
    }
    a.winner = j.at("winner").get<std::string>();
    a.validate();
    return a;
}

void ActualResult::save(const std::filesystem::path& path) const {
    json j;
    j["schema_version"] = 1;
    j["election_id"] = election_id;
    json cands = json::array();
    for (const auto& c : candidates) {
        json jc = {{"name", c.name},
                   {"party", c.party},
                   {"orientation", std::string(to_token(c.orientation))},
                   {"incumbent", c.incumbent},
                   {"third_party", c.third_party}};
        if (!c.feature_tag.empty()) jc["feature_tag"] = c.feature_tag;
        cands.push_back(jc);
    }
    j["candidates"] = cands;
    j["national"] = ordered_shares_to_json(national);
    j["minor_residual"] = minor_residual;
    json sidos = json::object();
    for (const auto& [sido, shares] : per_sido)
        sidos[std::string(to_token(sido))] = ordered_shares_to_json(shares);
    j["per_sido"] = sidos;
    j["winner"] = winner;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write actual result file: " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace psephos
