#include "psephos/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "psephos/beliefs.hpp"
#include "psephos/corpus.hpp"
#include "psephos/population.hpp"
#include "psephos/rng.hpp"
#include "psephos/scenario.hpp"

namespace psephos {

namespace {

enum StreamTag : std::uint64_t {
    kTagCensusNoise = 2048,
    kTagConditional = 2049,
    kTagAugment = 2050,
};

constexpr std::array<double, kSidoCount> kSidoShare = {
    0.187, 0.066, 0.047, 0.057, 0.028, 0.029, 0.022, 0.007, 0.254,
    0.030, 0.031, 0.041, 0.035, 0.036, 0.052, 0.065, 0.013,
};

constexpr std::array<double, kAgeBracketCount> kAgeShare = {
    0.030, 0.075, 0.080, 0.075, 0.075, 0.085, 0.090,
    0.095, 0.090, 0.085, 0.070, 0.050, 0.040, 0.040,
};

constexpr std::array<double, kSexCount> kSexShare = {0.49, 0.51};

std::array<double, kEducationCount> education_given_age(AgeBracket a) {
    const int i = static_cast<int>(a);
    if (i <= 2) return {0.05, 0.30, 0.55, 0.10};   // under 30
    if (i <= 8) return {0.08, 0.32, 0.47, 0.13};   // 30-59
    return {0.35, 0.40, 0.20, 0.05};               // 60+
}

std::array<double, kMaritalCount> marital_given_age(AgeBracket a) {
    const int i = static_cast<int>(a);
    if (i <= 2) return {0.85, 0.14, 0.008, 0.002};
    if (i <= 8) return {0.25, 0.62, 0.10, 0.03};
    return {0.04, 0.70, 0.10, 0.16};
}

CensusTable build_census(std::uint64_t seed, FixtureScale scale) {
    struct Weighted {
        CensusCell cell;
        double weight;
    };
    std::vector<Weighted> all;
    all.reserve(7616);
    constexpr double kPopulation = 41.6e6;

    for (int a = 0; a < kAgeBracketCount; ++a) {
        for (int s = 0; s < kSexCount; ++s) {
            for (int d = 0; d < kSidoCount; ++d) {
                for (int e = 0; e < kEducationCount; ++e) {
                    for (int m = 0; m < kMaritalCount; ++m) {
                        CensusCell cell{static_cast<AgeBracket>(a), static_cast<Sex>(s),
                                        static_cast<Sido>(d), static_cast<Education>(e),
                                        static_cast<Marital>(m), 0.0};
                        Rng rng = Rng::stream(seed, {kTagCensusNoise, cell.key()});
                        const double noise = std::exp(0.25 * rng.normal(0.0, 1.0));
                        const double w = kPopulation * kSidoShare[d] * kAgeShare[a] * kSexShare[s] *
                                         education_given_age(cell.age_bracket)[e] *
                                         marital_given_age(cell.age_bracket)[m] * noise;
                        cell.weight = std::round(w * 10.0) / 10.0;
                        all.push_back({cell, cell.weight});
                    }
                }
            }
        }
    }

    CensusTable table;
    if (scale == FixtureScale::full) {
        // Keep the heaviest 5,790 cells; everything else becomes empty and is
        // not written.
        std::vector<std::size_t> order(all.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            if (all[x].weight != all[y].weight) return all[x].weight > all[y].weight;
            return all[x].cell.key() < all[y].cell.key();
        });
        order.resize(5790);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return all[x].cell.key() < all[y].cell.key(); });
        for (std::size_t i : order) table.cells.push_back(all[i].cell);
    } else {
        for (const auto& w : all) {
            const auto& c = w.cell;
            const bool keep =
                (c.sex == Sex::male && c.education == Education::high_school &&
                 c.marital == Marital::married) ||
                (c.sex == Sex::female && c.education == Education::university &&
                 c.marital == Marital::never_married) ||
                (c.sex == Sex::female && c.education == Education::middle_or_less &&
                 c.marital == Marital::widowed);
            if (keep) table.cells.push_back(c);
        }
    }
    table.validate();
    return table;
}

ConditionalCountTable build_conditional(std::uint64_t seed, const RegionMap&) {
    ConditionalCountTable table;
    std::array<ConditionalCountTable::Counts, kRegionCount> region_sums{};
    ConditionalCountTable::Counts national{};

    for (int a = 0; a < kAgeBracketCount; ++a) {
        for (int s = 0; s < kSexCount; ++s) {
            for (int r = 0; r < kRegionCount; ++r) {
                for (int e = 0; e < kEducationCount; ++e) {
                    const ConditionalCountTable::CellKey key{
                        static_cast<AgeBracket>(a), static_cast<Sex>(s), static_cast<Region>(r),
                        static_cast<Education>(e)};
                    Rng rng = Rng::stream(seed, {kTagConditional, key.packed()});

                    double cons = 0.34;
                    double prog = 0.33;
                    const double age_shift = (a - 6.5) / 6.5 * 0.12;  // older leans conservative
                    cons += age_shift;
                    prog -= age_shift;
                    if (e >= static_cast<int>(Education::university)) {
                        cons -= 0.05;
                        prog += 0.05;
                    } else if (e == static_cast<int>(Education::middle_or_less)) {
                        cons += 0.05;
                        prog -= 0.05;
                    }
                    const auto region = static_cast<Region>(r);
                    if (region == kFixtureConservativeRegion) {
                        cons += 0.18;
                        prog -= 0.18;
                    } else if (region == kFixtureProgressiveRegion) {
                        cons -= 0.18;
                        prog += 0.18;
                    } else if (region == Region::gyeongnam) {
                        cons += 0.10;
                        prog -= 0.10;
                    } else if (region == Region::capital) {
                        cons -= 0.02;
                        prog += 0.02;
                    }
                    cons += rng.normal(0.0, 0.02);
                    prog += rng.normal(0.0, 0.02);
                    cons = std::clamp(cons, 0.04, 0.90);
                    prog = std::clamp(prog, 0.04, 0.90);
                    double mod = std::max(1.0 - cons - prog, 0.04);
                    const double norm = cons + mod + prog;

                    // A slice of cells is kept under the minimum-cell-size
                    // threshold so the region fallback path gets real traffic.
                    const int total = (key.packed() % 19 == 0)
                                          ? static_cast<int>(rng.below(5))
                                          : 6 + static_cast<int>(rng.below(48));
                    const std::array<double, 3> quota = {total * cons / norm,
                                                         total * (1.0 - (cons + prog) / norm),
                                                         total * prog / norm};
                    ConditionalCountTable::Counts counts{};
                    int assigned = 0;
                    for (int o = 0; o < 3; ++o) {
                        counts[o] = static_cast<std::int64_t>(std::floor(quota[o]));
                        assigned += static_cast<int>(counts[o]);
                    }
                    std::array<int, 3> order = {0, 1, 2};
                    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
                        return quota[x] - std::floor(quota[x]) > quota[y] - std::floor(quota[y]);
                    });
                    for (int i = 0; assigned < total; ++i, ++assigned) counts[order[i % 3]]++;

                    table.cells.emplace(key.packed(), counts);
                    for (int o = 0; o < kOrientationCount; ++o) {
                        region_sums[r][o] += counts[o];
                        national[o] += counts[o];
                    }
                }
            }
        }
    }
    table.region_marginals = region_sums;
    table.national_prior = national;
    table.validate();
    return table;
}

AugmentationTable make_table(const std::string& attribute, std::vector<std::string> key_dims) {
    AugmentationTable t;
    t.attribute = attribute;
    t.key_dims = std::move(key_dims);
    return t;
}

void jitter(std::vector<std::pair<std::string, double>>& dist, Rng& rng) {
    for (auto& [v, w] : dist) w = std::max(0.005, w * std::exp(0.08 * rng.normal(0.0, 1.0)));
}

AugmentationSet build_augmentation(std::uint64_t seed) {
    AugmentationSet set;

    // occupation | (age_bracket, education)
    auto occupation = make_table("occupation", {"age_bracket", "education"});
    occupation.marginal = {{"사무직", 0.28}, {"자영업", 0.15}, {"생산직", 0.14}, {"학생", 0.07},
                           {"주부", 0.12},  {"전문직", 0.08}, {"은퇴", 0.10},   {"무직", 0.06}};
    for (int a = 0; a < kAgeBracketCount; ++a) {
        for (int e = 0; e < kEducationCount; ++e) {
            std::vector<std::pair<std::string, double>> dist;
            const bool tertiary = e >= static_cast<int>(Education::university);
            if (a <= 1) {
                dist = {{"학생", 0.55}, {"사무직", 0.18}, {"생산직", 0.12}, {"무직", 0.15}};
            } else if (a <= 6) {
                if (tertiary)
                    dist = {{"사무직", 0.50}, {"전문직", 0.20}, {"자영업", 0.12},
                            {"생산직", 0.08}, {"주부", 0.06},   {"무직", 0.04}};
                else
                    dist = {{"생산직", 0.32}, {"사무직", 0.22}, {"자영업", 0.22},
                            {"주부", 0.14},   {"무직", 0.10}};
            } else if (a <= 9) {
                dist = {{"자영업", 0.28}, {"사무직", tertiary ? 0.30 : 0.15},
                        {"생산직", 0.20}, {"주부", 0.17}, {"은퇴", 0.10}};
            } else {
                dist = {{"은퇴", 0.55}, {"자영업", 0.12}, {"주부", 0.20},
                        {"생산직", 0.08}, {"사무직", 0.05}};
            }
            Rng rng = Rng::stream(seed, {kTagAugment, 1, static_cast<std::uint64_t>(a * 8 + e)});
            jitter(dist, rng);
            occupation.rows[std::string(to_token(static_cast<AgeBracket>(a))) + "|" +
                            std::string(to_token(static_cast<Education>(e)))] = dist;
        }
    }
    set.tables.push_back(std::move(occupation));

    // income_level | (age_bracket, education)
    auto income = make_table("income_level", {"age_bracket", "education"});
    income.marginal = {{"low", 0.15}, {"mid_low", 0.22}, {"mid", 0.30}, {"mid_high", 0.22}, {"high", 0.11}};
    for (int a = 0; a < kAgeBracketCount; ++a) {
        for (int e = 0; e < kEducationCount; ++e) {
            const double lift = 0.1 * (e - 1.5) + (a >= 4 && a <= 9 ? 0.08 : -0.05);
            std::vector<std::pair<std::string, double>> dist = {
                {"low", std::max(0.03, 0.18 - lift)},
                {"mid_low", std::max(0.05, 0.24 - lift / 2)},
                {"mid", 0.30},
                {"mid_high", std::max(0.05, 0.20 + lift / 2)},
                {"high", std::max(0.02, 0.08 + lift)}};
            Rng rng = Rng::stream(seed, {kTagAugment, 2, static_cast<std::uint64_t>(a * 8 + e)});
            jitter(dist, rng);
            income.rows[std::string(to_token(static_cast<AgeBracket>(a))) + "|" +
                        std::string(to_token(static_cast<Education>(e)))] = dist;
        }
    }
    set.tables.push_back(std::move(income));

    // housing | sido
    auto housing = make_table("housing", {"sido"});
    housing.marginal = {{"아파트", 0.50}, {"단독주택", 0.22}, {"다세대", 0.18}, {"원룸", 0.10}};
    for (int d = 0; d < kSidoCount; ++d) {
        const bool metro = d <= 7 || d == 8;  // metropolitan cities and gyeonggi
        std::vector<std::pair<std::string, double>> dist =
            metro ? std::vector<std::pair<std::string, double>>{{"아파트", 0.58}, {"다세대", 0.22},
                                                                {"원룸", 0.12}, {"단독주택", 0.08}}
                  : std::vector<std::pair<std::string, double>>{{"단독주택", 0.45}, {"아파트", 0.38},
                                                                {"다세대", 0.12}, {"원룸", 0.05}};
        Rng rng = Rng::stream(seed, {kTagAugment, 3, static_cast<std::uint64_t>(d)});
        jitter(dist, rng);
        housing.rows[std::string(to_token(static_cast<Sido>(d)))] = dist;
    }
    set.tables.push_back(std::move(housing));

    // religion | sido
    auto religion = make_table("religion", {"sido"});
    religion.marginal = {{"무교", 0.51}, {"개신교", 0.20}, {"불교", 0.17}, {"천주교", 0.12}};
    for (int d = 0; d < kSidoCount; ++d) {
        const auto sido = static_cast<Sido>(d);
        const bool southeast = sido == Sido::busan || sido == Sido::daegu || sido == Sido::ulsan ||
                               sido == Sido::gyeongbuk || sido == Sido::gyeongnam;
        std::vector<std::pair<std::string, double>> dist =
            southeast ? std::vector<std::pair<std::string, double>>{{"무교", 0.42}, {"불교", 0.32},
                                                                    {"개신교", 0.15}, {"천주교", 0.11}}
                      : std::vector<std::pair<std::string, double>>{{"무교", 0.54}, {"개신교", 0.23},
                                                                    {"불교", 0.11}, {"천주교", 0.12}};
        Rng rng = Rng::stream(seed, {kTagAugment, 4, static_cast<std::uint64_t>(d)});
        jitter(dist, rng);
        religion.rows[std::string(to_token(sido))] = dist;
    }
    set.tables.push_back(std::move(religion));

    // media_source | age_bracket
    auto media = make_table("media_source", {"age_bracket"});
    media.marginal = {{"포털뉴스", 0.34}, {"TV뉴스", 0.30}, {"유튜브", 0.24}, {"SNS", 0.12}};
    for (int a = 0; a < kAgeBracketCount; ++a) {
        std::vector<std::pair<std::string, double>> dist;
        if (a <= 2) dist = {{"SNS", 0.30}, {"유튜브", 0.30}, {"포털뉴스", 0.32}, {"TV뉴스", 0.08}};
        else if (a <= 7) dist = {{"포털뉴스", 0.44}, {"유튜브", 0.26}, {"TV뉴스", 0.20}, {"SNS", 0.10}};
        else dist = {{"TV뉴스", 0.55}, {"유튜브", 0.22}, {"포털뉴스", 0.18}, {"SNS", 0.05}};
        Rng rng = Rng::stream(seed, {kTagAugment, 5, static_cast<std::uint64_t>(a)});
        jitter(dist, rng);
        media.rows[std::string(to_token(static_cast<AgeBracket>(a)))] = dist;
    }
    set.tables.push_back(std::move(media));

    // regional_identity_strength | sido
    auto identity = make_table("regional_identity_strength", {"sido"});
    identity.marginal = {{"low", 0.30}, {"mid", 0.45}, {"high", 0.25}};
    for (int d = 0; d < kSidoCount; ++d) {
        const Region region = RegionMap::defaults().region_of(static_cast<Sido>(d));
        std::vector<std::pair<std::string, double>> dist;
        if (region == Region::jeolla || region == Region::gyeongbuk || region == Region::gyeongnam)
            dist = {{"low", 0.12}, {"mid", 0.38}, {"high", 0.50}};
        else if (region == Region::capital)
            dist = {{"low", 0.45}, {"mid", 0.42}, {"high", 0.13}};
        else
            dist = {{"low", 0.28}, {"mid", 0.47}, {"high", 0.25}};
        Rng rng = Rng::stream(seed, {kTagAugment, 6, static_cast<std::uint64_t>(d)});
        jitter(dist, rng);
        identity.rows[std::string(to_token(static_cast<Sido>(d)))] = dist;
    }
    set.tables.push_back(std::move(identity));

    set.validate();
    return set;
}

TurnoutTable build_turnout() {
    TurnoutTable t;
    t.rate = {0.43, 0.46, 0.48, 0.52, 0.55, 0.58, 0.62, 0.66, 0.70, 0.76, 0.80, 0.81, 0.76, 0.60};
    return t;
}

Candidate make_candidate(std::string name, std::string party, Orientation o, bool incumbent,
                         bool third_party, std::vector<std::string> pledges) {
    Candidate c;
    c.name = name;
    c.party = std::move(party);
    c.orientation = o;
    c.incumbent = incumbent;
    c.third_party = third_party;
    c.pledges = std::move(pledges);
    c.aliases = {name};
    return c;
}

ElectionScenario build_presidential_scenario() {
    ElectionScenario s;
    s.election_id = "fx-2031-pres";
    s.election_type = ElectionType::presidential;
    s.candidates = {
        make_candidate("김정호", "한빛당", Orientation::conservative, false, false,
                       {"수도권 주택 공급 확대", "법인세 부담 완화"}),
        make_candidate("이서연", "새물결당", Orientation::progressive, false, false,
                       {"기초연금 인상", "공공의료 확충"}),
        make_candidate("박도윤", "미래중도당", Orientation::moderate, false, true,
                       {"정치개혁과 연합정치"}),
    };
    s.candidates[0].aliases.push_back("김 후보");
    s.candidates[1].aliases.push_back("이 후보");
    s.context = "경기 둔화와 안보 불안이 겹친 가운데 치러지는 대통령 선거입니다. 집권 여당에 대한 "
                "중간평가 성격이 강하며, 부동산 정책과 청년 일자리 문제가 주요 쟁점입니다.";
    s.per_sido_context[Sido::seoul] = "수도권 주택 가격이 핵심 쟁점입니다.";
    s.per_sido_context[Sido::jeonnam] = "농어촌 소멸 대응과 지역 의료 공백이 쟁점입니다.";
    s.prompt_variant = PromptVariant::full;
    s.validate();
    return s;
}

ElectionScenario build_presidential_scenario_b() {
    ElectionScenario s;
    s.election_id = "fx-2032-pres";
    s.election_type = ElectionType::presidential;
    s.candidates = {
        make_candidate("최강민", "한빛당", Orientation::conservative, true, false,
                       {"규제 혁신", "국방 예산 확대"}),
        make_candidate("정예린", "새물결당", Orientation::progressive, false, false,
                       {"주 4.5일제 단계 도입", "전세 사기 피해 구제"}),
    };
    s.context = "현직 대통령의 재선 도전으로 치러지는 양자 대결 구도의 선거입니다.";
    s.prompt_variant = PromptVariant::full;
    s.validate();
    return s;
}

ActualResult build_presidential_actual(const ElectionScenario& scenario, const RegionMap& regions) {
    ActualResult a;
    a.election_id = scenario.election_id;
    for (const auto& c : scenario.candidates) {
        a.candidates.push_back({c.name, c.party, c.orientation, c.incumbent, c.third_party, ""});
    }
    a.national = {{"김정호", 47.8}, {"이서연", 44.1}, {"박도윤", 7.3}};
    a.minor_residual = 0.8;
    a.winner = "김정호";
    for (int d = 0; d < kSidoCount; ++d) {
        const auto sido = static_cast<Sido>(d);
        double cons = 47.8;
        double prog = 44.1;
        double third = 7.3;
        switch (regions.region_of(sido)) {
            case Region::gyeongbuk: cons += 14.0; prog -= 13.5; third -= 0.5; break;
            case Region::gyeongnam: cons += 9.0; prog -= 8.7; third -= 0.3; break;
            case Region::jeolla: cons -= 18.0; prog += 18.5; third -= 0.5; break;
            case Region::capital: cons -= 1.0; prog += 1.2; third -= 0.2; break;
            case Region::chungcheong: cons += 1.0; prog -= 1.0; break;
            case Region::gangwon: cons += 5.0; prog -= 5.0; break;
            case Region::jeju: cons -= 0.5; prog += 0.5; break;
        }
        a.per_sido[sido] = {{"김정호", cons}, {"이서연", prog}, {"박도윤", third}};
    }
    a.validate();
    return a;
}

ActualResult build_presidential_actual_b(const ElectionScenario& scenario) {
    ActualResult a;
    a.election_id = scenario.election_id;
    for (const auto& c : scenario.candidates) {
        a.candidates.push_back({c.name, c.party, c.orientation, c.incumbent, c.third_party, ""});
    }
    a.national = {{"최강민", 45.8}, {"정예린", 52.9}};
    a.minor_residual = 1.3;
    a.winner = "정예린";
    a.validate();
    return a;
}

// Deterministic Korean-style names for the parallel-race slates.
std::string local_candidate_name(int sido, int slot) {
    static constexpr std::array<const char*, 10> kSurnames = {
        "김", "이", "박", "최", "정", "강", "조", "윤", "장", "임"};
    static constexpr std::array<const char*, 12> kGiven = {
        "민준", "서연", "도윤", "하은", "지호", "수아",
        "건우", "예진", "시우", "채원", "주원", "다은"};
    const int idx = sido * 3 + slot;
    return std::string(kSurnames[idx % 10]) + kGiven[(idx * 7 + slot) % 12];
}

ElectionScenario build_local_scenario() {
    ElectionScenario s;
    s.election_id = "fx-2030-local";
    s.election_type = ElectionType::local;
    s.context = "17개 시도에서 동시에 치러지는 광역단체장 선거입니다. 지역 현안과 후보 개인 경쟁력이 "
                "정당 구도와 함께 작용합니다.";
    for (int d = 0; d < kSidoCount; ++d) {
        const auto sido = static_cast<Sido>(d);
        std::vector<std::string> slate;
        const std::array<std::pair<const char*, Orientation>, 3> parties = {{
            {"한빛당", Orientation::conservative},
            {"새물결당", Orientation::progressive},
            {"가온당", Orientation::moderate},
        }};
        for (int slot = 0; slot < 3; ++slot) {
            Candidate c = make_candidate(local_candidate_name(d, slot), parties[slot].first,
                                         parties[slot].second, slot == 0 && d % 4 == 0,
                                         slot == 2, {});
            c.pledges = {std::string(sido_korean_name(sido)) + " 교통망 확충"};
            s.candidates.push_back(c);
            slate.push_back(s.candidates.back().name);
        }
        s.per_sido_slates[sido] = slate;
    }
    s.prompt_variant = PromptVariant::full;
    s.validate();
    return s;
}

ActualResult build_local_actual(const ElectionScenario& scenario, const RegionMap& regions) {
    ActualResult a;
    a.election_id = scenario.election_id;
    a.candidates = {
        {"한빛당", "한빛당", Orientation::conservative, false, false, ""},
        {"새물결당", "새물결당", Orientation::progressive, false, false, ""},
        {"가온당", "가온당", Orientation::moderate, false, true, ""},
    };
    a.national = {{"한빛당", 51.2}, {"새물결당", 42.6}, {"가온당", 5.5}};
    a.minor_residual = 0.7;
    a.winner = "한빛당";
    for (int d = 0; d < kSidoCount; ++d) {
        const auto sido = static_cast<Sido>(d);
        double cons = 51.2;
        double prog = 42.6;
        double third = 5.5;
        switch (regions.region_of(sido)) {
            case Region::gyeongbuk: cons += 13.0; prog -= 12.5; third -= 0.5; break;
            case Region::gyeongnam: cons += 8.0; prog -= 7.6; third -= 0.4; break;
            case Region::jeolla: cons -= 17.0; prog += 17.5; third -= 0.5; break;
            case Region::capital: cons -= 3.0; prog += 3.1; third -= 0.1; break;
            case Region::chungcheong: cons += 0.5; prog -= 0.5; break;
            case Region::gangwon: cons += 4.0; prog -= 4.0; break;
            case Region::jeju: cons -= 1.0; prog += 1.0; break;
        }
        a.per_sido[sido] = {{"한빛당", cons}, {"새물결당", prog}, {"가온당", third}};
    }
    a.validate();
    return a;
}

}  // namespace

std::vector<std::filesystem::path> generate_fixture_corpus(std::uint64_t seed, FixtureScale scale,
                                                           const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create fixture directory " + out_dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::filesystem::path& p) {
        written.push_back(p);
        return p;
    };

    const RegionMap regions = RegionMap::defaults();
    regions.save(emit(out_dir / "region_map.csv"));

    build_census(seed, scale).save(emit(out_dir / "census.csv"));
    build_conditional(seed, regions).save(emit(out_dir / "conditional_counts.csv"));

    const AugmentationSet augmentation = build_augmentation(seed);
    for (const auto& t : augmentation.tables) t.save(emit(out_dir / ("aug_" + t.attribute + ".csv")));

    build_turnout().save(emit(out_dir / "turnout.csv"));
    BeliefPriors::defaults().save(emit(out_dir / "belief_priors.csv"));

    const ElectionScenario pres = build_presidential_scenario();
    pres.save(emit(out_dir / "scenario_presidential.json"));
    build_presidential_actual(pres, regions).save(emit(out_dir / "actual_presidential.json"));

    const ElectionScenario pres_b = build_presidential_scenario_b();
    pres_b.save(emit(out_dir / "scenario_presidential_b.json"));
    build_presidential_actual_b(pres_b).save(emit(out_dir / "actual_presidential_b.json"));

    const ElectionScenario local = build_local_scenario();
    local.save(emit(out_dir / "scenario_local.json"));
    build_local_actual(local, regions).save(emit(out_dir / "actual_local.json"));

    return written;
}

}  // namespace psephos
