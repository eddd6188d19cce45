#include <doctest.h>

#include <set>

#include "psephos/csv.hpp"
#include "psephos/diagnostics.hpp"
#include "test_support.hpp"

using namespace psephos;
using psephos::test::TempDir;
using psephos::test::make_full_agent;
using psephos::test::slurp;

namespace {

Candidate cand(const std::string& name, Orientation o, std::vector<std::string> aliases = {}) {
    Candidate c;
    c.name = name;
    c.orientation = o;
    c.party = name + "당";
    c.aliases = {name};
    for (auto& a : aliases) c.aliases.push_back(std::move(a));
    return c;
}

ElectionScenario abc_scenario() {
    ElectionScenario s;
    s.election_id = "abc";
    s.election_type = ElectionType::presidential;
    s.candidates = {cand("가나다", Orientation::progressive),
                    cand("라마바", Orientation::conservative),
                    cand("사아자", Orientation::moderate, {"사 후보"})};
    s.context = "3자 구도";
    return s;
}

VoteRecord rec(std::int64_t id, const std::string& model, const std::string& vote,
               const std::string& reasoning) {
    VoteRecord r;
    r.agent_id = id;
    r.election_id = "abc";
    r.model_id = model;
    r.vote = vote;
    r.reasoning = reasoning;
    r.confidence = 0.7;
    r.match_method = vote == kAbstainVote ? MatchMethod::abstained : MatchMethod::exact;
    return r;
}

}  // namespace

TEST_CASE("mention report matches exhaustive hand counts") {
    const auto scenario = abc_scenario();
    // 10 records on one model: 3 mention 가나다 (2 of them vote 가나다).
    std::vector<VoteRecord> records = {
        rec(0, "m", "가나다", "가나다의 공약이 좋다"),
        rec(1, "m", "가나다", "가나다를 지지한다"),
        rec(2, "m", "라마바", "가나다도 고려했지만 라마바"),
        rec(3, "m", "라마바", "안정감 때문"),
        rec(4, "m", "라마바", "정권 교체가 필요"),
        rec(5, "m", "라마바", "경제 실적"),
        rec(6, "m", "사아자", "중도 표심"),
        rec(7, "m", "사아자", "제3지대"),
        rec(8, "m", "라마바", "보수 결집"),
        rec(9, "m", "라마바", "지역 기반"),
    };
    const MentionReport report = mention_report(records, scenario);
    const MentionEntry* e = report.find("가나다", "m");
    REQUIRE(e != nullptr);
    CHECK(e->n_nonabstain == 10);
    CHECK(e->n_mention == 3);
    CHECK(e->n_vote_and_mention == 2);
    CHECK(e->mention_rate_pct == doctest::Approx(30.0));
    REQUIRE(e->vote_given_mention_pct.has_value());
    CHECK(*e->vote_given_mention_pct == doctest::Approx(200.0 / 3.0));
}

TEST_CASE("abstainers are excluded from mention denominators") {
    const auto scenario = abc_scenario();
    std::vector<VoteRecord> records = {
        rec(0, "m", "가나다", "가나다"),
        rec(1, "m", kAbstainVote, "가나다 포함 모두 별로"),
        rec(2, "m", "라마바", "그냥"),
    };
    const MentionReport report = mention_report(records, scenario);
    const MentionEntry* e = report.find("가나다", "m");
    REQUIRE(e != nullptr);
    CHECK(e->n_nonabstain == 2);
    CHECK(e->n_mention == 1);
}

TEST_CASE("zero mentions leave the conditional rate absent") {
    const auto scenario = abc_scenario();
    std::vector<VoteRecord> records = {rec(0, "m", "가나다", "별 이유 없음"),
                                       rec(1, "m", "라마바", "그냥")};
    const MentionReport report = mention_report(records, scenario);
    const MentionEntry* e = report.find("사아자", "m");
    REQUIRE(e != nullptr);
    CHECK(e->n_mention == 0);
    CHECK(e->mention_rate_pct == doctest::Approx(0.0));
    CHECK_FALSE(e->vote_given_mention_pct.has_value());

    const std::string j = report.to_json_string();
    CHECK(j.find("mention_rate_pct") != std::string::npos);
}

TEST_CASE("universal mention and vote gives 100/100") {
    const auto scenario = abc_scenario();
    std::vector<VoteRecord> records;
    for (int i = 0; i < 8; ++i) records.push_back(rec(i, "m", "가나다", "가나다 지지"));
    const MentionReport report = mention_report(records, scenario);
    const MentionEntry* e = report.find("가나다", "m");
    CHECK(e->mention_rate_pct == doctest::Approx(100.0));
    CHECK(*e->vote_given_mention_pct == doctest::Approx(100.0));
}

TEST_CASE("alias forms count as mentions") {
    const auto scenario = abc_scenario();
    std::vector<VoteRecord> records = {rec(0, "m", "라마바", "사 후보는 참신했지만")};
    const MentionReport report = mention_report(records, scenario);
    CHECK(report.find("사아자", "m")->n_mention == 1);

    // Whitespace differences are normalized away.
    CHECK(reasoning_mentions("사   후보 가 낫다", scenario.candidates[2]));
    CHECK_FALSE(reasoning_mentions("아무 관련 없는 글", scenario.candidates[2]));
}

TEST_CASE("orientation vote consistency on a hand fixture") {
    const auto scenario = abc_scenario();
    std::vector<AgentRecord> agents;
    std::vector<VoteRecord> records;
    // 4 moderate agents, 3 vote the progressive lineage.
    for (int i = 0; i < 4; ++i) {
        agents.push_back(make_full_agent(i, Orientation::moderate));
        records.push_back(rec(i, "m", i < 3 ? "가나다" : "라마바", "이유"));
    }
    // 2 conservatives voting conservative.
    for (int i = 4; i < 6; ++i) {
        agents.push_back(make_full_agent(i, Orientation::conservative));
        records.push_back(rec(i, "m", "라마바", "이유"));
    }
    const auto split = orientation_vote_consistency(records, agents, {"가나다"});
    const auto& moderate = split[static_cast<int>(Orientation::moderate)];
    REQUIRE(moderate.lineage_pct.has_value());
    CHECK(*moderate.lineage_pct == doctest::Approx(75.0));
    const auto& cons = split[static_cast<int>(Orientation::conservative)];
    CHECK(*cons.lineage_pct == doctest::Approx(0.0));

    SUBCASE("all moderates voting lineage reaches 100") {
        for (auto& r : records) r.vote = "가나다";
        const auto all = orientation_vote_consistency(records, agents, {"가나다"});
        CHECK(*all[static_cast<int>(Orientation::moderate)].lineage_pct == doctest::Approx(100.0));
    }
}

TEST_CASE("audit sample is stratified, deterministic, and exact") {
    const auto scenario = abc_scenario();
    const Candidate& target = scenario.candidates[0];

    std::vector<VoteRecord> records;
    std::int64_t id = 0;
    for (const std::string model : {"m1", "m2", "m3", "m4"}) {
        for (int i = 0; i < 60; ++i) {
            const bool hit = i < 30;
            records.push_back(rec(id++, model, "라마바",
                                  hit ? "가나다도 고민했다" : "고민 없이 결정"));
        }
    }

    TempDir dir("audit");
    const auto path = dir.path() / "audit.csv";
    std::vector<std::string> warnings;
    const std::size_t rows = export_audit_sample(records, target, path, 42, 25, 25, &warnings);
    CHECK(rows == 200);
    CHECK(warnings.empty());

    const CsvTable csv = read_csv(path);
    CHECK(csv.header == std::vector<std::string>{"model_id", "agent_id", "hit_flag", "reasoning", "vote"});
    REQUIRE(csv.rows.size() == 200);
    std::map<std::string, std::pair<int, int>> strata;
    std::set<std::string> seen;
    for (const auto& row : csv.rows) {
        REQUIRE(seen.insert(row[0] + "/" + row[1]).second);  // no record twice
        if (row[2] == "1") strata[row[0]].first++;
        else strata[row[0]].second++;
    }
    for (const auto& [model, counts] : strata) {
        CHECK(counts.first == 25);
        CHECK(counts.second == 25);
    }

    const auto path2 = dir.path() / "audit2.csv";
    export_audit_sample(records, target, path2, 42, 25, 25, nullptr);
    CHECK(slurp(path) == slurp(path2));

    const auto path3 = dir.path() / "audit3.csv";
    export_audit_sample(records, target, path3, 43, 25, 25, nullptr);
    CHECK(slurp(path) != slurp(path3));
}

TEST_CASE("audit sample takes everything when a stratum is exactly full or short") {
    const auto scenario = abc_scenario();
    const Candidate& target = scenario.candidates[0];
    std::vector<VoteRecord> records;
    std::int64_t id = 0;
    for (int i = 0; i < 25; ++i) records.push_back(rec(id++, "m", "라마바", "가나다 고려"));
    for (int i = 0; i < 20; ++i) records.push_back(rec(id++, "m", "라마바", "바로 결정"));

    TempDir dir("auditshort");
    const auto path = dir.path() / "audit.csv";
    std::vector<std::string> warnings;
    const std::size_t rows = export_audit_sample(records, target, path, 7, 25, 25, &warnings);
    CHECK(rows == 45);  // 25 hits + all 20 non-hits
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("non-hit") != std::string::npos);
}
