#include <doctest.h>

#include <cmath>
#include <map>

#include "psephos/metrics.hpp"
#include "psephos/rng.hpp"
#include "test_support.hpp"

using namespace psephos;
using psephos::test::TempDir;
using psephos::test::make_full_agent;

namespace {

VoteRecord vote(std::int64_t id, const std::string& name) {
    VoteRecord r;
    r.agent_id = id;
    r.election_id = "t";
    r.model_id = "m";
    r.vote = name;
    r.reasoning = name == kAbstainVote ? "기권" : name + "를 지지";
    r.confidence = 0.7;
    r.match_method = name == kAbstainVote ? MatchMethod::abstained : MatchMethod::exact;
    return r;
}

std::vector<VoteRecord> split_records(int a, int b, int abstain = 0) {
    std::vector<VoteRecord> records;
    std::int64_t id = 0;
    for (int i = 0; i < a; ++i) records.push_back(vote(id++, "A"));
    for (int i = 0; i < b; ++i) records.push_back(vote(id++, "B"));
    for (int i = 0; i < abstain; ++i) records.push_back(vote(id++, kAbstainVote));
    return records;
}

ShareTable table_from(const std::vector<std::pair<std::string, double>>& shares) {
    ShareTable t;
    for (const auto& [name, share] : shares) {
        ShareEntry e;
        e.name = name;
        e.share = share;
        t.entries.push_back(e);
    }
    t.n_voting = 1000;
    return t;
}

ActualResult actual_from(const std::vector<std::pair<std::string, double>>& shares,
                         double residual) {
    ActualResult a;
    a.election_id = "t";
    a.national = shares;
    a.minor_residual = residual;
    double best = -1;
    for (const auto& [n, s] : shares)
        if (s > best) {
            best = s;
            a.winner = n;
        }
    a.validate();
    return a;
}

}  // namespace

TEST_CASE("national shares exclude abstentions from the denominator") {
    const auto records = split_records(3, 1, 1);
    const ShareTable t = national_shares(records);
    CHECK(t.share_of("A") == doctest::Approx(75.0));
    CHECK(t.share_of("B") == doctest::Approx(25.0));
    CHECK(t.n_voting == 4);
    CHECK(t.n_abstain == 1);
    CHECK(t.abstain_rate_pct() == doctest::Approx(20.0));
}

TEST_CASE("single-candidate records give 100 percent") {
    const auto records = split_records(5, 0);
    const ShareTable t = national_shares(records);
    CHECK(t.share_of("A") == doctest::Approx(100.0));
}

TEST_CASE("zero-vote candidates appear when the slate order is supplied") {
    const auto records = split_records(5, 0);
    const ShareTable t = national_shares(records, {"A", "B", "C"});
    CHECK(t.entries.size() == 3);
    CHECK(t.share_of("C") == doctest::Approx(0.0));
    CHECK(t.entries[2].name == "C");
}

TEST_CASE("shares sum to 100 within 1e-9 on a large mixed fixture") {
    std::vector<VoteRecord> records;
    for (int i = 0; i < 5000; ++i) {
        const int pick = (i * 7919) % 100;
        std::string name = pick < 45 ? "A" : pick < 80 ? "B" : pick < 99 ? "C" : kAbstainVote;
        records.push_back(vote(i, name));
    }
    const ShareTable t = national_shares(records);
    double sum = 0.0;
    for (const auto& e : t.entries) sum += e.share;
    CHECK(std::abs(sum - 100.0) <= 1e-9);
    CHECK_NOTHROW(t.validate());
}

TEST_CASE("all-abstain records have undefined shares") {
    const auto records = split_records(0, 0, 4);
    CHECK_THROWS_AS(national_shares(records), ValidationError);
    CHECK_THROWS_AS(national_shares({}), ValidationError);
}

TEST_CASE("degenerate bootstrap interval collapses to the point") {
    const auto records = split_records(200, 0);
    const ShareTable t = bootstrap_ci(records, 200, 95.0, 42);
    REQUIRE(t.entries.size() == 1);
    REQUIRE(t.entries[0].ci.has_value());
    CHECK(t.entries[0].ci->first == doctest::Approx(100.0));
    CHECK(t.entries[0].ci->second == doctest::Approx(100.0));
}

TEST_CASE("bootstrap width follows the analytic binomial law") {
    // Analytic oracle: width = 2 * 1.96 * sqrt(p(1-p)/n) * 100.
    const double analytic_1000 = 2.0 * 1.959963985 * std::sqrt(0.6 * 0.4 / 1000.0) * 100.0;

    const auto records_1000 = split_records(600, 400);
    const ShareTable t1000 = bootstrap_ci(records_1000, 1000, 95.0, 42);
    const double width_1000 = t1000.entries[0].ci->second - t1000.entries[0].ci->first;
    CHECK(std::abs(width_1000 - analytic_1000) / analytic_1000 < 0.25);

    const auto records_4000 = split_records(2400, 1600);
    const ShareTable t4000 = bootstrap_ci(records_4000, 1000, 95.0, 42);
    const double width_4000 = t4000.entries[0].ci->second - t4000.entries[0].ci->first;
    const double ratio = width_1000 / width_4000;
    CHECK(ratio > 1.7);
    CHECK(ratio < 2.3);
}

TEST_CASE("bootstrap intervals bracket the point estimate and are seed-stable") {
    const auto records = split_records(550, 430, 20);
    const ShareTable a = bootstrap_ci(records, 500, 95.0, 7);
    const ShareTable b = bootstrap_ci(records, 500, 95.0, 7);
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        REQUIRE(a.entries[i].ci.has_value());
        CHECK(a.entries[i].ci->first <= a.entries[i].share);
        CHECK(a.entries[i].ci->second >= a.entries[i].share);
        CHECK(a.entries[i].ci->first == b.entries[i].ci->first);
        CHECK(a.entries[i].ci->second == b.entries[i].ci->second);
    }
    CHECK_NOTHROW(a.validate());
}

TEST_CASE("five-candidate evaluation reproduces the published error level") {
    const ShareTable pred = table_from(
        {{"갑", 71.3}, {"을", 27.4}, {"병", 0.9}, {"정", 0.5}, {"무", 0.02}});
    const ActualResult act = actual_from(
        {{"갑", 41.1}, {"을", 24.0}, {"병", 21.4}, {"정", 6.8}, {"무", 6.2}}, 0.5);
    const EvalReport rep = evaluate(pred, act);
    CHECK(rep.mae_pp == doctest::Approx(13.316).epsilon(0.004));
    CHECK(std::abs(rep.mae_pp - 13.3) <= 0.05);
    CHECK(rep.winner_correct);
    CHECK(rep.predicted_winner == "갑");
}

TEST_CASE("three-candidate evaluation reproduces the published error level") {
    const ShareTable pred = table_from({{"갑", 52.3}, {"을", 47.6}, {"병", 0.06}});
    const ActualResult act = actual_from({{"갑", 48.6}, {"을", 47.8}, {"병", 2.4}}, 1.2);
    const EvalReport rep = evaluate(pred, act);
    CHECK(std::abs(rep.mae_pp - 2.1) <= 0.05);
    CHECK(rep.winner_correct);
}

TEST_CASE("identical prediction scores perfectly") {
    const ShareTable pred = table_from({{"A", 55.0}, {"B", 45.0}});
    const ActualResult act = actual_from({{"A", 55.0}, {"B", 44.6}}, 0.4);
    ShareTable exact = pred;
    exact.entries[1].share = 44.6;
    exact.entries[0].share = 55.0;
    // Renormalize to the actual's vector for the exactness check.
    const EvalReport rep = evaluate(exact, act);
    CHECK(rep.mae_pp == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.winner_correct);
    CHECK(rep.wasserstein_sim == doctest::Approx(1.0));

    std::map<Sido, ShareTable> per_sido;
    ActualResult with_sido = act;
    with_sido.per_sido[Sido::seoul] = {{"A", 52.0}, {"B", 47.0}};
    with_sido.per_sido[Sido::busan] = {{"A", 58.0}, {"B", 41.0}};
    per_sido[Sido::seoul] = table_from({{"A", 52.0}, {"B", 47.0}});
    per_sido[Sido::busan] = table_from({{"A", 58.0}, {"B", 41.0}});
    const EvalReport rep_sido = evaluate(exact, with_sido, per_sido);
    REQUIRE(rep_sido.sido_hit_rate.has_value());
    CHECK(*rep_sido.sido_hit_rate == doctest::Approx(1.0));
}

TEST_CASE("missing simulated candidates are imputed at zero with a warning") {
    const ShareTable pred = table_from({{"A", 60.0}, {"B", 40.0}});
    const ActualResult act = actual_from({{"A", 50.0}, {"B", 30.0}, {"C", 19.8}}, 0.2);
    const EvalReport rep = evaluate(pred, act);
    CHECK(rep.mae_pp == doctest::Approx((10.0 + 10.0 + 19.8) / 3.0));
    CHECK_FALSE(rep.warnings.empty());
}

TEST_CASE("evaluation with no candidate overlap is rejected") {
    const ShareTable pred = table_from({{"X", 60.0}, {"Y", 40.0}});
    const ActualResult act = actual_from({{"A", 60.0}, {"B", 39.6}}, 0.4);
    CHECK_THROWS_AS(evaluate(pred, act), ValidationError);
}

TEST_CASE("MAE properties: symmetry, nonnegativity, zero iff equal") {
    const ShareTable p = table_from({{"A", 52.0}, {"B", 48.0}});
    const ShareTable q = table_from({{"A", 48.0}, {"B", 52.0}});
    const ActualResult act_q = actual_from({{"A", 48.0}, {"B", 52.0}}, 0.0);
    const ActualResult act_p = actual_from({{"A", 52.0}, {"B", 48.0}}, 0.0);
    const double pq = evaluate(p, act_q).mae_pp;
    const double qp = evaluate(q, act_p).mae_pp;
    CHECK(pq == doctest::Approx(qp));
    CHECK(pq > 0.0);
    CHECK(evaluate(p, act_p).mae_pp == doctest::Approx(0.0));
}

TEST_CASE("winner call is invariant under rescaling of both vectors") {
    const ShareTable pred = table_from({{"A", 52.0}, {"B", 48.0}});
    ShareTable scaled = pred;
    for (auto& e : scaled.entries) e.share *= 0.5;
    const ActualResult act = actual_from({{"A", 51.0}, {"B", 48.8}}, 0.2);
    CHECK(evaluate(pred, act).winner_correct == evaluate(scaled, act).winner_correct);
}

TEST_CASE("wasserstein similarity is 1 iff equal and decays with moved mass") {
    CHECK(wasserstein_similarity({50, 30, 20}, {50, 30, 20}) == doctest::Approx(1.0));
    // Moving mass from the correct candidate to a wrong one strictly lowers it.
    const double near = wasserstein_similarity({49, 31, 20}, {50, 30, 20});
    const double far = wasserstein_similarity({44, 36, 20}, {50, 30, 20});
    CHECK(near < 1.0);
    CHECK(far < near);
    // All mass moved end to end is the documented maximum distance.
    CHECK(wasserstein_similarity({100, 0}, {0, 100}) == doctest::Approx(0.0));
    CHECK(wasserstein_similarity({100}, {100}) == doctest::Approx(1.0));
}

TEST_CASE("turnout reweighting with equal rates is an exact no-op") {
    std::vector<VoteRecord> records;
    std::vector<AgentRecord> agents;
    for (int i = 0; i < 300; ++i) {
        auto a = make_full_agent(i, Orientation::moderate);
        a.age_bracket = static_cast<AgeBracket>(i % kAgeBracketCount);
        a.age = age_bracket_range(a.age_bracket).lo;
        agents.push_back(a);
        records.push_back(vote(i, i % 3 == 0 ? "A" : (i % 3 == 1 ? "B" : kAbstainVote)));
    }
    TurnoutTable uniform;
    uniform.rate.fill(0.66);
    const ShareTable base = national_shares(records);
    const ShareTable rw = turnout_reweight(records, agents, uniform);
    for (const auto& e : base.entries)
        CHECK(rw.share_of(e.name) == doctest::Approx(e.share).epsilon(1e-12));
}

TEST_CASE("turnout reweighting follows the hand-computed two-bracket case") {
    std::vector<VoteRecord> records;
    std::vector<AgentRecord> agents;
    // Bracket 20-24 votes A, bracket 60-64 votes B, equal counts.
    for (int i = 0; i < 100; ++i) {
        auto a = make_full_agent(i, Orientation::moderate);
        a.age_bracket = i < 50 ? AgeBracket::a20_24 : AgeBracket::a60_64;
        a.age = i < 50 ? 22 : 62;
        agents.push_back(a);
        records.push_back(vote(i, i < 50 ? "A" : "B"));
    }
    TurnoutTable t;
    t.rate.fill(0.5);
    t.rate[static_cast<int>(AgeBracket::a20_24)] = 1.0;
    t.rate[static_cast<int>(AgeBracket::a60_64)] = 0.5;
    const ShareTable rw = turnout_reweight(records, agents, t);
    CHECK(rw.share_of("A") == doctest::Approx(100.0 / 1.5));
    CHECK(rw.share_of("B") == doctest::Approx(50.0 / 1.5));
}

TEST_CASE("old-favoring turnout strictly raises an old-skewed candidate") {
    std::vector<VoteRecord> records;
    std::vector<AgentRecord> agents;
    for (int i = 0; i < 1000; ++i) {
        auto a = make_full_agent(i, Orientation::moderate);
        const bool old = i % 2 == 0;
        a.age_bracket = old ? AgeBracket::a70_74 : AgeBracket::a25_29;
        a.age = old ? 71 : 27;
        agents.push_back(a);
        // Older agents lean heavily toward the conservative candidate.
        const bool cons_vote = old ? (i % 10 < 8) : (i % 10 < 3);
        records.push_back(vote(i, cons_vote ? "보수후보" : "진보후보"));
    }
    TurnoutTable old_favoring;
    old_favoring.rate.fill(0.4);
    old_favoring.rate[static_cast<int>(AgeBracket::a70_74)] = 0.9;
    const double base = national_shares(records).share_of("보수후보");
    const double rw = turnout_reweight(records, agents, old_favoring).share_of("보수후보");
    CHECK(rw > base);
}

TEST_CASE("subgroup cells match hand computation") {
    std::vector<VoteRecord> records;
    std::vector<AgentRecord> agents;
    auto add = [&](std::int64_t id, AgeBracket b, Sex sex, const std::string& v) {
        auto a = make_full_agent(id, Orientation::moderate);
        a.age_bracket = b;
        a.age = age_bracket_range(b).lo;
        a.sex = sex;
        agents.push_back(a);
        records.push_back(vote(id, v));
    };
    // Cell (20-24, male): A 3/4; cell (20-24, female): A 1/2; cell (60-64, male): A 0/2.
    add(0, AgeBracket::a20_24, Sex::male, "A");
    add(1, AgeBracket::a20_24, Sex::male, "A");
    add(2, AgeBracket::a20_24, Sex::male, "A");
    add(3, AgeBracket::a20_24, Sex::male, "B");
    add(4, AgeBracket::a20_24, Sex::female, "A");
    add(5, AgeBracket::a20_24, Sex::female, "B");
    add(6, AgeBracket::a60_64, Sex::male, "B");
    add(7, AgeBracket::a60_64, Sex::male, "B");

    std::vector<SubgroupCellShare> bench = {
        {AgeBracket::a20_24, Sex::male, "A", 70.0},
        {AgeBracket::a20_24, Sex::female, "A", 55.0},
        {AgeBracket::a60_64, Sex::male, "A", 10.0},
    };
    const SubgroupReport rep = subgroup_cells(records, agents, SubgroupAxes::age_sex, bench);
    CHECK(rep.n_pairs == 3);
    // Hand: |75-70| + |50-55| + |0-10| over 3 pairs.
    CHECK(rep.cell_mae == doctest::Approx((5.0 + 5.0 + 10.0) / 3.0));
    // Hand-computed Pearson r over pred (75, 50, 0) vs act (70, 55, 10):
    // cov 2375, var_p 2916.67, var_a 1950 -> r = 2375 / 2384.85.
    CHECK(rep.pearson_r == doctest::Approx(0.99587).epsilon(0.0005));

    SUBCASE("identical cells give MAE 0 and r 1") {
        bench[0].share = 75.0;
        bench[1].share = 50.0;
        bench[2].share = 0.0;
        const SubgroupReport exact = subgroup_cells(records, agents, SubgroupAxes::age_sex, bench);
        CHECK(exact.cell_mae == doctest::Approx(0.0));
        CHECK(exact.pearson_r == doctest::Approx(1.0));
    }
    SUBCASE("constant offset keeps r at 1") {
        bench[0].share = 80.0;
        bench[1].share = 55.0;
        bench[2].share = 5.0;
        const SubgroupReport off = subgroup_cells(records, agents, SubgroupAxes::age_sex, bench);
        CHECK(off.cell_mae == doctest::Approx(5.0));
        CHECK(off.pearson_r == doctest::Approx(1.0));
    }
    SUBCASE("fewer than two pairs is an error") {
        const std::vector<SubgroupCellShare> one = {{AgeBracket::a20_24, Sex::male, "A", 70.0}};
        CHECK_THROWS_AS(subgroup_cells(records, agents, SubgroupAxes::age_sex, one),
                        ValidationError);
    }
    SUBCASE("age-only axes pool over sex") {
        const std::vector<SubgroupCellShare> age_bench = {
            {AgeBracket::a20_24, std::nullopt, "A", 60.0},
            {AgeBracket::a60_64, std::nullopt, "A", 5.0},
        };
        const SubgroupReport rep_age = subgroup_cells(records, agents, SubgroupAxes::age, age_bench);
        CHECK(rep_age.n_pairs == 2);
        // Pooled 20-24 cell: A 4/6.
        CHECK(rep_age.cell_mae ==
              doctest::Approx((std::abs(400.0 / 6.0 - 60.0) + 5.0) / 2.0));
    }
}

TEST_CASE("party shares aggregate candidate votes by party") {
    ElectionScenario s;
    s.election_id = "p";
    s.election_type = ElectionType::presidential;
    Candidate a;
    a.name = "후보갑";
    a.party = "한빛당";
    a.orientation = Orientation::conservative;
    a.aliases = {"후보갑"};
    Candidate b = a;
    b.name = "후보을";
    b.party = "새물결당";
    b.orientation = Orientation::progressive;
    b.aliases = {"후보을"};
    Candidate c = a;
    c.name = "후보병";
    c.party = "한빛당";
    c.aliases = {"후보병"};
    s.candidates = {a, b, c};

    std::vector<VoteRecord> records;
    records.push_back(vote(0, "후보갑"));
    records.push_back(vote(1, "후보병"));
    records.push_back(vote(2, "후보을"));
    records.push_back(vote(3, "후보을"));
    const ShareTable t = party_shares(records, s);
    CHECK(t.share_of("한빛당") == doctest::Approx(50.0));
    CHECK(t.share_of("새물결당") == doctest::Approx(50.0));
}

TEST_CASE("plot data csv lines up candidates with actuals") {
    TempDir dir("plot");
    const ShareTable pred = [&] {
        auto t = table_from({{"A", 60.0}, {"B", 40.0}});
        t.entries[0].ci = {58.0, 62.0};
        t.entries[1].ci = {38.0, 42.0};
        return t;
    }();
    const ActualResult act = actual_from({{"A", 55.0}, {"B", 44.8}}, 0.2);
    const auto path = dir.path() / "plot.csv";
    write_plot_data(path, pred, act);
    const std::string text = psephos::test::slurp(path);
    CHECK(text.find("candidate,sim,actual,ci_lo,ci_hi") != std::string::npos);
    CHECK(text.find("A,60.0000,55.0000,58.0000,62.0000") != std::string::npos);
}

TEST_CASE("subgroup benchmark CSV loads age-sex and age-only rows") {
    TempDir dir("cells");
    const auto path = dir.path() / "cells.csv";
    std::ofstream(path) << "age_bracket,sex,candidate,share\n"
                        << "20-24,male,A,70.5\n"
                        << "20-24,*,A,61.2\n";
    const auto cells = load_subgroup_cells(path);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].sex == Sex::male);
    CHECK_FALSE(cells[1].sex.has_value());
    CHECK(cells[1].share == doctest::Approx(61.2));
}

TEST_CASE("wasserstein property: identity at equality, monotone in moved mass") {
    Rng rng = Rng::stream(8080, {2});
    for (int draw = 0; draw < 200; ++draw) {
        const int k = 2 + static_cast<int>(rng.below(5));
        std::vector<double> v(k);
        double total = 0.0;
        for (double& x : v) {
            x = 0.05 + rng.uniform();
            total += x;
        }
        for (double& x : v) x *= 100.0 / total;

        CHECK(wasserstein_similarity(v, v) == doctest::Approx(1.0));

        const std::size_t from = rng.below(static_cast<std::uint64_t>(k));
        std::size_t to = rng.below(static_cast<std::uint64_t>(k));
        if (to == from) to = (to + 1) % k;
        const double budget = v[from] * 0.4;

        auto moved = [&](double mass) {
            std::vector<double> w = v;
            w[from] -= mass;
            w[to] += mass;
            return wasserstein_similarity(w, v);
        };
        const double small = moved(budget * 0.5);
        const double large = moved(budget);
        CHECK(small < 1.0);
        CHECK(large < small);
    }
}
