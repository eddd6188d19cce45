#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "psephos/corpus.hpp"
#include "psephos/csv.hpp"
#include "psephos/fixture.hpp"
#include "psephos/population.hpp"
#include "psephos/scenario.hpp"
#include "test_support.hpp"

using namespace psephos;
using psephos::test::TempDir;
using psephos::test::slurp;

namespace {

CensusCell cell(AgeBracket a, Sex s, Sido d, Education e, Marital m, double w) {
    return {a, s, d, e, m, w};
}

CensusTable two_cell_table() {
    CensusTable t;
    for (int d = 0; d < kSidoCount; ++d) {
        const auto sido = static_cast<Sido>(d);
        if (sido == Sido::seoul) {
            t.cells.push_back(cell(AgeBracket::a30_34, Sex::male, sido, Education::university,
                                   Marital::married, 60.0));
        } else if (sido == Sido::busan) {
            t.cells.push_back(cell(AgeBracket::a50_54, Sex::female, sido, Education::high_school,
                                   Marital::married, 40.0));
        } else {
            t.cells.push_back(cell(AgeBracket::a40_44, Sex::male, sido, Education::high_school,
                                   Marital::married, 1.0));
        }
    }
    return t;
}

}  // namespace

TEST_CASE("census load reads back the simple fixture") {
    TempDir dir("census");
    const auto path = dir.path() / "census.csv";
    {
        std::ofstream out(path);
        out << "age_bracket,sex,sido,education,marital,weight\n";
        for (int d = 0; d < kSidoCount; ++d) {
            const auto tok = to_token(static_cast<Sido>(d));
            const double w = d == 0 ? 60.0 : (d == 1 ? 40.0 : 0.5);
            out << "30-34,male," << tok << ",university,married," << w << "\n";
        }
    }
    const CensusTable t = CensusTable::load(path);
    CHECK(t.cells.size() == 17);
    CHECK(t.total_weight() == doctest::Approx(60.0 + 40.0 + 15 * 0.5));
    CHECK(t.sido_weights()[0] == doctest::Approx(60.0));
    CHECK(t.sido_weights()[1] == doctest::Approx(40.0));
}

TEST_CASE("census validation rejects bad tables") {
    TempDir dir("censusbad");

    SUBCASE("negative weight") {
        CensusTable t = two_cell_table();
        t.cells[0].weight = -1.0;
        CHECK_THROWS_AS(t.validate(), ValidationError);
    }
    SUBCASE("duplicate cell key") {
        CensusTable t = two_cell_table();
        t.cells.push_back(t.cells[0]);
        CHECK_THROWS_AS(t.validate(), ValidationError);
    }
    SUBCASE("empty table") {
        CensusTable t;
        CHECK_THROWS_AS(t.validate(), ValidationError);
    }
    SUBCASE("sido with no positive weight") {
        CensusTable t = two_cell_table();
        t.cells[2].weight = 0.0;
        CHECK_THROWS_AS(t.validate(), ValidationError);
    }
    SUBCASE("malformed row names the line") {
        const auto path = dir.path() / "bad.csv";
        std::ofstream(path) << "age_bracket,sex,sido,education,marital,weight\n"
                            << "30-34,male,seoul,university,married,10\n"
                            << "30-34,marsian,seoul,university,married,10\n";
        try {
            CensusTable::load(path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        }
    }
}

TEST_CASE("census save/load round-trips exactly") {
    TempDir dir("censusrt");
    const CensusTable t = two_cell_table();
    const auto path = dir.path() / "census.csv";
    t.save(path);
    CHECK(CensusTable::load(path) == t);
}

TEST_CASE("full fixture census has the expected non-empty cell count") {
    TempDir dir("fixfull");
    generate_fixture_corpus(42, FixtureScale::full, dir.path());
    const CensusTable t = CensusTable::load(dir.path() / "census.csv");
    CHECK(t.nonempty_cell_count() == 5790);
    CHECK(t.cells.size() == 5790);
}

TEST_CASE("fixture corpus is deterministic per seed and sensitive to it") {
    TempDir a("fixa");
    TempDir b("fixb");
    TempDir c("fixc");
    const auto files_a = generate_fixture_corpus(42, FixtureScale::small, a.path());
    const auto files_b = generate_fixture_corpus(42, FixtureScale::small, b.path());
    const auto files_c = generate_fixture_corpus(1, FixtureScale::small, c.path());
    REQUIRE(files_a.size() == files_b.size());
    bool any_differs_across_seeds = false;
    for (std::size_t i = 0; i < files_a.size(); ++i) {
        CHECK(slurp(files_a[i]) == slurp(files_b[i]));
        if (slurp(files_a[i]) != slurp(files_c[i])) any_differs_across_seeds = true;
    }
    CHECK(any_differs_across_seeds);
}

TEST_CASE("fixture corpus passes every loader validation") {
    TempDir dir("fixvalid");
    generate_fixture_corpus(7, FixtureScale::small, dir.path());
    CHECK_NOTHROW(CensusTable::load(dir.path() / "census.csv"));
    CHECK_NOTHROW(ConditionalCountTable::load(dir.path() / "conditional_counts.csv"));
    CHECK_NOTHROW(RegionMap::load(dir.path() / "region_map.csv"));
    CHECK_NOTHROW(TurnoutTable::load(dir.path() / "turnout.csv"));
    CHECK_NOTHROW(AugmentationSet::load_dir(dir.path()));
    CHECK_NOTHROW(ElectionScenario::load(dir.path() / "scenario_presidential.json"));
    CHECK_NOTHROW(ElectionScenario::load(dir.path() / "scenario_presidential_b.json"));
    CHECK_NOTHROW(ElectionScenario::load(dir.path() / "scenario_local.json"));
    CHECK_NOTHROW(ActualResult::load(dir.path() / "actual_presidential.json"));
    CHECK_NOTHROW(ActualResult::load(dir.path() / "actual_presidential_b.json"));
    CHECK_NOTHROW(ActualResult::load(dir.path() / "actual_local.json"));
}

TEST_CASE("fixture conditional table carries the planted regional skews") {
    TempDir dir("fixskew");
    generate_fixture_corpus(42, FixtureScale::small, dir.path());
    const auto table = ConditionalCountTable::load(dir.path() / "conditional_counts.csv");

    const auto& cons_region = table.region_marginals[static_cast<int>(kFixtureConservativeRegion)];
    CHECK(cons_region[0] > cons_region[1]);
    CHECK(cons_region[0] > cons_region[2]);

    const auto& prog_region = table.region_marginals[static_cast<int>(kFixtureProgressiveRegion)];
    CHECK(prog_region[2] > prog_region[0]);
    CHECK(prog_region[2] > prog_region[1]);
}

TEST_CASE("region map default is total and surjective, and round-trips") {
    const RegionMap m = RegionMap::defaults();
    CHECK_NOTHROW(m.validate());
    TempDir dir("regionmap");
    const auto path = dir.path() / "region_map.csv";
    m.save(path);
    CHECK(RegionMap::load(path) == m);

    SUBCASE("missing sido row") {
        std::ofstream out(path);
        out << "sido,region\nseoul,capital\n";
        out.close();
        CHECK_THROWS_AS(RegionMap::load(path), ValidationError);
    }
    SUBCASE("not surjective") {
        std::ofstream out(path);
        out << "sido,region\n";
        for (int s = 0; s < kSidoCount; ++s)
            out << to_token(static_cast<Sido>(s)) << ",capital\n";
        out.close();
        CHECK_THROWS_AS(RegionMap::load(path), ValidationError);
    }
}

TEST_CASE("conditional count table validation") {
    TempDir dir("cond");
    const auto path = dir.path() / "cond.csv";

    SUBCASE("round trip") {
        generate_fixture_corpus(3, FixtureScale::small, dir.path());
        const auto t = ConditionalCountTable::load(dir.path() / "conditional_counts.csv");
        t.save(path);
        CHECK(ConditionalCountTable::load(path) == t);
    }
    SUBCASE("missing national prior") {
        std::ofstream(path) << "age_bracket,sex,region,education,n_conservative,n_moderate,n_progressive\n"
                            << "30-34,male,capital,university,3,4,3\n";
        CHECK_THROWS_AS(ConditionalCountTable::load(path), ValidationError);
    }
    SUBCASE("zero national prior component") {
        std::ofstream(path) << "age_bracket,sex,region,education,n_conservative,n_moderate,n_progressive\n"
                            << "*,*,*,*,10,0,10\n";
        CHECK_THROWS_AS(ConditionalCountTable::load(path), ValidationError);
    }
    SUBCASE("region marginal below its cell sum") {
        std::ofstream(path) << "age_bracket,sex,region,education,n_conservative,n_moderate,n_progressive\n"
                            << "30-34,male,capital,university,30,40,30\n"
                            << "*,*,capital,*,1,1,1\n"
                            << "*,*,*,*,100,100,100\n";
        CHECK_THROWS_AS(ConditionalCountTable::load(path), ValidationError);
    }
    SUBCASE("negative count") {
        std::ofstream(path) << "age_bracket,sex,region,education,n_conservative,n_moderate,n_progressive\n"
                            << "30-34,male,capital,university,-1,4,3\n"
                            << "*,*,*,*,100,100,100\n";
        CHECK_THROWS_AS(ConditionalCountTable::load(path), ValidationError);
    }
    SUBCASE("partial wildcard is rejected") {
        std::ofstream(path) << "age_bracket,sex,region,education,n_conservative,n_moderate,n_progressive\n"
                            << "*,male,capital,*,1,4,3\n"
                            << "*,*,*,*,100,100,100\n";
        CHECK_THROWS_AS(ConditionalCountTable::load(path), ParseError);
    }
}

TEST_CASE("turnout table validation and round trip") {
    TempDir dir("turnout");
    const auto path = dir.path() / "turnout.csv";
    TurnoutTable t;
    for (int b = 0; b < kAgeBracketCount; ++b) t.rate[b] = 0.4 + 0.03 * b;
    t.save(path);
    CHECK(TurnoutTable::load(path) == t);

    SUBCASE("missing bracket") {
        std::ofstream(path) << "age_bracket,rate\n18-19,0.5\n";
        CHECK_THROWS_AS(TurnoutTable::load(path), ValidationError);
    }
    SUBCASE("rate out of range") {
        t.rate[3] = 1.2;
        CHECK_THROWS_AS(t.validate(), ValidationError);
    }
}

TEST_CASE("actual result validation") {
    ActualResult a;
    a.election_id = "t";
    a.national = {{"A", 55.0}, {"B", 44.6}};
    a.minor_residual = 0.4;
    a.winner = "A";
    CHECK_NOTHROW(a.validate());

    SUBCASE("winner must be the argmax") {
        a.winner = "B";
        CHECK_THROWS_AS(a.validate(), ValidationError);
    }
    SUBCASE("shares plus residual must reach 100 within 0.5") {
        a.national = {{"A", 50.0}, {"B", 40.0}};
        a.minor_residual = 0.0;
        CHECK_THROWS_AS(a.validate(), ValidationError);
    }
    SUBCASE("round trip") {
        TempDir dir("actual");
        const auto path = dir.path() / "actual.json";
        a.candidates = {{"A", "p1", Orientation::conservative, true, false, ""},
                        {"B", "p2", Orientation::progressive, false, false, ""}};
        a.per_sido[Sido::seoul] = {{"A", 51.0}, {"B", 48.0}};
        a.save(path);
        CHECK(ActualResult::load(path) == a);
    }
}

TEST_CASE("csv parser handles quoted fields") {
    const CsvTable t = parse_csv("a,b\n\"x,\"\"y\"\",\nz\",2\n", "test");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][0] == "x,\"y\",\nz");
    CHECK(t.rows[0][1] == "2");
    const std::string round = csv_to_string(t);
    const CsvTable again = parse_csv(round, "round");
    CHECK(again.rows == t.rows);
}

TEST_CASE("fixture generation into an unwritable path is an I/O error") {
    TempDir dir("fixio");
    const auto blocker = dir.path() / "blocker";
    std::ofstream(blocker) << "a plain file";
    CHECK_THROWS_AS(generate_fixture_corpus(1, FixtureScale::small, blocker / "nested"),
                    IoError);
}
