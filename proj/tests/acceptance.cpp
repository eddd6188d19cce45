// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "psephos/beliefs.hpp"
#include "psephos/calibration.hpp"
#include "psephos/corpus.hpp"
#include "psephos/decision.hpp"
#include "psephos/diagnostics.hpp"
#include "psephos/fixture.hpp"
#include "psephos/metrics.hpp"
#include "psephos/oslr.hpp"
#include "psephos/population.hpp"
#include "psephos/rng.hpp"
#include "psephos/scenario.hpp"

namespace fs = std::filesystem;
using namespace psephos;
using nlohmann::json;

namespace {

class CheckFailure : public std::runtime_error {
public:
    explicit CheckFailure(const std::string& msg) : std::runtime_error(msg) {}
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw CheckFailure(msg);
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

fs::path scratch_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("psephos_acceptance_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ShareTable share_table(const std::vector<std::pair<std::string, double>>& shares) {
    ShareTable t;
    for (const auto& [name, share] : shares) {
        ShareEntry e;
        e.name = name;
        e.share = share;
        t.entries.push_back(e);
    }
    t.n_voting = 1;
    return t;
}

ActualResult actual_result(const std::vector<std::pair<std::string, double>>& shares,
                           double residual) {
    ActualResult a;
    a.election_id = "acceptance";
    a.national = shares;
    a.minor_residual = residual;
    double best = -1.0;
    for (const auto& [n, s] : shares) {
        if (s > best) {
            best = s;
            a.winner = n;
        }
    }
    a.validate();
    return a;
}

std::vector<AgentRecord> calibrated_mix(int n) {
    std::vector<AgentRecord> agents;
    for (int i = 0; i < n; ++i) {
        Orientation o = Orientation::moderate;
        if (i % 100 < 26) o = Orientation::conservative;
        else if (i % 100 >= 74) o = Orientation::progressive;
        AgentRecord a;
        a.agent_id = i;
        a.stage = Stage::full;
        a.age_bracket = AgeBracket::a35_39;
        a.age = 36;
        a.sex = i % 2 ? Sex::female : Sex::male;
        a.sido = static_cast<Sido>(i % kSidoCount);
        a.education = Education::university;
        a.marital = Marital::married;
        a.occupation = "사무직";
        a.income_level = IncomeLevel::mid;
        a.housing = "아파트";
        a.religion = "무교";
        a.media_source = "포털뉴스";
        a.regional_identity_strength = IdentityStrength::mid;
        a.orientation = o;
        a.orientation_detail = plain_detail(o);
        a.beliefs = {0.5, 0.5, 0.5, 0.5, 0.5};
        agents.push_back(a);
    }
    return agents;
}

ElectionScenario duel_scenario() {
    ElectionScenario s;
    s.election_id = "acceptance-duel";
    s.election_type = ElectionType::presidential;
    Candidate prog;
    prog.name = "이재명";
    prog.party = "더불어민주당";
    prog.orientation = Orientation::progressive;
    prog.aliases = {"이재명"};
    Candidate cons;
    cons.name = "윤석열";
    cons.party = "국민의힘";
    cons.orientation = Orientation::conservative;
    cons.aliases = {"윤석열"};
    s.candidates = {prog, cons};
    s.context = "양자 대결 구도";
    return s;
}

const FeatureKey kConsFeature{Orientation::conservative, false, false, ""};
const FeatureKey kProgFeature{Orientation::progressive, false, false, ""};

TrainingCase synth_case(const std::string& election, const std::string& model, int n,
                        double mod_prog, std::uint64_t tweak) {
    TrainingCase c;
    c.election_id = election;
    c.model_id = model;
    c.features = {kConsFeature, kProgFeature};
    c.actual_shares = {50.0, 50.0};
    Rng rng = Rng::stream(9000 + tweak, {Rng::hash_str(election), Rng::hash_str(model)});
    for (int i = 0; i < n; ++i) {
        CaseAgent a;
        a.sido = static_cast<Sido>(i % kSidoCount);
        const int bucket = i % 100;
        if (bucket < 26) {
            a.orientation = Orientation::conservative;
            a.feature = 0;
        } else if (bucket < 74) {
            a.orientation = Orientation::moderate;
            a.feature = rng.uniform() < mod_prog ? 1 : 0;
        } else {
            a.orientation = Orientation::progressive;
            a.feature = 1;
        }
        if (i % 200 == 199) a.feature = -1;
        c.agents.push_back(a);
    }
    return c;
}

// Planted bias with a recoverable ground truth: certified shares are the
// simulation's own shares under a true conservative upweight, so elections
// with different moderate splits carry one shared signal.
TrainingCase truth_case(const std::string& election, const std::string& model, int n,
                        double mod_prog, double beta_cons, std::uint64_t tweak) {
    TrainingCase c = synth_case(election, model, n, mod_prog, tweak);
    OslrParams truth = OslrParams::zeros({model}, 0.0);
    truth.beta_mo[0][static_cast<int>(Orientation::conservative)] = beta_cons;
    c.actual_shares = case_feature_shares(truth, c);
    return c;
}

// --------------------------------------------------------------------------- criteria

void criterion_metric_oracle(std::ostream& out) {
    const ShareTable pred5 = share_table(
        {{"후보1", 71.3}, {"후보2", 27.4}, {"후보3", 0.9}, {"후보4", 0.5}, {"후보5", 0.02}});
    const ActualResult act5 = actual_result(
        {{"후보1", 41.1}, {"후보2", 24.0}, {"후보3", 21.4}, {"후보4", 6.8}, {"후보5", 6.2}}, 0.5);
    const EvalReport rep5 = evaluate(pred5, act5);
    require(std::abs(rep5.mae_pp - 13.3) <= 0.05,
            "five-way MAE " + fmt(rep5.mae_pp) + " not within 13.3 +/- 0.05");
    require(rep5.winner_correct, "five-way winner flag wrong");

    const ShareTable pred3 = share_table({{"후보1", 52.3}, {"후보2", 47.6}, {"후보3", 0.06}});
    const ActualResult act3 =
        actual_result({{"후보1", 48.6}, {"후보2", 47.8}, {"후보3", 2.4}}, 1.2);
    const EvalReport rep3 = evaluate(pred3, act3);
    require(std::abs(rep3.mae_pp - 2.1) <= 0.05,
            "three-way MAE " + fmt(rep3.mae_pp) + " not within 2.1 +/- 0.05");
    require(rep3.winner_correct, "three-way winner flag wrong");
    out << "MAE " << fmt(rep5.mae_pp) << " / " << fmt(rep3.mae_pp) << ", winners correct";
}

void criterion_ensemble_oracle(std::ostream& out) {
    const ShareTable a = share_table({{"이", 61.3}, {"김", 38.7}});
    const ShareTable b = share_table({{"이", 41.6}, {"김", 58.4}});
    const ShareTable mean = ensemble_mean({a, b});
    const double lee = mean.share_of("이");
    const double kim = mean.share_of("김");
    require(std::abs(lee - 51.5) <= 0.05 + 1e-9, "ensemble lee share " + fmt(lee));
    require(std::abs(kim - 48.6) <= 0.05 + 1e-9, "ensemble kim share " + fmt(kim));
    out << "ensemble mean (" << fmt(lee) << ", " << fmt(kim) << ")";
}

void criterion_calibration(std::ostream& out) {
    const auto dir = scratch_dir("calibration");
    generate_fixture_corpus(42, FixtureScale::small, dir);
    const auto census = CensusTable::load(dir / "census.csv");
    const auto aug = AugmentationSet::load_dir(dir);
    const auto table = ConditionalCountTable::load(dir / "conditional_counts.csv");
    const auto priors = BeliefPriors::load(dir / "belief_priors.csv");
    const RegionMap regions = RegionMap::load(dir / "region_map.csv");

    auto agents = sample_population(10000, census, 42);
    agents = augment_population(std::move(agents), aug, 42);
    agents = assign_orientations(std::move(agents), table, regions, 42);
    agents = sample_beliefs(std::move(agents), priors, 42);

    CalibrationConfig config;  // 26/48/26 at +/-2pp
    const auto [calibrated, report] = calibrate_population(agents, config, priors, regions, 42);
    require(report.ran, "pre-distribution unexpectedly within tolerance");
    for (int o = 0; o < kOrientationCount; ++o) {
        require(std::abs(report.post_pct[o] - config.target_pct[o]) <= 2.0,
                "post distribution off target for " +
                    std::string(to_token(static_cast<Orientation>(o))) + ": " +
                    fmt(report.post_pct[o]));
    }

    std::array<std::array<int, kOrientationCount>, kRegionCount> counts{};
    for (const auto& a : calibrated)
        counts[static_cast<int>(regions.region_of(a.sido))][static_cast<int>(a.orientation)]++;
    const auto& cons = counts[static_cast<int>(kFixtureConservativeRegion)];
    const auto& prog = counts[static_cast<int>(kFixtureProgressiveRegion)];
    require(cons[0] > cons[2], "conservative-planted region lost its lean");
    require(prog[2] > prog[0], "progressive-planted region lost its lean");

    const auto [again, report2] = calibrate_population(calibrated, config, priors, regions, 42);
    require(!report2.ran, "recalibration was not a no-op");
    require(again == calibrated, "recalibration changed agents");
    out << "pre (" << fmt(report.pre_pct[0]) << "/" << fmt(report.pre_pct[1]) << "/"
        << fmt(report.pre_pct[2]) << ") -> post (" << fmt(report.post_pct[0]) << "/"
        << fmt(report.post_pct[1]) << "/" << fmt(report.post_pct[2]) << "), idempotent";
}

void criterion_census_fidelity(std::ostream& out) {
    const auto dir = scratch_dir("census");
    generate_fixture_corpus(42, FixtureScale::full, dir);
    const auto census = CensusTable::load(dir / "census.csv");
    require(census.nonempty_cell_count() == 5790,
            "full fixture cell count " + std::to_string(census.nonempty_cell_count()));
    double worst = 0.0;
    for (const std::uint64_t seed : {1ULL, 2ULL, 42ULL}) {
        const auto agents = sample_population(5000, census, seed);
        const MarginalReport report = validate_marginals(agents, census, 1.5);
        for (const auto& d : report.dimensions) {
            worst = std::max(worst, d.max_abs_dev_pp);
            require(d.max_abs_dev_pp <= 1.5, "seed " + std::to_string(seed) + " dimension " +
                                                 d.name + " deviates " + fmt(d.max_abs_dev_pp) +
                                                 "pp");
        }
        require(report.pass, "marginal report failed for seed " + std::to_string(seed));
    }
    out << "worst deviation " << fmt(worst) << "pp across seeds {1, 2, 42}";
}

void criterion_bootstrap(std::ostream& out) {
    auto records = [](int a, int b) {
        std::vector<VoteRecord> r(a + b);
        for (int i = 0; i < a + b; ++i) {
            r[i].agent_id = i;
            r[i].vote = i < a ? "갑" : "을";
        }
        return r;
    };
    const double analytic = 2.0 * 1.959963985 * std::sqrt(0.6 * 0.4 / 1000.0) * 100.0;
    const ShareTable t1000 = bootstrap_ci(records(600, 400), 1000, 95.0, 42);
    const double w1000 = t1000.entries[0].ci->second - t1000.entries[0].ci->first;
    require(std::abs(w1000 - analytic) / analytic <= 0.25,
            "width " + fmt(w1000) + " vs analytic " + fmt(analytic));

    const ShareTable t4000 = bootstrap_ci(records(2400, 1600), 1000, 95.0, 42);
    const double w4000 = t4000.entries[0].ci->second - t4000.entries[0].ci->first;
    const double ratio = w1000 / w4000;
    require(std::abs(ratio - 2.0) <= 0.3, "width ratio " + fmt(ratio) + " not 2.0 +/- 0.3");
    out << "width " << fmt(w1000) << " (analytic " << fmt(analytic) << "), ratio " << fmt(ratio);
}

void criterion_oslr_recovery(std::ostream& out) {
    const std::vector<TrainingCase> cases = {truth_case("e1", "m1", 2000, 0.40, 0.45, 0),
                                             truth_case("e2", "m1", 2000, 0.50, 0.45, 1),
                                             truth_case("e3", "m1", 2000, 0.60, 0.45, 2)};
    const OslrParams zeros = OslrParams::zeros({"m1"}, 0.01);
    const auto w = agent_weights(zeros, cases[0]);
    for (double x : w)
        require(std::abs(x - 1.0) <= 1e-9, "zero-parameter weight " + fmt(x) + " not uniform");

    const double before = training_mae(zeros, cases);
    const OslrParams fitted = fit(cases, 0.01);
    const double after = training_mae(fitted, cases);
    require(after <= 0.5 * before,
            "training MAE " + fmt(before) + " -> " + fmt(after) + " is not a 50% cut");

    double prev = 1e18;
    for (const double lambda : default_lambda_grid()) {
        const double edof = effective_dof(fitted, cases, lambda);
        require(edof <= prev + 1e-9, "edof not monotone at lambda " + fmt(lambda));
        prev = edof;
    }
    const double edof_huge = effective_dof(fitted, cases, 1e6);
    require(edof_huge < 0.01, "edof at lambda 1e6 is " + fmt(edof_huge));
    out << "training MAE " << fmt(before) << " -> " << fmt(after) << ", edof(1e6) "
        << fmt(edof_huge);
}

void criterion_permutation(std::ostream& out) {
    const std::vector<TrainingCase> train = {truth_case("e1", "m1", 800, 0.35, 0.45, 0),
                                             truth_case("e2", "m1", 800, 0.50, 0.45, 1),
                                             truth_case("e3", "m1", 800, 0.65, 0.45, 2),
                                             truth_case("e4", "m1", 800, 0.45, 0.45, 3)};
    const std::vector<TrainingCase> held = {truth_case("eh", "m1", 800, 0.55, 0.45, 4)};
    const PermutationReport report = permutation_test(train, held, 0.01, 100, 42);
    require(report.n_perms == 100, "permutation count wrong");
    require(report.null_sd.has_value(), "null sd missing");
    require(report.percentile <= 10.0, "real percentile " + fmt(report.percentile) + " > 10");
    const std::string j = report.to_json_string();
    for (const char* field : {"real_mae_pp", "null_mean", "null_sd", "percentile"})
        require(j.find(field) != std::string::npos, std::string("report lacks ") + field);
    out << "real MAE " << fmt(report.real_mae_pp) << " at percentile " << fmt(report.percentile)
        << " (null " << fmt(report.null_mean) << " +/- " << fmt(*report.null_sd) << ")";
}

void criterion_determinism(std::ostream& out) {
    const auto root = scratch_dir("determinism");
    auto pipeline = [&](const std::string& name, int parallelism) {
        const fs::path dir = root / name;
        const std::string base =
            std::string(PSEPHOS_CLI_BIN) + " --out-dir '" + dir.string() + "' --seed 42 ";
        auto run = [&](const std::string& args) {
            const int status = std::system((base + args + " >/dev/null 2>&1").c_str());
            require(WEXITSTATUS(status) == 0, "stage failed: " + args);
        };
        run("fixture --scale small");
        run("synth --agents 5000");
        run("seed-beliefs");
        run("calibrate");
        run("simulate --mock --model-id mock-a --parallelism " + std::to_string(parallelism) +
            " --scenario '" + (dir / "fixture/scenario_presidential.json").string() + "'");
        run("evaluate --model-id mock-a --actual '" +
            (dir / "fixture/actual_presidential.json").string() + "'");
        return dir;
    };
    const auto a = pipeline("a", 1);
    const auto b = pipeline("b", 8);
    const auto c = pipeline("c", 1);

    const std::vector<std::string> artifacts = {
        "manifest.json",     "agents_tabular.jsonl", "agents_full.jsonl",
        "agents_calibrated.jsonl", "marginal_report.json", "calibration_report.json",
        "votes_fx_2031_pres_mock_a.jsonl", "shares.json", "eval_report.json",
        "plot_data.csv"};
    for (const auto& artifact : artifacts) {
        const std::string bytes = slurp(a / artifact);
        require(!bytes.empty(), "artifact missing: " + artifact);
        require(bytes == slurp(b / artifact), artifact + " differs across parallelism 1 vs 8");
        require(bytes == slurp(c / artifact), artifact + " differs across identical runs");
    }
    out << artifacts.size() << " artifacts byte-identical across runs and parallelism {1, 8}";
}

void criterion_decision_safety(std::ostream& out) {
    ElectionScenario scenario = duel_scenario();
    Candidate third;
    third.name = "박도윤";
    third.party = "가온당";
    third.orientation = Orientation::moderate;
    third.third_party = true;
    third.aliases = {"박도윤"};
    scenario.candidates.push_back(third);

    const auto agents = calibrated_mix(10000);
    BackendConfig config;
    config.mock.force_unparseable = {11, 222, 3333};
    config.request_parallelism = 4;
    const auto records = run_simulation(agents, scenario, config, 42);
    require(records.size() == agents.size(), "record count mismatch");

    int abstain = 0;
    for (const auto& r : records) {
        if (r.vote == kAbstainVote) {
            ++abstain;
            require(r.match_method == MatchMethod::abstained, "abstain without abstained method");
            continue;
        }
        require(r.vote == "이재명" || r.vote == "윤석열" || r.vote == "박도윤",
                "off-slate vote: " + r.vote);
        require(r.confidence >= 0.0 && r.confidence <= 1.0, "confidence out of range");
    }
    for (const std::int64_t forced : {11, 222, 3333}) {
        require(records[forced].vote == kAbstainVote, "forced-unparseable agent did not abstain");
        require(!records[forced].raw_response.empty(), "retry trail missing raw response");
    }

    // Malformed-response fuzz corpus through the parser.
    std::vector<const Candidate*> slate;
    for (const auto& c : scenario.candidates) slate.push_back(&c);
    const std::vector<std::string> corpus = {
        "", "{}", "[]", "null", "{\"vote\":null}", "{\"vote\":[1,2]}", "{\"vote\":{}}",
        "{\"vote\":\"이재명\",\"confidence\":\"NaN\"}", std::string(20000, '{'),
        std::string(1000, 'x') + "{\"vote\":\"박도윤\"}{\"vote\":\"이재명\"}",
        "{\"reasoning\":\"긴 글\",\"vote\":\"김영삼\",\"confidence\":0.9}",
        "\xf0\x9f\x97\xb3 {\"vote\": \"기권\"}"};
    for (const auto& raw : corpus) {
        const ParsedVote v = parse_vote_response(raw, slate);
        if (v.status == ParsedVote::Status::matched)
            require(scenario.find(v.vote) != nullptr, "fuzz produced off-slate vote");
    }
    out << "10000 decisions on-slate (abstain " << abstain
        << "), retry-then-abstain and fuzz corpus covered";
}

void criterion_diagnostics(std::ostream& out) {
    ElectionScenario scenario = duel_scenario();
    Candidate third;
    third.name = "박도윤";
    third.party = "가온당";
    third.orientation = Orientation::moderate;
    third.third_party = true;
    third.aliases = {"박도윤"};
    scenario.candidates.push_back(third);

    // Hand fixture: 10 records, 3 mention the third candidate, 2 of those
    // vote for him.
    std::vector<VoteRecord> hand;
    auto rec = [&](int id, const std::string& vote, const std::string& reasoning) {
        VoteRecord r;
        r.agent_id = id;
        r.election_id = scenario.election_id;
        r.model_id = "m";
        r.vote = vote;
        r.reasoning = reasoning;
        hand.push_back(r);
    };
    rec(0, "박도윤", "박도윤 공약이 제일 낫다");
    rec(1, "박도윤", "박도윤에게 기대를 건다");
    rec(2, "이재명", "박도윤도 고려했지만 사표 우려");
    for (int i = 3; i < 10; ++i) rec(i, i % 2 ? "이재명" : "윤석열", "별다른 고민 없음");

    const MentionReport report = mention_report(hand, scenario);
    const MentionEntry* e = report.find("박도윤", "m");
    require(e != nullptr, "mention entry missing");
    require(e->n_nonabstain == 10 && e->n_mention == 3 && e->n_vote_and_mention == 2,
            "hand counts off: " + std::to_string(e->n_mention) + "/" +
                std::to_string(e->n_vote_and_mention));
    require(std::abs(e->mention_rate_pct - 30.0) < 1e-12, "Ment not exactly 30");
    require(std::abs(*e->vote_given_mention_pct - 200.0 / 3.0) < 1e-12, "V|M not exactly 66.7");

    // Four synthetic model runs feeding the stratified export.
    const auto agents = calibrated_mix(1200);
    std::vector<VoteRecord> all;
    for (const std::string model : {"m1", "m2", "m3", "m4"}) {
        BackendConfig config;
        config.model_id = model;
        auto records = run_simulation(agents, scenario, config, 42);
        all.insert(all.end(), records.begin(), records.end());
    }
    const auto dir = scratch_dir("audit");
    std::vector<std::string> warnings;
    const std::size_t rows =
        export_audit_sample(all, scenario.candidates[2], dir / "audit.csv", 42, 25, 25, &warnings);
    require(rows == 200, "audit rows " + std::to_string(rows) + " != 200");
    require(warnings.empty(), "audit strata came up short");
    export_audit_sample(all, scenario.candidates[2], dir / "audit2.csv", 42, 25, 25, nullptr);
    require(slurp(dir / "audit.csv") == slurp(dir / "audit2.csv"), "audit export not deterministic");
    out << "Ment 30 / V|M 66.7 exact; 200-row deterministic stratified export";
}

void criterion_mock_behavior(std::ostream& out) {
    const auto agents = calibrated_mix(10000);
    ElectionScenario scenario = duel_scenario();

    auto mod_prog = [&](PromptVariant variant) {
        scenario.prompt_variant = variant;
        BackendConfig config;
        config.request_parallelism = 4;
        const auto records = run_simulation(agents, scenario, config, 42);
        int mod_total = 0;
        int prog_votes = 0;
        for (const auto& r : records) {
            if (r.vote == kAbstainVote) continue;
            if (agents[r.agent_id].orientation != Orientation::moderate) continue;
            ++mod_total;
            prog_votes += r.vote == "이재명" ? 1 : 0;
        }
        return 100.0 * prog_votes / mod_total;
    };
    const double full = mod_prog(PromptVariant::full);
    require(std::abs(full - 50.0) <= 3.0, "full-prompt Mod->Prog " + fmt(full) + " not 50 +/- 3");
    const double vanilla = mod_prog(PromptVariant::vanilla);
    require(vanilla >= 80.0, "vanilla-regime Mod->Prog " + fmt(vanilla) + " below 80");
    out << "Mod->Prog " << fmt(full) << "% (full) vs " << fmt(vanilla) << "% (vanilla regime)";
}

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<void(std::ostream&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "metric oracle (five-way 13.3, three-way 2.1, winners)", 1.0, criterion_metric_oracle},
        {2, "ensemble mean oracle (51.5 / 48.6)", 1.0, criterion_ensemble_oracle},
        {3, "calibration contract (34/33/33 -> 26/48/26, regions, idempotent)", 10.0,
         criterion_calibration},
        {4, "census fidelity (1.5pp marginals, seeds 1/2/42)", 10.0, criterion_census_fidelity},
        {5, "bootstrap law (binomial width, sqrt-N ratio)", 30.0, criterion_bootstrap},
        {6, "adapter recovery (50% MAE cut, uniform zero weights, edof)", 60.0,
         criterion_oslr_recovery},
        {7, "permutation harness (planted signal percentile <= 10)", 300.0, criterion_permutation},
        {8, "end-to-end determinism (seed 42, parallelism 1 vs 8)", 120.0, criterion_determinism},
        {9, "decision safety (on-slate votes, retries, fuzz)", 60.0, criterion_decision_safety},
        {10, "diagnostics oracle (Ment/V|M hand counts, 200-row export)", 60.0,
         criterion_diagnostics},
        {11, "mock behavioral contract (Mod->Prog 50 vs >= 80)", 60.0, criterion_mock_behavior},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::ostringstream detail;
        std::string error;
        try {
            criterion.run(detail);
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (error.empty() && elapsed > criterion.budget_seconds) {
            error = "exceeded runtime budget of " + fmt(criterion.budget_seconds) + "s (" +
                    fmt(elapsed) + "s)";
        }
        if (error.empty()) {
            std::cout << "PASS criterion " << criterion.id << ": " << criterion.name << " -- "
                      << detail.str() << " [" << fmt(elapsed) << "s]\n";
        } else {
            ++failures;
            std::cout << "FAIL criterion " << criterion.id << ": " << criterion.name << " -- "
                      << error << " [" << fmt(elapsed) << "s]\n";
        }
    }
    if (failures > 0) {
        std::cout << failures << " of " << criteria.size() << " criteria failed\n";
        return 1;
    }
    std::cout << "all " << criteria.size() << " criteria passed\n";
    return 0;
}
