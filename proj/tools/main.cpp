#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "psephos/beliefs.hpp"
#include "psephos/calibration.hpp"
#include "psephos/corpus.hpp"
#include "psephos/decision.hpp"
#include "psephos/diagnostics.hpp"
#include "psephos/fixture.hpp"
#include "psephos/manifest.hpp"
#include "psephos/metrics.hpp"
#include "psephos/oslr.hpp"
#include "psephos/population.hpp"
#include "psephos/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psephos;

namespace {

// Exit codes: 0 success, 2 validation/schema, 3 missing upstream artifact,
// 4 I/O or runtime failure.
constexpr int kExitValidation = 2;
constexpr int kExitDependency = 3;
constexpr int kExitRuntime = 4;

struct Ctx {
    fs::path out_dir;
    std::uint64_t seed = 42;

    fs::path manifest_path() const { return out_dir / "manifest.json"; }

    RunManifest open_manifest() const {
        return RunManifest::load_or_create(manifest_path(), seed);
    }

    fs::path resolve(const std::string& rel) const { return out_dir / rel; }

    // Artifact paths are stored relative to out_dir when possible.
    std::string relativize(const fs::path& p) const {
        std::error_code ec;
        const fs::path rel = fs::relative(p, out_dir, ec);
        if (ec || rel.empty() || rel.native().starts_with("..")) return p.string();
        return rel.string();
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

std::string sanitize_filename(const std::string& s) {
    std::string out;
    for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return out;
}

std::array<double, 3> parse_target(const std::string& s) {
    std::array<double, 3> target{};
    std::stringstream ss(s);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ',') && i < 3) target[i++] = std::stod(item);
    if (i != 3) throw ValidationError("--target needs three comma-separated percents, got '" + s + "'");
    return target;
}

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> grid;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));
    if (grid.empty()) throw ValidationError("--lambda-grid is empty");
    return grid;
}

// ---------------------------------------------------------------------------

void cmd_fixture(const Ctx& ctx, const std::string& scale_tok) {
    const FixtureScale scale = scale_tok == "full" ? FixtureScale::full : FixtureScale::small;
    if (scale_tok != "full" && scale_tok != "small")
        throw ValidationError("--scale must be small or full, got '" + scale_tok + "'");
    fs::create_directories(ctx.out_dir);
    const fs::path dir = ctx.out_dir / "fixture";
    generate_fixture_corpus(ctx.seed, scale, dir);

    RunManifest m = ctx.open_manifest();
    m.config["fixture"] = {{"scale", scale_tok}};
    auto art = [&](const std::string& name, const fs::path& p) {
        m.artifacts[name] = ctx.relativize(p);
    };
    art("census", dir / "census.csv");
    art("conditional_counts", dir / "conditional_counts.csv");
    art("region_map", dir / "region_map.csv");
    art("turnout", dir / "turnout.csv");
    art("belief_priors", dir / "belief_priors.csv");
    art("augmentation_dir", dir);
    art("scenario_presidential", dir / "scenario_presidential.json");
    art("scenario_presidential_b", dir / "scenario_presidential_b.json");
    art("scenario_local", dir / "scenario_local.json");
    art("actual_presidential", dir / "actual_presidential.json");
    art("actual_presidential_b", dir / "actual_presidential_b.json");
    art("actual_local", dir / "actual_local.json");
    m.save(ctx.manifest_path());
    std::cout << "fixture corpus written to " << dir.string() << "\n";
}

void cmd_synth(const Ctx& ctx, int n_agents, std::string census_path) {
    RunManifest m = ctx.open_manifest();
    if (census_path.empty()) census_path = ctx.resolve(m.artifact("census", "fixture")).string();
    const CensusTable census = CensusTable::load(census_path);
    const fs::path aug_dir = ctx.resolve(m.artifact("augmentation_dir", "fixture"));
    const AugmentationSet augmentation = AugmentationSet::load_dir(aug_dir);

    auto agents = sample_population(n_agents, census, ctx.seed);
    agents = augment_population(std::move(agents), augmentation, ctx.seed);
    const MarginalReport report = validate_marginals(agents, census);

    const fs::path agents_path = ctx.out_dir / "agents_tabular.jsonl";
    write_agents(agents_path, agents);
    const fs::path report_path = ctx.out_dir / "marginal_report.json";
    write_text(report_path, report.to_json_string());

    m.config["synth"] = {{"agents", n_agents}};
    m.artifacts["agents_tabular"] = ctx.relativize(agents_path);
    m.artifacts["marginal_report"] = ctx.relativize(report_path);
    m.save(ctx.manifest_path());
    std::cout << "synthesized " << agents.size() << " agents; marginal check "
              << (report.pass ? "pass" : "FAIL") << "\n";
}

void cmd_seed_beliefs(const Ctx& ctx, int min_cell) {
    RunManifest m = ctx.open_manifest();
    auto agents = read_agents(ctx.resolve(m.artifact("agents_tabular", "synth")));
    const auto table =
        ConditionalCountTable::load(ctx.resolve(m.artifact("conditional_counts", "fixture")));
    const auto regions = RegionMap::load(ctx.resolve(m.artifact("region_map", "fixture")));
    const auto priors = BeliefPriors::load(ctx.resolve(m.artifact("belief_priors", "fixture")));

    agents = assign_orientations(std::move(agents), table, regions, ctx.seed, min_cell);
    agents = sample_beliefs(std::move(agents), priors, ctx.seed);

    const fs::path path = ctx.out_dir / "agents_full.jsonl";
    write_agents(path, agents);
    m.config["seed_beliefs"] = {{"min_cell", min_cell}};
    m.artifacts["agents_full"] = ctx.relativize(path);
    m.save(ctx.manifest_path());
    std::cout << "seeded orientations and beliefs for " << agents.size() << " agents\n";
}

void cmd_calibrate(const Ctx& ctx, const std::string& target_tok, double tolerance,
                   bool strict_regional) {
    RunManifest m = ctx.open_manifest();
    auto agents = read_agents(ctx.resolve(m.artifact("agents_full", "seed-beliefs")));
    const auto priors = BeliefPriors::load(ctx.resolve(m.artifact("belief_priors", "fixture")));
    const auto regions = RegionMap::load(ctx.resolve(m.artifact("region_map", "fixture")));

    CalibrationConfig config;
    config.target_pct = parse_target(target_tok);
    config.tolerance_pp = tolerance;
    config.strict_regional = strict_regional;
    auto [calibrated, report] = calibrate_population(std::move(agents), config, priors, regions, ctx.seed);

    const fs::path agents_path = ctx.out_dir / "agents_calibrated.jsonl";
    write_agents(agents_path, calibrated);
    const fs::path report_path = ctx.out_dir / "calibration_report.json";
    write_text(report_path, report.to_json_string());

    m.config["calibrate"] = {{"target", target_tok}, {"tolerance_pp", tolerance}};
    m.artifacts["agents_calibrated"] = ctx.relativize(agents_path);
    m.artifacts["calibration_report"] = ctx.relativize(report_path);
    m.save(ctx.manifest_path());
    std::cout << "calibration " << (report.ran ? "reassigned " + std::to_string(report.n_reassigned) +
                                                     " agents"
                                               : "was a no-op (within tolerance)")
              << "; regional check " << (report.regional_pass ? "pass" : "FAIL") << "\n";
}

void cmd_simulate(const Ctx& ctx, std::string scenario_path, const BackendConfig& backend,
                  const std::string& variant_override) {
    RunManifest m = ctx.open_manifest();
    const auto agents = read_agents(ctx.resolve(m.artifact("agents_calibrated", "calibrate")));
    if (scenario_path.empty())
        scenario_path = ctx.resolve(m.artifact("scenario", "simulate --scenario")).string();
    ElectionScenario scenario = ElectionScenario::load(scenario_path);
    if (!variant_override.empty()) scenario.prompt_variant = parse_prompt_variant(variant_override);

    // Votes are keyed by (election, model) so multi-election studies with the
    // same model never clobber each other.
    const fs::path votes_path =
        ctx.out_dir / ("votes_" + sanitize_filename(scenario.election_id) + "_" +
                       sanitize_filename(backend.model_id) + ".jsonl");
    const std::size_t computed = simulate_to_file(agents, scenario, backend, ctx.seed, votes_path);

    m.config["simulate"] = {{"model_id", backend.model_id},
                            {"endpoint", backend.endpoint == "MOCK" ? "MOCK" : backend.endpoint},
                            {"variant", std::string(to_token(scenario.prompt_variant))},
                            {"temperature", backend.temperature},
                            {"max_tokens", backend.max_tokens},
                            {"max_retries", backend.max_retries}};
    m.artifacts["scenario"] = ctx.relativize(scenario_path);
    m.artifacts["votes." + scenario.election_id + "." + backend.model_id] =
        ctx.relativize(votes_path);
    m.save(ctx.manifest_path());
    std::cout << "simulated " << computed << " new decisions into " << votes_path.string() << "\n";
}

void cmd_evaluate(const Ctx& ctx, const std::string& model_id, std::string actual_path,
                  int resamples, double level, std::string turnout_path) {
    RunManifest m = ctx.open_manifest();
    const ElectionScenario scenario =
        ElectionScenario::load(ctx.resolve(m.artifact("scenario", "simulate")));
    const auto votes_rel = m.artifact("votes." + scenario.election_id + "." + model_id,
                                      "simulate --model-id " + model_id);
    const auto records = read_votes(ctx.resolve(votes_rel));
    const auto agents = read_agents(ctx.resolve(m.artifact("agents_calibrated", "calibrate")));
    if (actual_path.empty()) actual_path = ctx.resolve(m.artifact("actual", "evaluate --actual")).string();
    const ActualResult actual = ActualResult::load(actual_path);

    // Parallel (local) races are certified at party level; project votes onto
    // parties before aggregating.
    const bool party_level = scenario.election_type != ElectionType::presidential;
    std::vector<VoteRecord> projected = records;
    std::vector<std::string> order;
    if (party_level) {
        for (auto& r : projected)
            if (r.vote != kAbstainVote) r.vote = scenario.candidate(r.vote).party;
        order = party_order(scenario);
    } else {
        order = candidate_order(scenario);
    }

    const ShareTable shares = bootstrap_ci(projected, resamples, level, ctx.seed, order);
    const auto per_sido = sido_share_tables(projected, agents, order);
    const EvalReport report = evaluate(shares, actual, per_sido);

    const fs::path shares_path = ctx.out_dir / "shares.json";
    write_text(shares_path, shares.to_json_string());
    const fs::path report_path = ctx.out_dir / "eval_report.json";
    write_text(report_path, report.to_json_string());
    const fs::path plot_path = ctx.out_dir / "plot_data.csv";
    write_plot_data(plot_path, shares, actual);

    m.config["evaluate"] = {{"model_id", model_id}, {"resamples", resamples}, {"level", level}};
    m.artifacts["actual"] = ctx.relativize(actual_path);
    m.artifacts["shares"] = ctx.relativize(shares_path);
    m.artifacts["eval_report"] = ctx.relativize(report_path);
    m.artifacts["plot_data"] = ctx.relativize(plot_path);

    if (!turnout_path.empty()) {
        const TurnoutTable turnout = TurnoutTable::load(turnout_path);
        const ShareTable reweighted = turnout_reweight(projected, agents, turnout, order);
        const fs::path rw_path = ctx.out_dir / "shares_turnout_weighted.json";
        write_text(rw_path, reweighted.to_json_string());
        m.artifacts["shares_turnout_weighted"] = ctx.relativize(rw_path);
    }
    m.save(ctx.manifest_path());
    std::cout << "MAE " << format_double(report.mae_pp, 2) << "pp, winner "
              << (report.winner_correct ? "correct" : "wrong") << ", W_sim "
              << format_double(report.wasserstein_sim, 3);
    if (report.sido_hit_rate)
        std::cout << ", sido hit " << format_double(*report.sido_hit_rate * 100.0, 1) << "%";
    std::cout << "\n";
}

void cmd_diagnose(const Ctx& ctx, std::vector<std::string> vote_paths,
                  std::string audit_candidate, std::vector<std::string> lineage) {
    RunManifest m = ctx.open_manifest();
    const ElectionScenario scenario =
        ElectionScenario::load(ctx.resolve(m.artifact("scenario", "simulate")));
    const auto agents = read_agents(ctx.resolve(m.artifact("agents_calibrated", "calibrate")));

    if (vote_paths.empty()) {
        const std::string prefix = "votes." + scenario.election_id + ".";
        for (const auto& [name, rel] : m.artifacts) {
            if (name.rfind(prefix, 0) == 0) vote_paths.push_back(ctx.resolve(rel).string());
        }
        if (vote_paths.empty())
            throw DependencyError("no votes artifacts for election " + scenario.election_id +
                                  " in the manifest; run simulate first");
    }
    std::vector<VoteRecord> records;
    for (const auto& p : vote_paths) {
        auto batch = read_votes(p);
        records.insert(records.end(), batch.begin(), batch.end());
    }

    const MentionReport mentions = mention_report(records, scenario);
    write_text(ctx.out_dir / "mention_report.json", mentions.to_json_string());

    if (lineage.empty()) {
        for (const auto& c : scenario.candidates)
            if (c.orientation == Orientation::progressive) lineage.push_back(c.name);
    }
    const auto consistency = orientation_vote_consistency(records, agents, lineage);
    json cj;
    cj["schema_version"] = 1;
    cj["lineage"] = lineage;
    for (int o = 0; o < kOrientationCount; ++o) {
        const auto key = std::string(to_token(static_cast<Orientation>(o)));
        cj["by_orientation"][key] = {{"n_voting", consistency[o].n_voting},
                                     {"n_lineage", consistency[o].n_lineage}};
        if (consistency[o].lineage_pct)
            cj["by_orientation"][key]["lineage_pct"] = *consistency[o].lineage_pct;
    }
    write_text(ctx.out_dir / "consistency.json", cj.dump(2) + "\n");

    if (audit_candidate.empty()) {
        for (const auto& c : scenario.candidates)
            if (c.third_party) audit_candidate = c.name;
        if (audit_candidate.empty()) audit_candidate = scenario.candidates.back().name;
    }
    std::vector<std::string> warnings;
    const fs::path audit_path = ctx.out_dir / "audit_sample.csv";
    const std::size_t rows = export_audit_sample(records, scenario.candidate(audit_candidate),
                                                 audit_path, ctx.seed, 25, 25, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

    m.config["diagnose"] = {{"audit_candidate", audit_candidate}, {"lineage", lineage}};
    m.artifacts["mention_report"] = ctx.relativize(ctx.out_dir / "mention_report.json");
    m.artifacts["consistency"] = ctx.relativize(ctx.out_dir / "consistency.json");
    m.artifacts["audit_sample"] = ctx.relativize(audit_path);
    m.save(ctx.manifest_path());
    std::cout << "diagnostics written (" << rows << " audit rows)\n";
}

std::vector<TrainingCase> load_cases(const fs::path& cases_path) {
    std::ifstream in(cases_path, std::ios::binary);
    if (!in) throw IoError("cannot open cases file: " + cases_path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(cases_path.string() + ": " + e.what());
    }
    if (j.value("schema_version", 0) != 1)
        throw ValidationError(cases_path.string() + ": unsupported cases schema");
    const fs::path base = cases_path.parent_path();
    std::vector<TrainingCase> cases;
    for (const auto& entry : j.at("cases")) {
        const auto rel = [&](const std::string& key) {
            return base / entry.at(key).get<std::string>();
        };
        const auto scenario = ElectionScenario::load(rel("scenario"));
        const auto agents = read_agents(rel("agents"));
        const auto records = read_votes(rel("votes"));
        const auto actual = ActualResult::load(rel("actual"));
        cases.push_back(make_training_case(records, agents, scenario, actual));
    }
    if (cases.empty()) throw ValidationError(cases_path.string() + ": no cases");
    return cases;
}

void cmd_oslr_fit(const Ctx& ctx, const std::string& cases_path, double lambda,
                  bool per_model) {
    const auto cases = load_cases(cases_path);
    RunManifest m = ctx.open_manifest();

    FitDiagnostics diag;
    const OslrParams params = fit(cases, lambda, {}, &diag);
    const OslrParams zeros = OslrParams::zeros(params.model_ids, lambda);

    const fs::path params_path = ctx.out_dir / "oslr_params.json";
    params.save(params_path);

    if (per_model) {
        for (const auto& [model, model_params] : fit_per_model(cases, lambda)) {
            const fs::path p = ctx.out_dir / ("oslr_params_" + sanitize_filename(model) + ".json");
            model_params.save(p);
            m.artifacts["oslr_params." + model] = ctx.relativize(p);
        }
    }

    json report;
    report["schema_version"] = 1;
    report["lambda"] = lambda;
    report["iterations"] = diag.iterations;
    report["objective_at_zero"] = diag.objective_at_zero;
    report["objective"] = diag.objective;
    report["training_mae_unweighted"] = training_mae(zeros, cases);
    report["training_mae_fitted"] = training_mae(params, cases);
    report["effective_dof"] = effective_dof(params, cases, lambda);
    const fs::path report_path = ctx.out_dir / "oslr_fit_report.json";
    write_text(report_path, report.dump(2) + "\n");

    m.config["oslr_fit"] = {{"lambda", lambda}, {"cases", cases_path}};
    m.artifacts["oslr_params"] = ctx.relativize(params_path);
    m.artifacts["oslr_fit_report"] = ctx.relativize(report_path);
    m.save(ctx.manifest_path());
    std::cout << "fitted adapter: training MAE " << format_double(report["training_mae_unweighted"], 3)
              << " -> " << format_double(report["training_mae_fitted"], 3) << "pp\n";
}

void cmd_oslr_cv(const Ctx& ctx, const std::string& cases_path, const std::string& grid_tok) {
    const auto cases = load_cases(cases_path);
    const auto grid = grid_tok.empty() ? default_lambda_grid() : parse_grid(grid_tok);
    RunManifest m = ctx.open_manifest();

    const CvTable table = loo_cv(cases, grid);
    const fs::path path = ctx.out_dir / "oslr_cv.json";
    write_text(path, table.to_json_string());
    m.config["oslr_cv"] = {{"cases", cases_path}};
    m.artifacts["oslr_cv"] = ctx.relativize(path);
    m.save(ctx.manifest_path());
    std::cout << "cross-validation selected lambda " << table.best_lambda << "\n";
}

void cmd_oslr_permute(const Ctx& ctx, const std::string& cases_path, const std::string& held_out,
                      double lambda, int n_perms) {
    const auto all_cases = load_cases(cases_path);
    std::vector<TrainingCase> train;
    std::vector<TrainingCase> held;
    for (const auto& c : all_cases) (c.election_id == held_out ? held : train).push_back(c);
    if (held.empty())
        throw ValidationError("--held-out election '" + held_out + "' not present in the cases file");

    RunManifest m = ctx.open_manifest();
    const PermutationReport report = permutation_test(train, held, lambda, n_perms, ctx.seed);
    const fs::path path = ctx.out_dir / "oslr_permutation.json";
    write_text(path, report.to_json_string());
    m.config["oslr_permute"] = {{"held_out", held_out}, {"lambda", lambda}, {"n_perms", n_perms}};
    m.artifacts["oslr_permutation"] = ctx.relativize(path);
    m.save(ctx.manifest_path());
    std::cout << "real MAE " << format_double(report.real_mae_pp, 3) << "pp at percentile "
              << format_double(report.percentile, 1) << " of the null\n";
}

void cmd_report(const Ctx& ctx) {
    const RunManifest m = RunManifest::load(ctx.manifest_path());
    std::cout << "run " << m.run_id << " (seed " << m.seed << ", tool " << m.tool_version << ")\n";
    std::cout << "artifacts:\n";
    for (const auto& [name, rel] : m.artifacts) std::cout << "  " << name << ": " << rel << "\n";
    if (m.has("eval_report")) {
        std::ifstream in(ctx.resolve(m.artifacts.at("eval_report")));
        json j;
        in >> j;
        std::cout << "evaluation: MAE " << format_double(j["mae_pp"], 2) << "pp, winner "
                  << (j["winner_correct"].get<bool>() ? "correct" : "wrong") << ", W_sim "
                  << format_double(j["wasserstein_sim"], 3) << ", abstain "
                  << format_double(j["abstain_rate_pct"], 2) << "%\n";
    }
    if (m.has("calibration_report")) {
        std::ifstream in(ctx.resolve(m.artifacts.at("calibration_report")));
        json j;
        in >> j;
        std::cout << "calibration: reassigned " << j["n_reassigned"] << ", regional check "
                  << (j["regional_pass"].get<bool>() ? "pass" : "FAIL") << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"psephos: census-grounded synthetic-electorate election simulator"};
    app.require_subcommand(1);

    Ctx ctx;
    std::string out_dir_str = "out";
    app.add_option("--out-dir", out_dir_str, "run directory holding the manifest and artifacts")
        ->envname("PSEPHOS_OUT_DIR");
    app.add_option("--seed", ctx.seed, "run seed; recorded in the manifest before any sampling");

    // fixture
    auto* fixture_cmd = app.add_subcommand("fixture", "generate the synthetic input corpus");
    std::string scale = "full";
    fixture_cmd->add_option("--scale", scale, "small|full");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "sample and augment the agent population");
    int n_agents = 5000;
    std::string census_path;
    synth_cmd->add_option("--agents", n_agents, "population size");
    synth_cmd->add_option("--census", census_path, "census CSV (defaults to the fixture artifact)");

    // seed-beliefs
    auto* seed_cmd = app.add_subcommand("seed-beliefs", "assign orientations and belief vectors");
    int min_cell = kDefaultMinCellSize;
    seed_cmd->add_option("--min-cell", min_cell, "minimum survey cell size before fallback");

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "redistribute orientations to the target mix");
    std::string target = "26,48,26";
    double tolerance = 2.0;
    bool strict_regional = false;
    cal_cmd->add_option("--target", target, "conservative,moderate,progressive percents");
    cal_cmd->add_option("--tolerance", tolerance, "no-op band in percentage points");
    cal_cmd->add_flag("--strict-regional", strict_regional, "fail when a regional plurality flips");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "run agent vote decisions through a backend");
    std::string scenario_path;
    std::string endpoint;
    std::string variant_override;
    BackendConfig backend;
    bool use_mock = false;
    int mock_fail_after = 0;
    sim_cmd->add_option("--scenario", scenario_path, "scenario JSON");
    sim_cmd->add_option("--endpoint", endpoint, "chat-completion endpoint URL");
    sim_cmd->add_flag("--mock", use_mock, "use the deterministic mock backend");
    sim_cmd->add_option("--model-id", backend.model_id, "model identifier");
    sim_cmd->add_option("--parallelism", backend.request_parallelism, "bounded request parallelism");
    sim_cmd->add_option("--variant", variant_override, "override prompt variant: full|vanilla");
    sim_cmd->add_option("--temperature", backend.temperature, "sampling temperature");
    sim_cmd->add_option("--max-tokens", backend.max_tokens, "completion token cap");
    sim_cmd->add_option("--max-retries", backend.max_retries, "parse/match retries before abstain");
    sim_cmd->add_flag("--structured-output", backend.structured_output,
                      "request JSON-mode structured output");
    sim_cmd->add_option("--mock-fail-after", mock_fail_after,
                        "mock only: fail transport after N requests (checkpoint testing)");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "aggregate votes and score against actuals");
    std::string eval_model = "mock-small";
    std::string actual_path;
    std::string turnout_path;
    int resamples = 1000;
    double level = 95.0;
    eval_cmd->add_option("--model-id", eval_model, "which model's votes to evaluate");
    eval_cmd->add_option("--actual", actual_path, "certified result JSON");
    eval_cmd->add_option("--resamples", resamples, "bootstrap resamples");
    eval_cmd->add_option("--level", level, "confidence level in percent");
    eval_cmd->add_option("--turnout", turnout_path, "turnout CSV for a reweighted share table");

    // diagnose
    auto* diag_cmd = app.add_subcommand("diagnose", "mention rates, consistency, audit sample");
    std::vector<std::string> vote_paths;
    std::string audit_candidate;
    std::vector<std::string> lineage;
    diag_cmd->add_option("--votes", vote_paths, "votes JSONL files (default: all from manifest)");
    diag_cmd->add_option("--candidate", audit_candidate, "audit-sample target candidate");
    diag_cmd->add_option("--lineage", lineage, "candidate names forming the tracked lineage");

    // oslr
    auto* fit_cmd = app.add_subcommand("oslr-fit", "fit the reweighting adapter");
    std::string cases_path;
    double lambda = 0.01;
    bool per_model = false;
    fit_cmd->add_option("--cases", cases_path, "training cases JSON")->required();
    fit_cmd->add_option("--lambda", lambda, "L2 regularization strength");
    fit_cmd->add_flag("--per-model", per_model,
                      "also fit an independent parameter set per model");

    auto* cv_cmd = app.add_subcommand("oslr-cv", "leave-one-election-out lambda sweep");
    std::string cv_cases;
    std::string grid_tok;
    cv_cmd->add_option("--cases", cv_cases, "training cases JSON")->required();
    cv_cmd->add_option("--lambda-grid", grid_tok, "comma-separated lambdas");

    auto* perm_cmd = app.add_subcommand("oslr-permute", "permutation test of the adapter fit");
    std::string perm_cases;
    std::string held_out;
    double perm_lambda = 0.01;
    int n_perms = 100;
    perm_cmd->add_option("--cases", perm_cases, "training cases JSON")->required();
    perm_cmd->add_option("--held-out", held_out, "election id to hold out")->required();
    perm_cmd->add_option("--lambda", perm_lambda, "L2 regularization strength");
    perm_cmd->add_option("--n-perms", n_perms, "number of permutations");

    auto* report_cmd = app.add_subcommand("report", "print a summary of the run manifest");

    CLI11_PARSE(app, argc, argv);
    ctx.out_dir = fs::path(out_dir_str);

    try {
        if (*fixture_cmd) cmd_fixture(ctx, scale);
        if (*synth_cmd) cmd_synth(ctx, n_agents, census_path);
        if (*seed_cmd) cmd_seed_beliefs(ctx, min_cell);
        if (*cal_cmd) cmd_calibrate(ctx, target, tolerance, strict_regional);
        if (*sim_cmd) {
            if (use_mock || endpoint.empty()) backend.endpoint = "MOCK";
            else backend.endpoint = endpoint;
            backend.mock.fail_after_requests = mock_fail_after;
            cmd_simulate(ctx, scenario_path, backend, variant_override);
        }
        if (*eval_cmd) cmd_evaluate(ctx, eval_model, actual_path, resamples, level, turnout_path);
        if (*diag_cmd) cmd_diagnose(ctx, vote_paths, audit_candidate, lineage);
        if (*fit_cmd) cmd_oslr_fit(ctx, cases_path, lambda, per_model);
        if (*cv_cmd) cmd_oslr_cv(ctx, cv_cases, grid_tok);
        if (*perm_cmd) cmd_oslr_permute(ctx, perm_cases, held_out, perm_lambda, n_perms);
        if (*report_cmd) cmd_report(ctx);
    } catch (const DependencyError& e) {
        std::cerr << "dependency error: " << e.what() << "\n";
        return kExitDependency;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
