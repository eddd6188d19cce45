#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psephos/common.hpp"
#include "psephos/corpus.hpp"
#include "psephos/decision.hpp"
#include "psephos/metrics.hpp"
#include "psephos/population.hpp"
#include "psephos/scenario.hpp"

namespace psephos {

// Orientation x sido logistic reweighting: per-agent weights
// w_i = N * softmax(beta[model, orientation_i] + beta[orientation_i, sido_i])
// fitted so reweighted shares track certified shares across training
// elections. Candidates enter only through stable features, never by name, so
// the adapter transfers to unseen candidate lineups.

struct FeatureKey {
    Orientation orientation = Orientation::moderate;
    bool incumbent = false;
    bool third_party = false;
    std::string tag;  // authored disambiguator for colliding triples

    auto operator<=>(const FeatureKey&) const = default;
    std::string label() const;
};

FeatureKey feature_of(const Candidate& c);
FeatureKey feature_of(const ActualCandidate& c);

struct CaseAgent {
    Orientation orientation = Orientation::moderate;
    Sido sido = Sido::seoul;
    int feature = -1;  // index into TrainingCase::features; -1 = abstained
};

// One (election, model) fitting unit. Vote records are projected onto feature
// indices at construction; no candidate name survives into this struct.
struct TrainingCase {
    std::string election_id;
    std::string model_id;
    std::vector<FeatureKey> features;
    std::vector<double> actual_shares;  // percent, aligned with features
    std::vector<CaseAgent> agents;
};

TrainingCase make_training_case(const std::vector<VoteRecord>& records,
                                const std::vector<AgentRecord>& agents,
                                const ElectionScenario& scenario, const ActualResult& actual);

struct OslrParams {
    std::vector<std::string> model_ids;  // sorted registry
    double lambda = 0.0;
    std::vector<std::array<double, kOrientationCount>> beta_mo;  // [model][orientation]
    std::array<std::array<double, kSidoCount>, kOrientationCount> beta_os{};  // [orientation][sido]

    int model_index(const std::string& model_id) const;
    std::size_t coefficient_count() const { return model_ids.size() * kOrientationCount + kOrientationCount * kSidoCount; }

    static OslrParams zeros(const std::vector<std::string>& model_ids, double lambda);
    static OslrParams load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Per-agent weights for one case, normalized to sum to the case's agent
// count. The normalization runs over every agent, abstainers included;
// abstainers then contribute nothing to share denominators. (The alternative,
// normalizing over voters only, rescales all weights by a common factor and
// so cannot change any share.)
std::vector<double> agent_weights(const OslrParams& params, const TrainingCase& c);

// Reweighted per-feature shares (percent) for one case.
std::vector<double> case_feature_shares(const OslrParams& params, const TrainingCase& c);

// Name-level reweighting: shares of records under externally supplied
// per-record weights. Abstainers contribute no mass to the denominator.
ShareTable weighted_shares(const std::vector<VoteRecord>& records,
                           const std::vector<double>& weights,
                           const std::vector<std::string>& order = {});

// ---------------------------------------------------------------------------
// Fitting. Objective: mean over all (case, feature) outputs of the squared
// share error in percent^2, plus lambda * ||beta||^2. Deterministic full-batch
// gradient descent with Armijo backtracking from zero parameters; the
// returned objective never exceeds the zero-parameter objective.

struct FitConfig {
    int max_iterations = 5000;
    double relative_tolerance = 1e-9;
};

struct FitDiagnostics {
    int iterations = 0;
    double objective_at_zero = 0.0;
    double objective = 0.0;
};

double oslr_objective(const OslrParams& params, const std::vector<TrainingCase>& cases,
                      double lambda);
std::vector<double> oslr_gradient(const OslrParams& params, const std::vector<TrainingCase>& cases,
                                  double lambda);

// Pooled variant (the default): one fit across every case, sharing the
// orientation x sido block across models while each model keeps its own
// model x orientation offsets.
//
// model_registry widens the coefficient space beyond the models present in
// the cases; models with no training data keep zero offsets (the L2 penalty
// pins them), which is how cross-validation scores a held-out model it never
// saw: neutral model offsets plus the shared orientation x sido block.
OslrParams fit(const std::vector<TrainingCase>& cases, double lambda,
               const FitConfig& config = {}, FitDiagnostics* diagnostics = nullptr,
               const std::vector<std::string>& model_registry = {});

// Per-model variant: an independent full parameter set per model, fitted on
// that model's cases only.
std::map<std::string, OslrParams> fit_per_model(const std::vector<TrainingCase>& cases,
                                                double lambda, const FitConfig& config = {});

// Mean over cases of each case's mean absolute share error (percentage
// points) under the given parameters.
double training_mae(const OslrParams& params, const std::vector<TrainingCase>& cases);

// Per-model reweighted share vectors of one election's cases, averaged across
// models; paired with the shared feature list.
struct ElectionPrediction {
    std::vector<FeatureKey> features;
    std::vector<double> shares;   // percent
    std::vector<double> actual;   // percent
    double mae_pp = 0.0;
    bool winner_correct = false;
};

ElectionPrediction predict_election(const OslrParams& params,
                                    const std::vector<TrainingCase>& election_cases);

// ---------------------------------------------------------------------------
// Model selection and defense diagnostics.

inline const std::vector<double>& default_lambda_grid() {
    static const std::vector<double> grid = {1e-3, 1e-2, 5e-2, 1e-1, 0.5, 1.0, 5.0};
    return grid;
}

struct CvTable {
    std::vector<double> lambdas;
    struct Row {
        std::string election_id;
        std::vector<double> mae_pp;       // per lambda
        std::vector<bool> winner_correct; // per lambda
    };
    std::vector<Row> rows;
    std::vector<double> mean_mae_pp;  // per lambda
    double best_lambda = 0.0;

    std::string to_json_string() const;
};

// Leave-one-election-out cross-validation over the lambda grid; the adapter is
// refit from zero for every (fold, lambda) pair.
CvTable loo_cv(const std::vector<TrainingCase>& cases, const std::vector<double>& lambda_grid,
               const FitConfig& config = {});

// Arithmetic mean of aligned share tables, renormalized to 100 when every
// input sums to 100.
ShareTable ensemble_mean(const std::vector<ShareTable>& tables);

// Effective degrees of freedom of the ridge fit: with J the central
// finite-difference Jacobian (step 1e-4) of all (case, feature) share outputs
// with respect to the coefficients, scaled by 1/sqrt(M) to match the
// mean-squared objective, returns trace(J (J^T J + lambda I)^-1 J^T).
double effective_dof(const OslrParams& params, const std::vector<TrainingCase>& cases,
                     double lambda);

struct PermutationReport {
    double real_mae_pp = 0.0;
    double null_mean = 0.0;
    std::optional<double> null_sd;  // absent when n_perms < 2
    double percentile = 0.0;        // share of null values <= real, in percent
    int n_perms = 0;
    std::vector<double> null_maes;

    std::string to_json_string() const;
};

// Permutes the election -> actual-shares assignment among training elections,
// refits from zero for each permutation, and places the real fit's held-out
// MAE within the null distribution. Training elections must share one feature
// space for the relabeling to be meaningful.
PermutationReport permutation_test(const std::vector<TrainingCase>& train_cases,
                                   const std::vector<TrainingCase>& held_out_cases, double lambda,
                                   int n_perms, std::uint64_t seed, const FitConfig& config = {});

}  // namespace psephos
