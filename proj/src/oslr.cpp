#include "psephos/oslr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "psephos/rng.hpp"

namespace psephos {

using nlohmann::json;

namespace {

enum StreamTag : std::uint64_t {
    kTagPermutation = 1024,
};

constexpr double kJacobianStep = 1e-4;

std::size_t mo_index(int model, Orientation o) {
    return static_cast<std::size_t>(model) * kOrientationCount + static_cast<std::size_t>(o);
}

std::size_t os_index(std::size_t n_models, Orientation o, Sido s) {
    return n_models * kOrientationCount + static_cast<std::size_t>(o) * kSidoCount +
           static_cast<std::size_t>(s);
}

std::vector<double> flatten(const OslrParams& p) {
    std::vector<double> v;
    v.reserve(p.coefficient_count());
    for (const auto& row : p.beta_mo)
        for (double x : row) v.push_back(x);
    for (const auto& row : p.beta_os)
        for (double x : row) v.push_back(x);
    return v;
}

OslrParams unflatten(const std::vector<double>& v, const std::vector<std::string>& model_ids,
                     double lambda) {
    OslrParams p = OslrParams::zeros(model_ids, lambda);
    std::size_t k = 0;
    for (auto& row : p.beta_mo)
        for (double& x : row) x = v[k++];
    for (auto& row : p.beta_os)
        for (double& x : row) x = v[k++];
    return p;
}

struct CaseEval {
    std::vector<double> p;       // softmax probabilities over agents
    std::vector<double> a;       // per-feature probability mass
    double b = 0.0;              // voting probability mass
    std::vector<double> shares;  // percent
};

CaseEval eval_case(const OslrParams& params, const TrainingCase& c) {
    const int m = params.model_index(c.model_id);
    CaseEval ev;
    ev.p.resize(c.agents.size());
    double max_s = -1e300;
    for (std::size_t i = 0; i < c.agents.size(); ++i) {
        const auto& ag = c.agents[i];
        const double s = params.beta_mo[m][static_cast<int>(ag.orientation)] +
                         params.beta_os[static_cast<int>(ag.orientation)][static_cast<int>(ag.sido)];
        ev.p[i] = s;
        max_s = std::max(max_s, s);
    }
    double z = 0.0;
    for (double& s : ev.p) {
        s = std::exp(s - max_s);
        z += s;
    }
    for (double& s : ev.p) s /= z;

    ev.a.assign(c.features.size(), 0.0);
    for (std::size_t i = 0; i < c.agents.size(); ++i) {
        const int f = c.agents[i].feature;
        if (f < 0) continue;
        ev.a[static_cast<std::size_t>(f)] += ev.p[i];
        ev.b += ev.p[i];
    }
    if (ev.b <= 0.0)
        throw ValidationError("case " + c.election_id + "/" + c.model_id +
                              " has no voting probability mass");
    ev.shares.resize(c.features.size());
    for (std::size_t f = 0; f < c.features.size(); ++f) ev.shares[f] = 100.0 * ev.a[f] / ev.b;
    return ev;
}

std::size_t total_outputs(const std::vector<TrainingCase>& cases) {
    std::size_t m = 0;
    for (const auto& c : cases) m += c.features.size();
    if (m == 0) throw ValidationError("no (case, feature) outputs to fit");
    return m;
}

void validate_cases(const OslrParams& params, const std::vector<TrainingCase>& cases) {
    for (const auto& c : cases) {
        params.model_index(c.model_id);
        if (c.features.size() != c.actual_shares.size())
            throw ValidationError("case " + c.election_id + ": feature/share length mismatch");
        if (c.agents.empty()) throw ValidationError("case " + c.election_id + " has no agents");
    }
}

std::vector<std::string> model_registry(const std::vector<TrainingCase>& cases) {
    std::set<std::string> models;
    for (const auto& c : cases) models.insert(c.model_id);
    return {models.begin(), models.end()};
}

std::vector<std::string> election_order(const std::vector<TrainingCase>& cases) {
    std::vector<std::string> elections;
    for (const auto& c : cases) {
        if (std::find(elections.begin(), elections.end(), c.election_id) == elections.end())
            elections.push_back(c.election_id);
    }
    return elections;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
std::vector<double> symmetric_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-22) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cos_r = 1.0 / std::sqrt(t * t + 1.0);
                const double sin_r = t * cos_r;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = cos_r * akp - sin_r * akq;
                    a[k][q] = sin_r * akp + cos_r * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = cos_r * apk - sin_r * aqk;
                    a[q][k] = sin_r * apk + cos_r * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    return ev;
}

}  // namespace

// --------------------------------------------------------------------------- features

std::string FeatureKey::label() const {
    std::string s(to_token(orientation));
    if (incumbent) s += "|incumbent";
    if (third_party) s += "|third_party";
    if (!tag.empty()) s += "|" + tag;
    return s;
}

FeatureKey feature_of(const Candidate& c) {
    return {c.orientation, c.incumbent, c.third_party, c.feature_tag};
}

FeatureKey feature_of(const ActualCandidate& c) {
    return {c.orientation, c.incumbent, c.third_party, c.feature_tag};
}

TrainingCase make_training_case(const std::vector<VoteRecord>& records,
                                const std::vector<AgentRecord>& agents,
                                const ElectionScenario& scenario, const ActualResult& actual) {
    if (records.empty()) throw ValidationError("make_training_case: no records");
    TrainingCase tc;
    tc.election_id = scenario.election_id;
    tc.model_id = records.front().model_id;

    // Feature list seeded by the actual result: each certified share entry
    // must land on its own feature.
    std::map<FeatureKey, std::size_t> feature_index;
    for (const auto& [name, share] : actual.national) {
        const auto cand = std::find_if(actual.candidates.begin(), actual.candidates.end(),
                                       [&](const ActualCandidate& c) { return c.name == name; });
        if (cand == actual.candidates.end())
            throw ValidationError("actual result " + actual.election_id +
                                  " lists shares for unknown candidate '" + name + "'");
        const FeatureKey key = feature_of(*cand);
        if (feature_index.count(key))
            throw ValidationError("actual result " + actual.election_id + ": candidates collide on feature " +
                                  key.label() + "; add feature_tag to disambiguate");
        feature_index.emplace(key, tc.features.size());
        tc.features.push_back(key);
        tc.actual_shares.push_back(share);
    }
    // Scenario candidates absent from the actuals pool at share 0. Several
    // scenario candidates may share a feature (parallel races pool by party
    // feature); that is aggregation, not ambiguity.
    std::map<std::string, std::size_t> candidate_feature;
    for (const auto& c : scenario.candidates) {
        const FeatureKey key = feature_of(c);
        auto it = feature_index.find(key);
        if (it == feature_index.end()) {
            it = feature_index.emplace(key, tc.features.size()).first;
            tc.features.push_back(key);
            tc.actual_shares.push_back(0.0);
        }
        candidate_feature.emplace(c.name, it->second);
    }

    std::map<std::int64_t, const AgentRecord*> by_id;
    for (const auto& a : agents) by_id.emplace(a.agent_id, &a);

    for (const auto& r : records) {
        if (r.election_id != scenario.election_id)
            throw ValidationError("record for election " + r.election_id +
                                  " mixed into case for " + scenario.election_id);
        if (r.model_id != tc.model_id)
            throw ValidationError("records from multiple models in one case: " + r.model_id +
                                  " vs " + tc.model_id);
        const auto it = by_id.find(r.agent_id);
        if (it == by_id.end())
            throw ValidationError("vote record references unknown agent " +
                                  std::to_string(r.agent_id));
        CaseAgent ca;
        ca.orientation = it->second->orientation;
        ca.sido = it->second->sido;
        if (r.vote == kAbstainVote) {
            ca.feature = -1;
        } else {
            const auto cf = candidate_feature.find(r.vote);
            if (cf == candidate_feature.end())
                throw ValidationError("vote for '" + r.vote + "' not on scenario " +
                                      scenario.election_id);
            ca.feature = static_cast<int>(cf->second);
        }
        tc.agents.push_back(ca);
    }
    return tc;
}

// --------------------------------------------------------------------------- params

int OslrParams::model_index(const std::string& model_id) const {
    for (std::size_t i = 0; i < model_ids.size(); ++i)
        if (model_ids[i] == model_id) return static_cast<int>(i);
    throw ValidationError("model '" + model_id + "' is not in the adapter registry");
}

OslrParams OslrParams::zeros(const std::vector<std::string>& model_ids, double lambda) {
    OslrParams p;
    p.model_ids = model_ids;
    p.lambda = lambda;
    p.beta_mo.assign(model_ids.size(), {});
    return p;
}

OslrParams OslrParams::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open adapter params: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (j.value("schema_version", 0) != 1)
        throw ValidationError(path.string() + ": unsupported params schema, migration required");
    OslrParams p;
    p.model_ids = j.at("model_ids").get<std::vector<std::string>>();
    p.lambda = j.at("lambda").get<double>();
    const auto& mo = j.at("beta_mo");
    if (mo.size() != p.model_ids.size())
        throw ValidationError(path.string() + ": beta_mo rows do not match model registry");
    for (const auto& row : mo) {
        std::array<double, kOrientationCount> r{};
        for (int o = 0; o < kOrientationCount; ++o) r[o] = row.at(o).get<double>();
        p.beta_mo.push_back(r);
    }
    const auto& os = j.at("beta_os");
    for (int o = 0; o < kOrientationCount; ++o)
        for (int s = 0; s < kSidoCount; ++s) p.beta_os[o][s] = os.at(o).at(s).get<double>();
    for (const auto& row : p.beta_mo)
        for (double x : row)
            if (!std::isfinite(x)) throw ValidationError(path.string() + ": non-finite coefficient");
    for (const auto& row : p.beta_os)
        for (double x : row)
            if (!std::isfinite(x)) throw ValidationError(path.string() + ": non-finite coefficient");
    return p;
}

void OslrParams::save(const std::filesystem::path& path) const {
    json j;
    j["schema_version"] = 1;
    j["model_ids"] = model_ids;
    j["lambda"] = lambda;
    j["beta_mo"] = beta_mo;
    j["beta_os"] = beta_os;
    json sidos = json::array();
    for (int s = 0; s < kSidoCount; ++s) sidos.push_back(std::string(to_token(static_cast<Sido>(s))));
    j["sido_order"] = sidos;
    json orientations = json::array();
    for (int o = 0; o < kOrientationCount; ++o)
        orientations.push_back(std::string(to_token(static_cast<Orientation>(o))));
    j["orientation_order"] = orientations;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write adapter params: " + path.string());
    out << j.dump(2) << "\n";
}

// --------------------------------------------------------------------------- weights and shares

std::vector<double> agent_weights(const OslrParams& params, const TrainingCase& c) {
    const CaseEval ev = eval_case(params, c);
    const double n = static_cast<double>(c.agents.size());
    std::vector<double> w(ev.p.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = n * ev.p[i];
    return w;
}

std::vector<double> case_feature_shares(const OslrParams& params, const TrainingCase& c) {
    return eval_case(params, c).shares;
}

ShareTable weighted_shares(const std::vector<VoteRecord>& records,
                           const std::vector<double>& weights,
                           const std::vector<std::string>& order) {
    if (records.size() != weights.size())
        throw ValidationError("weighted_shares: weights not aligned to records");
    std::vector<std::string> names = order;
    std::map<std::string, double> mass;
    std::map<std::string, std::int64_t> votes;
    double voting_mass = 0.0;
    ShareTable t;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.vote == kAbstainVote) {
            ++t.n_abstain;
            continue;
        }
        if (weights[i] < 0.0) throw ValidationError("weighted_shares: negative weight");
        if (std::find(names.begin(), names.end(), r.vote) == names.end()) names.push_back(r.vote);
        mass[r.vote] += weights[i];
        votes[r.vote] += 1;
        voting_mass += weights[i];
        ++t.n_voting;
    }
    if (voting_mass <= 0.0)
        throw ValidationError("weighted_shares: no voting mass after abstentions");
    for (const auto& name : names) {
        ShareEntry e;
        e.name = name;
        e.share = 100.0 * (mass.count(name) ? mass[name] : 0.0) / voting_mass;
        e.votes = votes.count(name) ? votes[name] : 0;
        t.entries.push_back(std::move(e));
    }
    return t;
}

// --------------------------------------------------------------------------- objective and fit

double oslr_objective(const OslrParams& params, const std::vector<TrainingCase>& cases,
                      double lambda) {
    validate_cases(params, cases);
    const double m_outputs = static_cast<double>(total_outputs(cases));
    double sq = 0.0;
    for (const auto& c : cases) {
        const CaseEval ev = eval_case(params, c);
        for (std::size_t f = 0; f < c.features.size(); ++f) {
            const double r = ev.shares[f] - c.actual_shares[f];
            sq += r * r;
        }
    }
    double penalty = 0.0;
    for (double x : flatten(params)) penalty += x * x;
    return sq / m_outputs + lambda * penalty;
}

std::vector<double> oslr_gradient(const OslrParams& params, const std::vector<TrainingCase>& cases,
                                  double lambda) {
    validate_cases(params, cases);
    const std::size_t n_models = params.model_ids.size();
    const std::size_t n_params = params.coefficient_count();
    const double m_outputs = static_cast<double>(total_outputs(cases));

    std::vector<double> grad(n_params, 0.0);
    for (const auto& c : cases) {
        const int m = params.model_index(c.model_id);
        const CaseEval ev = eval_case(params, c);

        std::vector<double> residual(c.features.size());
        double d = 0.0;  // sum_f residual_f * a_f
        for (std::size_t f = 0; f < c.features.size(); ++f) {
            residual[f] = ev.shares[f] - c.actual_shares[f];
            d += residual[f] * ev.a[f];
        }

        // T_k = sum over voting agents touching k of p_i,
        // SR_k = same sum weighted by the residual of the voted feature.
        std::vector<double> t_k(n_params, 0.0);
        std::vector<double> sr_k(n_params, 0.0);
        for (std::size_t i = 0; i < c.agents.size(); ++i) {
            const auto& ag = c.agents[i];
            if (ag.feature < 0) continue;
            const double pi = ev.p[i];
            const double ci = residual[static_cast<std::size_t>(ag.feature)] * pi;
            const std::size_t k1 = mo_index(m, ag.orientation);
            const std::size_t k2 = os_index(n_models, ag.orientation, ag.sido);
            t_k[k1] += pi;
            t_k[k2] += pi;
            sr_k[k1] += ci;
            sr_k[k2] += ci;
        }
        const double scale = 2.0 / m_outputs * 100.0 / (ev.b * ev.b);
        for (std::size_t k = 0; k < n_params; ++k) {
            if (t_k[k] == 0.0 && sr_k[k] == 0.0) continue;
            grad[k] += scale * (ev.b * sr_k[k] - d * t_k[k]);
        }
    }
    const std::vector<double> beta = flatten(params);
    for (std::size_t k = 0; k < n_params; ++k) grad[k] += 2.0 * lambda * beta[k];
    return grad;
}

OslrParams fit(const std::vector<TrainingCase>& cases, double lambda, const FitConfig& config,
               FitDiagnostics* diagnostics, const std::vector<std::string>& model_registry_in) {
    if (cases.empty()) throw ValidationError("fit: no training cases");
    if (lambda < 0.0) throw ValidationError("fit: lambda must be nonnegative");
    std::vector<std::string> models = model_registry_in;
    if (models.empty()) {
        models = model_registry(cases);
    } else {
        std::sort(models.begin(), models.end());
        for (const auto& c : cases) {
            if (std::find(models.begin(), models.end(), c.model_id) == models.end())
                throw ValidationError("fit: case model '" + c.model_id +
                                      "' missing from the supplied registry");
        }
    }
    OslrParams params = OslrParams::zeros(models, lambda);
    validate_cases(params, cases);

    std::vector<double> beta = flatten(params);
    double objective = oslr_objective(params, cases, lambda);
    if (!std::isfinite(objective))
        throw ValidationError("fit: non-finite objective at initialization");
    const double objective_at_zero = objective;

    double step = 1.0;
    int iterations = 0;
    for (; iterations < config.max_iterations; ++iterations) {
        const std::vector<double> grad = oslr_gradient(params, cases, lambda);
        double gg = 0.0;
        for (double g : grad) gg += g * g;
        if (gg < 1e-24) break;

        constexpr double kArmijo = 1e-4;
        double t = step;
        double trial_objective = 0.0;
        std::vector<double> trial(beta.size());
        bool ok = false;
        for (int halving = 0; halving < 60; ++halving) {
            for (std::size_t k = 0; k < beta.size(); ++k) trial[k] = beta[k] - t * grad[k];
            const OslrParams trial_params = unflatten(trial, models, lambda);
            trial_objective = oslr_objective(trial_params, cases, lambda);
            if (std::isfinite(trial_objective) && trial_objective <= objective - kArmijo * t * gg) {
                ok = true;
                break;
            }
            t *= 0.5;
        }
        if (!ok) break;

        beta = trial;
        params = unflatten(beta, models, lambda);
        const double decrease = objective - trial_objective;
        const bool converged = decrease <= config.relative_tolerance * std::max(1.0, std::abs(objective));
        objective = trial_objective;
        step = std::min(t * 2.0, 1e6);
        if (converged) {
            ++iterations;
            break;
        }
    }

    if (!std::isfinite(objective)) throw ValidationError("fit: non-finite objective after descent");
    if (diagnostics) {
        diagnostics->iterations = iterations;
        diagnostics->objective_at_zero = objective_at_zero;
        diagnostics->objective = objective;
    }
    return params;
}

std::map<std::string, OslrParams> fit_per_model(const std::vector<TrainingCase>& cases,
                                                double lambda, const FitConfig& config) {
    std::map<std::string, std::vector<TrainingCase>> by_model;
    for (const auto& c : cases) by_model[c.model_id].push_back(c);
    std::map<std::string, OslrParams> out;
    for (const auto& [model, model_cases] : by_model)
        out.emplace(model, fit(model_cases, lambda, config));
    return out;
}

double training_mae(const OslrParams& params, const std::vector<TrainingCase>& cases) {
    if (cases.empty()) throw ValidationError("training_mae: no cases");
    double total = 0.0;
    for (const auto& c : cases) {
        const auto shares = case_feature_shares(params, c);
        double mae = 0.0;
        for (std::size_t f = 0; f < c.features.size(); ++f)
            mae += std::abs(shares[f] - c.actual_shares[f]);
        total += mae / static_cast<double>(c.features.size());
    }
    return total / static_cast<double>(cases.size());
}

ElectionPrediction predict_election(const OslrParams& params,
                                    const std::vector<TrainingCase>& election_cases) {
    if (election_cases.empty()) throw ValidationError("predict_election: no cases");
    const auto& first = election_cases.front();
    for (const auto& c : election_cases) {
        if (c.election_id != first.election_id)
            throw ValidationError("predict_election: cases span multiple elections");
        if (c.features != first.features || c.actual_shares != first.actual_shares)
            throw ValidationError("predict_election: cases disagree on features or actuals");
    }
    ElectionPrediction pred;
    pred.features = first.features;
    pred.actual = first.actual_shares;
    pred.shares.assign(first.features.size(), 0.0);
    for (const auto& c : election_cases) {
        const auto shares = case_feature_shares(params, c);
        for (std::size_t f = 0; f < shares.size(); ++f) pred.shares[f] += shares[f];
    }
    for (double& s : pred.shares) s /= static_cast<double>(election_cases.size());

    double err = 0.0;
    for (std::size_t f = 0; f < pred.shares.size(); ++f)
        err += std::abs(pred.shares[f] - pred.actual[f]);
    pred.mae_pp = err / static_cast<double>(pred.shares.size());

    const auto pred_best = std::max_element(pred.shares.begin(), pred.shares.end());
    const auto act_best = std::max_element(pred.actual.begin(), pred.actual.end());
    pred.winner_correct = (pred_best - pred.shares.begin()) == (act_best - pred.actual.begin());
    return pred;
}

// --------------------------------------------------------------------------- model selection

CvTable loo_cv(const std::vector<TrainingCase>& cases, const std::vector<double>& lambda_grid,
               const FitConfig& config) {
    if (lambda_grid.empty()) throw ValidationError("loo_cv: empty lambda grid");
    const auto elections = election_order(cases);
    if (elections.size() < 2) throw ValidationError("loo_cv needs at least 2 elections");

    const std::vector<std::string> all_models = model_registry(cases);
    CvTable table;
    table.lambdas = lambda_grid;
    table.mean_mae_pp.assign(lambda_grid.size(), 0.0);
    for (const auto& held : elections) {
        std::vector<TrainingCase> train;
        std::vector<TrainingCase> test;
        for (const auto& c : cases) (c.election_id == held ? test : train).push_back(c);

        CvTable::Row row;
        row.election_id = held;
        for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
            const OslrParams params = fit(train, lambda_grid[li], config, nullptr, all_models);
            const ElectionPrediction pred = predict_election(params, test);
            row.mae_pp.push_back(pred.mae_pp);
            row.winner_correct.push_back(pred.winner_correct);
            table.mean_mae_pp[li] += pred.mae_pp;
        }
        table.rows.push_back(std::move(row));
    }
    for (double& m : table.mean_mae_pp) m /= static_cast<double>(elections.size());
    const auto best =
        std::min_element(table.mean_mae_pp.begin(), table.mean_mae_pp.end()) - table.mean_mae_pp.begin();
    table.best_lambda = lambda_grid[static_cast<std::size_t>(best)];
    return table;
}

std::string CvTable::to_json_string() const {
    json j;
    j["schema_version"] = 1;
    j["lambdas"] = lambdas;
    json rows_json = json::array();
    for (const auto& r : rows) {
        rows_json.push_back({{"election_id", r.election_id},
                             {"mae_pp", r.mae_pp},
                             {"winner_correct", r.winner_correct}});
    }
    j["rows"] = rows_json;
    j["mean_mae_pp"] = mean_mae_pp;
    j["best_lambda"] = best_lambda;
    return j.dump(2) + "\n";
}

ShareTable ensemble_mean(const std::vector<ShareTable>& tables) {
    if (tables.empty()) throw ValidationError("ensemble_mean: no tables");
    const auto& first = tables.front();
    bool all_sum_100 = true;
    for (const auto& t : tables) {
        if (t.entries.size() != first.entries.size())
            throw ValidationError("ensemble_mean: tables have different candidate sets");
        double sum = 0.0;
        for (const auto& e : t.entries) sum += e.share;
        all_sum_100 &= std::abs(sum - 100.0) < 1e-6;
    }

    ShareTable out;
    out.scope = first.scope;
    for (const auto& e : first.entries) {
        ShareEntry entry;
        entry.name = e.name;
        out.entries.push_back(entry);
    }
    for (const auto& t : tables) {
        for (auto& e : out.entries) {
            const ShareEntry* src = t.find(e.name);
            if (!src)
                throw ValidationError("ensemble_mean: table missing candidate '" + e.name + "'");
            e.share += src->share;
            e.votes += src->votes;
        }
        out.n_voting += t.n_voting;
        out.n_abstain += t.n_abstain;
    }
    for (auto& e : out.entries) e.share /= static_cast<double>(tables.size());
    if (all_sum_100) {
        double sum = 0.0;
        for (const auto& e : out.entries) sum += e.share;
        if (sum > 0.0)
            for (auto& e : out.entries) e.share *= 100.0 / sum;
    }
    return out;
}

double effective_dof(const OslrParams& params, const std::vector<TrainingCase>& cases,
                     double lambda) {
    if (lambda < 0.0) throw ValidationError("effective_dof: lambda must be nonnegative");
    validate_cases(params, cases);
    const std::size_t n_params = params.coefficient_count();
    const std::size_t m_outputs = total_outputs(cases);

    auto outputs_at = [&](const std::vector<double>& beta) {
        const OslrParams p = unflatten(beta, params.model_ids, params.lambda);
        std::vector<double> out;
        out.reserve(m_outputs);
        for (const auto& c : cases) {
            const auto shares = case_feature_shares(p, c);
            out.insert(out.end(), shares.begin(), shares.end());
        }
        return out;
    };

    const std::vector<double> beta0 = flatten(params);
    // J scaled by 1/sqrt(M): the Jacobian of the mean-squared objective's
    // residual vector, so the hat-matrix lambda is the fitting lambda.
    const double col_scale = 1.0 / std::sqrt(static_cast<double>(m_outputs));
    std::vector<std::vector<double>> jt(n_params);  // rows are J columns
    for (std::size_t k = 0; k < n_params; ++k) {
        std::vector<double> plus = beta0;
        std::vector<double> minus = beta0;
        plus[k] += kJacobianStep;
        minus[k] -= kJacobianStep;
        const auto out_plus = outputs_at(plus);
        const auto out_minus = outputs_at(minus);
        jt[k].resize(m_outputs);
        for (std::size_t r = 0; r < m_outputs; ++r)
            jt[k][r] = (out_plus[r] - out_minus[r]) / (2.0 * kJacobianStep) * col_scale;
    }

    std::vector<std::vector<double>> gram(n_params, std::vector<double>(n_params, 0.0));
    for (std::size_t i = 0; i < n_params; ++i) {
        for (std::size_t j = i; j < n_params; ++j) {
            double dot = 0.0;
            for (std::size_t r = 0; r < m_outputs; ++r) dot += jt[i][r] * jt[j][r];
            gram[i][j] = dot;
            gram[j][i] = dot;
        }
    }
    const std::vector<double> ev = symmetric_eigenvalues(std::move(gram));
    const double max_ev = *std::max_element(ev.begin(), ev.end());
    double edof = 0.0;
    for (double e : ev) {
        if (e <= 0.0) continue;
        if (lambda == 0.0) {
            edof += e > 1e-12 * std::max(1.0, max_ev) ? 1.0 : 0.0;
        } else {
            edof += e / (e + lambda);
        }
    }
    return edof;
}

PermutationReport permutation_test(const std::vector<TrainingCase>& train_cases,
                                   const std::vector<TrainingCase>& held_out_cases, double lambda,
                                   int n_perms, std::uint64_t seed, const FitConfig& config) {
    if (n_perms < 1) throw ValidationError("permutation_test: n_perms must be >= 1");
    const auto elections = election_order(train_cases);
    if (elections.size() < 2)
        throw ValidationError("permutation_test needs at least 2 training elections");
    for (const auto& c : train_cases) {
        if (c.features != train_cases.front().features)
            throw ValidationError("permutation_test: training elections must share one feature "
                                  "space for the relabeling to be meaningful");
    }

    std::map<std::string, std::vector<double>> actuals_by_election;
    for (const auto& c : train_cases) actuals_by_election[c.election_id] = c.actual_shares;

    std::vector<TrainingCase> registry_pool = train_cases;
    registry_pool.insert(registry_pool.end(), held_out_cases.begin(), held_out_cases.end());
    const std::vector<std::string> all_models = model_registry(registry_pool);

    const OslrParams real_params = fit(train_cases, lambda, config, nullptr, all_models);
    PermutationReport report;
    report.real_mae_pp = predict_election(real_params, held_out_cases).mae_pp;
    report.n_perms = n_perms;

    for (int j = 0; j < n_perms; ++j) {
        Rng rng = Rng::stream(seed, {kTagPermutation, static_cast<std::uint64_t>(j)});
        std::vector<std::size_t> perm(elections.size());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);

        std::map<std::string, const std::vector<double>*> permuted;
        for (std::size_t e = 0; e < elections.size(); ++e)
            permuted[elections[e]] = &actuals_by_election.at(elections[perm[e]]);

        std::vector<TrainingCase> shuffled = train_cases;
        for (auto& c : shuffled) c.actual_shares = *permuted.at(c.election_id);

        const OslrParams null_params = fit(shuffled, lambda, config, nullptr, all_models);
        report.null_maes.push_back(predict_election(null_params, held_out_cases).mae_pp);
    }

    report.null_mean = std::accumulate(report.null_maes.begin(), report.null_maes.end(), 0.0) /
                       static_cast<double>(n_perms);
    if (n_perms >= 2) {
        double var = 0.0;
        for (double v : report.null_maes) var += (v - report.null_mean) * (v - report.null_mean);
        report.null_sd = std::sqrt(var / static_cast<double>(n_perms - 1));
    }
    int below = 0;
    for (double v : report.null_maes)
        if (v <= report.real_mae_pp) ++below;
    report.percentile = 100.0 * static_cast<double>(below) / static_cast<double>(n_perms);
    return report;
}

std::string PermutationReport::to_json_string() const {
    json j;
    j["schema_version"] = 1;
    j["real_mae_pp"] = real_mae_pp;
    j["null_mean"] = null_mean;
    if (null_sd) j["null_sd"] = *null_sd;
    j["percentile"] = percentile;
    j["n_perms"] = n_perms;
    j["null_maes"] = null_maes;
    return j.dump(2) + "\n";
}

}  // namespace psephos
