#include "psephos/metrics.hpp"

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

enum StreamTag : std::uint64_t {
    kTagBootstrap = 256,
};

struct ShareAccumulator {
    std::vector<std::string> names;  // presentation order
    std::map<std::string, std::size_t> index;
    std::vector<double> mass;
    double voting_mass = 0.0;
    std::int64_t n_voting = 0;
    std::int64_t n_abstain = 0;

    explicit ShareAccumulator(const std::vector<std::string>& order) {
        for (const auto& n : order) add_name(n);
    }

    std::size_t add_name(const std::string& n) {
        const auto it = index.find(n);
        if (it != index.end()) return it->second;
        index.emplace(n, names.size());
        names.push_back(n);
        mass.push_back(0.0);
        return names.size() - 1;
    }

    void tally(const std::string& vote, double weight) {
        if (vote == kAbstainVote) {
            ++n_abstain;
            return;
        }
        mass[add_name(vote)] += weight;
        voting_mass += weight;
        ++n_voting;
    }

    ShareTable finish(const std::string& scope) const {
        if (voting_mass <= 0.0)
            throw ValidationError("share computation: no voting mass (all records abstained)");
        ShareTable t;
        t.scope = scope;
        t.n_voting = n_voting;
        t.n_abstain = n_abstain;
        for (std::size_t i = 0; i < names.size(); ++i) {
            ShareEntry e;
            e.name = names[i];
            e.share = 100.0 * mass[i] / voting_mass;
            e.votes = static_cast<std::int64_t>(std::llround(mass[i]));
            t.entries.push_back(std::move(e));
        }
        return t;
    }
};

std::map<std::int64_t, const AgentRecord*> agent_index(const std::vector<AgentRecord>& agents) {
    std::map<std::int64_t, const AgentRecord*> idx;
    for (const auto& a : agents) idx.emplace(a.agent_id, &a);
    return idx;
}

const AgentRecord& agent_for(const std::map<std::int64_t, const AgentRecord*>& idx,
                             const VoteRecord& r) {
    const auto it = idx.find(r.agent_id);
    if (it == idx.end())
        throw ValidationError("vote record references unknown agent " + std::to_string(r.agent_id));
    return *it->second;
}

// Type-7 percentile (linear interpolation) on a sorted vector.
double percentile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ValidationError("percentile of empty sample");
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

}  // namespace

double ShareTable::share_of(const std::string& name) const {
    const ShareEntry* e = find(name);
    if (!e) throw ValidationError("share table has no entry for '" + name + "'");
    return e->share;
}

const ShareEntry* ShareTable::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

double ShareTable::abstain_rate_pct() const {
    const auto total = n_voting + n_abstain;
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(n_abstain) / static_cast<double>(total);
}

void ShareTable::validate() const {
    double sum = 0.0;
    for (const auto& e : entries) {
        if (e.share < 0.0) throw ValidationError("negative share for " + e.name);
        if (e.ci && !(e.ci->first <= e.share && e.share <= e.ci->second))
            throw ValidationError("confidence interval does not bracket the share for " + e.name);
        sum += e.share;
    }
    if (std::abs(sum - 100.0) > 1e-9)
        throw ValidationError("shares sum to " + std::to_string(sum) + ", expected 100");
}

std::string ShareTable::to_json_string() const {
    json j;
    j["schema_version"] = 1;
    j["scope"] = scope;
    j["n_voting"] = n_voting;
    j["n_abstain"] = n_abstain;
    json arr = json::array();
    for (const auto& e : entries) {
        json je = {{"name", e.name}, {"share", e.share}, {"votes", e.votes}};
        if (e.ci) {
            je["ci_lo"] = e.ci->first;
            je["ci_hi"] = e.ci->second;
        }
        arr.push_back(je);
    }
    j["shares"] = arr;
    return j.dump(2) + "\n";
}

std::vector<std::string> candidate_order(const ElectionScenario& scenario) {
    std::vector<std::string> order;
    for (const auto& c : scenario.candidates) order.push_back(c.name);
    return order;
}

std::vector<std::string> party_order(const ElectionScenario& scenario) {
    std::vector<std::string> order;
    std::set<std::string> seen;
    for (const auto& c : scenario.candidates) {
        if (seen.insert(c.party).second) order.push_back(c.party);
    }
    return order;
}

ShareTable national_shares(const std::vector<VoteRecord>& records,
                           const std::vector<std::string>& order) {
    if (records.empty()) throw ValidationError("national_shares: no records");
    ShareAccumulator acc(order);
    for (const auto& r : records) acc.tally(r.vote, 1.0);
    return acc.finish("national");
}

ShareTable party_shares(const std::vector<VoteRecord>& records, const ElectionScenario& scenario) {
    if (records.empty()) throw ValidationError("party_shares: no records");
    ShareAccumulator acc(party_order(scenario));
    for (const auto& r : records) {
        acc.tally(r.vote == kAbstainVote ? r.vote : scenario.candidate(r.vote).party, 1.0);
    }
    return acc.finish("national");
}

std::map<Sido, ShareTable> sido_share_tables(const std::vector<VoteRecord>& records,
                                             const std::vector<AgentRecord>& agents,
                                             const std::vector<std::string>& order) {
    const auto idx = agent_index(agents);
    std::map<Sido, std::vector<const VoteRecord*>> by_sido;
    for (const auto& r : records) by_sido[agent_for(idx, r).sido].push_back(&r);

    std::map<Sido, ShareTable> out;
    for (const auto& [sido, recs] : by_sido) {
        ShareAccumulator acc(order);
        for (const VoteRecord* r : recs) acc.tally(r->vote, 1.0);
        if (acc.voting_mass <= 0.0) continue;  // an all-abstain sido has no shares
        auto table = acc.finish(std::string(to_token(sido)));
        out.emplace(sido, std::move(table));
    }
    return out;
}

std::map<Sido, ShareTable> sido_party_share_tables(const std::vector<VoteRecord>& records,
                                                   const std::vector<AgentRecord>& agents,
                                                   const ElectionScenario& scenario) {
    std::vector<VoteRecord> projected = records;
    for (auto& r : projected) {
        if (r.vote != kAbstainVote) r.vote = scenario.candidate(r.vote).party;
    }
    return sido_share_tables(projected, agents, party_order(scenario));
}

ShareTable bootstrap_ci(const std::vector<VoteRecord>& records, int n_resamples, double level_pct,
                        std::uint64_t seed, const std::vector<std::string>& order) {
    if (records.empty()) throw ValidationError("bootstrap_ci: no records");
    if (n_resamples < 1) throw ValidationError("bootstrap_ci: n_resamples must be >= 1");
    if (level_pct <= 0.0 || level_pct >= 100.0)
        throw ValidationError("bootstrap_ci: level must be in (0, 100)");

    ShareTable point = national_shares(records, order);
    const std::size_t n = records.size();
    std::vector<std::vector<double>> samples(point.entries.size());

    for (int b = 0; b < n_resamples; ++b) {
        Rng rng = Rng::stream(seed, {kTagBootstrap, static_cast<std::uint64_t>(b)});
        std::vector<double> mass(point.entries.size(), 0.0);
        double voting = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const VoteRecord& r = records[rng.below(n)];
            if (r.vote == kAbstainVote) continue;
            const ShareEntry* e = point.find(r.vote);
            const std::size_t k = static_cast<std::size_t>(e - point.entries.data());
            mass[k] += 1.0;
            voting += 1.0;
        }
        if (voting <= 0.0) continue;  // degenerate all-abstain resample
        for (std::size_t k = 0; k < mass.size(); ++k)
            samples[k].push_back(100.0 * mass[k] / voting);
    }

    const double alpha = (100.0 - level_pct) / 200.0;
    for (std::size_t k = 0; k < point.entries.size(); ++k) {
        auto& s = samples[k];
        if (s.empty()) throw ValidationError("bootstrap_ci: all resamples degenerate");
        std::sort(s.begin(), s.end());
        double lo = percentile(s, alpha);
        double hi = percentile(s, 1.0 - alpha);
        lo = std::min(lo, point.entries[k].share);
        hi = std::max(hi, point.entries[k].share);
        point.entries[k].ci = {lo, hi};
    }
    return point;
}

// --------------------------------------------------------------------------- evaluation

double wasserstein_similarity(const std::vector<double>& pred, const std::vector<double>& act) {
    if (pred.size() != act.size())
        throw ValidationError("wasserstein_similarity: vectors differ in length");
    const std::size_t k = pred.size();
    if (k <= 1) return 1.0;
    double w1 = 0.0;
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        cum += pred[i] - act[i];
        w1 += std::abs(cum);
    }
    const double max_w1 = static_cast<double>(k - 1) * 100.0;
    return 1.0 - w1 / max_w1;
}

EvalReport evaluate(const ShareTable& predicted, const ActualResult& actual,
                    const std::map<Sido, ShareTable>& predicted_per_sido) {
    EvalReport rep;

    // Candidate union in the predicted table's presentation order, with
    // actual-only candidates appended in the actual result's order.
    std::vector<std::string> names;
    for (const auto& e : predicted.entries) names.push_back(e.name);
    std::size_t overlap = 0;
    for (const auto& [name, share] : actual.national) {
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            names.push_back(name);
            rep.warnings.push_back("candidate '" + name + "' missing from simulation, imputed at 0");
        } else {
            ++overlap;
        }
    }
    if (overlap == 0)
        throw ValidationError("evaluate: no overlap between simulated and actual candidates");

    std::vector<double> pred_vec;
    std::vector<double> act_vec;
    for (const auto& name : names) {
        const ShareEntry* e = predicted.find(name);
        pred_vec.push_back(e ? e->share : 0.0);
        double a = 0.0;
        bool found = false;
        for (const auto& [an, as] : actual.national) {
            if (an == name) {
                a = as;
                found = true;
                break;
            }
        }
        if (!found)
            rep.warnings.push_back("candidate '" + name + "' missing from actuals, compared against 0");
        act_vec.push_back(a);
    }

    double err = 0.0;
    for (std::size_t i = 0; i < names.size(); ++i) err += std::abs(pred_vec[i] - act_vec[i]);
    rep.mae_pp = err / static_cast<double>(names.size());

    const std::size_t pred_best =
        static_cast<std::size_t>(std::max_element(pred_vec.begin(), pred_vec.end()) - pred_vec.begin());
    rep.predicted_winner = names[pred_best];
    rep.actual_winner = actual.winner;
    rep.winner_correct = rep.predicted_winner == rep.actual_winner;
    rep.wasserstein_sim = wasserstein_similarity(pred_vec, act_vec);
    rep.abstain_rate_pct = predicted.abstain_rate_pct();

    if (!actual.per_sido.empty() && !predicted_per_sido.empty()) {
        int hits = 0;
        int compared = 0;
        for (const auto& [sido, actual_shares] : actual.per_sido) {
            const auto it = predicted_per_sido.find(sido);
            if (it == predicted_per_sido.end()) continue;
            ++compared;

            EvalReport::SidoDetail d;
            d.sido = sido;
            double best_actual = -1.0;
            for (const auto& [name, share] : actual_shares) {
                if (share > best_actual) {
                    best_actual = share;
                    d.actual = name;
                }
            }
            double best_pred = -1.0;
            bool tie = false;
            for (const auto& e : it->second.entries) {
                if (e.share > best_pred) {
                    best_pred = e.share;
                    d.predicted = e.name;
                    tie = false;
                } else if (e.share == best_pred) {
                    tie = true;
                }
            }
            d.tie_flagged = tie;
            d.hit = !tie && d.predicted == d.actual;  // ties score as misses
            hits += d.hit ? 1 : 0;
            rep.sido_detail.push_back(std::move(d));
        }
        if (compared > 0)
            rep.sido_hit_rate = static_cast<double>(hits) / static_cast<double>(compared);
    }
    return rep;
}

std::string EvalReport::to_json_string() const {
    json j;
    j["schema_version"] = 1;
    j["mae_pp"] = mae_pp;
    j["winner_correct"] = winner_correct;
    j["predicted_winner"] = predicted_winner;
    j["actual_winner"] = actual_winner;
    j["wasserstein_sim"] = wasserstein_sim;
    j["abstain_rate_pct"] = abstain_rate_pct;
    if (sido_hit_rate) j["sido_hit_rate"] = *sido_hit_rate;
    json detail = json::array();
    for (const auto& d : sido_detail) {
        detail.push_back({{"sido", std::string(to_token(d.sido))},
                          {"predicted", d.predicted},
                          {"actual", d.actual},
                          {"hit", d.hit},
                          {"tie_flagged", d.tie_flagged}});
    }
    j["sido_detail"] = detail;
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

void write_plot_data(const std::filesystem::path& path, const ShareTable& predicted,
                     const ActualResult& actual) {
    CsvTable csv;
    csv.header = {"candidate", "sim", "actual", "ci_lo", "ci_hi"};
    for (const auto& e : predicted.entries) {
        double act = 0.0;
        for (const auto& [name, share] : actual.national) {
            if (name == e.name) {
                act = share;
                break;
            }
        }
        csv.rows.push_back({e.name, format_double(e.share, 4), format_double(act, 4),
                            e.ci ? format_double(e.ci->first, 4) : "",
                            e.ci ? format_double(e.ci->second, 4) : ""});
    }
    write_csv(path, csv);
}

// --------------------------------------------------------------------------- turnout

ShareTable turnout_reweight(const std::vector<VoteRecord>& records,
                            const std::vector<AgentRecord>& agents, const TurnoutTable& turnout,
                            const std::vector<std::string>& order) {
    if (records.empty()) throw ValidationError("turnout_reweight: no records");
    turnout.validate();
    const auto idx = agent_index(agents);
    ShareAccumulator acc(order);
    for (const auto& r : records) {
        const AgentRecord& a = agent_for(idx, r);
        acc.tally(r.vote, turnout.rate[static_cast<int>(a.age_bracket)]);
    }
    auto table = acc.finish("national");
    // Vote counts are unweighted tallies; recompute them so the table still
    // reports raw counts alongside reweighted shares.
    std::map<std::string, std::int64_t> raw;
    for (const auto& r : records)
        if (r.vote != kAbstainVote) raw[r.vote]++;
    for (auto& e : table.entries) e.votes = raw.count(e.name) ? raw[e.name] : 0;
    table.scope = "national_turnout_weighted";
    return table;
}

// --------------------------------------------------------------------------- subgroup cells

std::vector<SubgroupCellShare> load_subgroup_cells(const std::filesystem::path& path) {
    const CsvTable csv = read_csv(path);
    const auto ca = csv.col("age_bracket");
    const auto cs = csv.col("sex");
    const auto cc = csv.col("candidate");
    const auto cv = csv.col("share");
    std::vector<SubgroupCellShare> out;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        SubgroupCellShare cell;
        cell.age_bracket = parse_age_bracket(csv.rows[r][ca]);
        if (csv.rows[r][cs] != "*") cell.sex = parse_sex(csv.rows[r][cs]);
        cell.candidate = csv.rows[r][cc];
        cell.share = std::stod(csv.rows[r][cv]);
        out.push_back(std::move(cell));
    }
    return out;
}

SubgroupReport subgroup_cells(const std::vector<VoteRecord>& records,
                              const std::vector<AgentRecord>& agents, SubgroupAxes axes,
                              const std::vector<SubgroupCellShare>& actual_cells) {
    const auto idx = agent_index(agents);

    // cell key -> (candidate -> votes, total voting)
    auto cell_key = [&](AgeBracket b, Sex s) {
        return axes == SubgroupAxes::age_sex
                   ? static_cast<int>(b) * kSexCount + static_cast<int>(s)
                   : static_cast<int>(b);
    };
    std::map<int, std::map<std::string, double>> votes;
    std::map<int, double> totals;
    for (const auto& r : records) {
        if (r.vote == kAbstainVote) continue;
        const AgentRecord& a = agent_for(idx, r);
        const int key = cell_key(a.age_bracket, a.sex);
        votes[key][r.vote] += 1.0;
        totals[key] += 1.0;
    }

    std::vector<double> pred;
    std::vector<double> act;
    for (const auto& cell : actual_cells) {
        if (axes == SubgroupAxes::age_sex && !cell.sex)
            throw ValidationError("subgroup_cells: age_sex axes but benchmark row lacks sex");
        const int key = cell_key(cell.age_bracket, cell.sex.value_or(Sex::male));
        const auto t = totals.find(key);
        if (t == totals.end() || t->second <= 0.0) continue;  // no simulated voters in cell
        const auto& cell_votes = votes[key];
        const auto v = cell_votes.find(cell.candidate);
        pred.push_back(v == cell_votes.end() ? 0.0 : 100.0 * v->second / t->second);
        act.push_back(cell.share);
    }
    if (pred.size() < 2)
        throw ValidationError("subgroup_cells: fewer than 2 paired cells, correlation undefined");

    SubgroupReport rep;
    rep.n_pairs = static_cast<int>(pred.size());
    double mae = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) mae += std::abs(pred[i] - act[i]);
    rep.cell_mae = mae / static_cast<double>(pred.size());

    const double n = static_cast<double>(pred.size());
    const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
    const double ma = std::accumulate(act.begin(), act.end(), 0.0) / n;
    double cov = 0.0;
    double vp = 0.0;
    double va = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        cov += (pred[i] - mp) * (act[i] - ma);
        vp += (pred[i] - mp) * (pred[i] - mp);
        va += (act[i] - ma) * (act[i] - ma);
    }
    if (vp <= 0.0 || va <= 0.0)
        throw ValidationError("subgroup_cells: zero variance, correlation undefined");
    rep.pearson_r = cov / std::sqrt(vp * va);
    return rep;
}

std::string SubgroupReport::to_json_string() const {
    json j;
    j["schema_version"] = 1;
    j["cell_mae"] = cell_mae;
    j["pearson_r"] = pearson_r;
    j["n_pairs"] = n_pairs;
    return j.dump(2) + "\n";
}

}  // namespace psephos
