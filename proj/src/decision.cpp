#include "psephos/decision.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "psephos/beliefs.hpp"
#include "psephos/rng.hpp"

namespace psephos {

using nlohmann::json;

namespace {

enum StreamTag : std::uint64_t {
    kTagMock = 128,
};

// Prompt block markers. The mock backend asserts on these, and the
// mitigation marker doubles as the bias switch: a system prompt without it is
// treated as the unmitigated (vanilla) regime.
constexpr const char* kMarkerDemographics = "## 인구통계";
constexpr const char* kMarkerOrientation = "## 정치성향 및 가치관";
constexpr const char* kMarkerInstructions = "## 중요 지침";
constexpr const char* kMarkerAntiAi = "AI의 관점이 아닌";
constexpr const char* kMarkerBalance = "양쪽 후보를 균형있게";
constexpr const char* kMarkerVanilla = "유권자라고 가정하세요";
constexpr const char* kMarkerBallot = "[후보]";
constexpr const char* kMarkerJson = "\"reasoning\"";

const char* korean(Sex s) { return s == Sex::male ? "남" : "여"; }

const char* korean(Education e) {
    switch (e) {
        case Education::middle_or_less: return "중졸 이하";
        case Education::high_school: return "고졸";
        case Education::university: return "대졸";
        case Education::graduate: return "대학원졸";
    }
    return "";
}

const char* korean(Marital m) {
    switch (m) {
        case Marital::never_married: return "미혼";
        case Marital::married: return "기혼";
        case Marital::divorced: return "이혼";
        case Marital::widowed: return "사별";
    }
    return "";
}

const char* korean(IncomeLevel v) {
    switch (v) {
        case IncomeLevel::low: return "하";
        case IncomeLevel::mid_low: return "중하";
        case IncomeLevel::mid: return "중";
        case IncomeLevel::mid_high: return "중상";
        case IncomeLevel::high: return "상";
    }
    return "";
}

const char* korean(IdentityStrength v) {
    switch (v) {
        case IdentityStrength::low: return "약함";
        case IdentityStrength::mid: return "보통";
        case IdentityStrength::high: return "강함";
    }
    return "";
}

const char* korean(OrientationDetail d) {
    switch (d) {
        case OrientationDetail::very_conservative: return "강한 보수";
        case OrientationDetail::conservative: return "보수";
        case OrientationDetail::moderate: return "중도";
        case OrientationDetail::progressive: return "진보";
        case OrientationDetail::very_progressive: return "강한 진보";
    }
    return "";
}

struct BeliefLabels {
    const char* title;
    const char* low;
    const char* high;
};

constexpr std::array<BeliefLabels, 5> kBeliefLabels = {{
    {"정부 역할", "작은 정부 선호", "정부 역할 확대 선호"},
    {"경제관", "시장 자율 중시", "분배와 규제 중시"},
    {"사회관", "전통적 가치 중시", "사회적 다양성 중시"},
    {"국가 자긍심", "국가 자긍심 낮음", "국가 자긍심 높음"},
    {"통일 인식", "통일에 회의적", "통일 지향적"},
}};

std::string demographics_line(const AgentRecord& a) {
    std::string s;
    s += "성별: ";
    s += korean(a.sex);
    s += ", 나이: " + std::to_string(a.age) + "세 (" + std::string(to_token(a.age_bracket)) + ")";
    s += ", 거주지: ";
    s += sido_korean_name(a.sido);
    s += ", 학력: ";
    s += korean(a.education);
    s += ", 혼인상태: ";
    s += korean(a.marital);
    return s;
}

std::string orientation_description(const AgentRecord& a) {
    switch (a.orientation) {
        case Orientation::moderate:
            return "중도 성향으로, 특정 정당을 지지하지 않는 무당파입니다. 진보 후보와 보수 후보 "
                   "모두에게 투표한 경험이 있으며, 이념보다 후보 개인의 자질, 경제 실적, 스캔들 "
                   "유무를 기준으로 판단합니다. 양쪽 진영에 투표할 가능성이 거의 같습니다.";
        case Orientation::conservative: {
            std::string s = "보수 성향으로, 국민의힘 계열 정당에 호감을 느끼는 편입니다. 안보와 "
                            "시장경제, 사회 안정을 중시합니다.";
            if (a.orientation_detail == OrientationDetail::very_conservative)
                s += " 정치적 신념이 확고하여 진영을 바꾸는 일이 거의 없습니다.";
            return s;
        }
        case Orientation::progressive: {
            std::string s = "진보 성향으로, 더불어민주당 계열 정당에 호감을 느끼는 편입니다. 복지 "
                            "확대와 개혁, 사회적 다양성을 중시합니다.";
            if (a.orientation_detail == OrientationDetail::very_progressive)
                s += " 정치적 신념이 확고하여 진영을 바꾸는 일이 거의 없습니다.";
            return s;
        }
    }
    return "";
}

}  // namespace

std::string belief_label(int dimension, double score) {
    const auto& labels = kBeliefLabels.at(dimension);
    if (score < 0.3) return labels.low;
    if (score > 0.7) return labels.high;
    return "중립";
}

std::string build_system_prompt(const AgentRecord& agent, PromptVariant variant) {
    if (agent.stage != Stage::full)
        throw ValidationError("build_system_prompt needs a stage full agent, got stage " +
                              std::string(to_token(agent.stage)));

    if (variant == PromptVariant::vanilla) {
        std::string p = "당신은 대한민국의 유권자라고 가정하세요. 당신의 인구통계: ";
        p += demographics_line(agent);
        p += ". 제시된 후보 중 한 명을 선택하세요.";
        return p;
    }

    std::string p = "당신은 대한민국의 유권자를 시뮬레이션하는 역할입니다. 아래 프로필을 가진 "
                    "실제 한국인처럼 사고하고 답변하세요.\n\n";
    p += kMarkerDemographics;
    p += "\n";
    p += demographics_line(agent);
    p += "\n직업: " + agent.occupation + ", 소득수준: " + korean(agent.income_level) +
         ", 주거형태: " + agent.housing + ", 종교: " + agent.religion +
         ", 주 뉴스 매체: " + agent.media_source +
         ", 지역 정체성: " + korean(agent.regional_identity_strength);
    p += "\n\n";
    p += kMarkerOrientation;
    p += "\n정치성향: ";
    p += korean(agent.orientation_detail);
    p += "\n";
    p += orientation_description(agent);
    p += "\n";
    for (int d = 0; d < 5; ++d) {
        p += "- ";
        p += kBeliefLabels[d].title;
        p += ": ";
        p += belief_label(d, agent.beliefs[d]);
        p += "\n";
    }
    p += "\n";
    p += kMarkerInstructions;
    p += "\n- 반드시 위 프로필의 정치성향에 충실하게 답변하세요.";
    p += "\n- 중도 성향이면 ";
    p += kMarkerBalance;
    p += " 비교하며, 특정 진영에 치우치지 않습니다.";
    p += "\n- ";
    p += kMarkerAntiAi;
    p += ", 이 프로필을 가진 실제 한국 유권자의 관점에서 판단하세요.";
    return p;
}

std::string build_user_prompt(const AgentRecord& agent, const ElectionScenario& scenario) {
    if (agent.stage != Stage::full)
        throw ValidationError("build_user_prompt needs a stage full agent");
    const auto slate = slate_for(scenario, agent.sido);

    std::string p = "다음 선거에서 투표한다고 가정하세요.\n\n[선거 상황]\n";
    p += scenario.context;
    const auto ctx = scenario.per_sido_context.find(agent.sido);
    if (ctx != scenario.per_sido_context.end() && !ctx->second.empty()) {
        p += "\n";
        p += ctx->second;
    }
    p += "\n\n";
    p += kMarkerBallot;
    p += "\n";
    for (std::size_t i = 0; i < slate.size(); ++i) {
        const Candidate& c = *slate[i];
        p += std::to_string(i + 1) + ". " + c.name + " (" + c.party + ")";
        if (c.incumbent) p += " [현직]";
        p += "\n";
        for (const auto& pledge : c.pledges) p += "   - 공약: " + pledge + "\n";
    }
    p += "\n위 후보 중 한 명에게 투표한다면 누구에게 투표하시겠습니까?";
    if (scenario.prompt_variant == PromptVariant::full) {
        p += "\n본인의 정치성향과 가치관에 부합하는 후보를 선택하세요. 보수 성향이면 보수 후보를, "
             "진보 성향이면 진보 후보를 자연스럽게 선호하고, 중도라면 양쪽을 공정하게 비교하세요.";
    }
    p += "\n반드시 아래 JSON 형식으로만 응답하세요:\n";
    p += "{\"reasoning\": \"2-3문장의 근거\", \"vote\": \"후보 이름\", \"confidence\": 0.0에서 1.0}\n";
    p += "투표할 후보가 없으면 \"vote\": \"기권\"으로 응답하세요.";
    return p;
}

// --------------------------------------------------------------------------- parsing

namespace {

// First balanced {...} span that parses as a JSON object.
std::optional<json> extract_json_object(const std::string& raw) {
    for (std::size_t start = 0; start < raw.size(); ++start) {
        if (raw[start] != '{') continue;
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                --depth;
                if (depth == 0) {
                    const auto candidate = raw.substr(start, i - start + 1);
                    json j = json::parse(candidate, nullptr, false);
                    if (!j.is_discarded() && j.is_object()) return j;
                    break;  // balanced but unparseable; try the next '{'
                }
            }
        }
    }
    return std::nullopt;
}

std::string strip_parentheticals(const std::string& s) {
    std::string out;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        else if (c == ')') { if (depth > 0) --depth; }
        else if (depth == 0) out.push_back(c);
    }
    return out;
}

const std::array<const char*, 8> kNameSuffixes = {
    "후보", "씨", "님", "의원", "대표", "지사", "시장", "대통령",
};

std::string strip_name_suffixes(std::string s) {
    bool changed = true;
    while (changed) {
        changed = false;
        s = trim(s);
        for (const char* suffix : kNameSuffixes) {
            const std::string suf(suffix);
            if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0) {
                s.erase(s.size() - suf.size());
                changed = true;
            }
        }
    }
    return trim(s);
}

std::size_t longest_common_substring(const std::u32string& a, const std::u32string& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    std::size_t best = 0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
            best = std::max(best, cur[j]);
        }
        std::swap(prev, cur);
    }
    return best;
}

bool is_abstain_token(const std::string& normalized) {
    if (normalized == "기권") return true;
    std::string lower = normalized;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return lower == "abstain";
}

}  // namespace

std::optional<std::string> fuzzy_match_candidate(const std::string& text,
                                                 const std::vector<const Candidate*>& slate) {
    const std::string stripped =
        strip_name_suffixes(normalize_whitespace(strip_parentheticals(text)));
    if (stripped.empty()) return std::nullopt;
    const std::u32string t = utf8_decode(stripped);

    constexpr double kCoverageThreshold = 0.6;
    double best = 0.0;
    int best_candidate = -1;
    bool tie = false;
    for (std::size_t ci = 0; ci < slate.size(); ++ci) {
        double candidate_best = 0.0;
        for (const auto& alias : slate[ci]->aliases) {
            const std::u32string a = utf8_decode(normalize_whitespace(alias));
            if (a.empty()) continue;
            const std::size_t lcs = longest_common_substring(t, a);
            const double coverage =
                static_cast<double>(lcs) / static_cast<double>(std::min(t.size(), a.size()));
            candidate_best = std::max(candidate_best, coverage);
        }
        if (candidate_best > best) {
            best = candidate_best;
            best_candidate = static_cast<int>(ci);
            tie = false;
        } else if (candidate_best == best && best > 0.0) {
            tie = true;
        }
    }
    if (best_candidate < 0 || best < kCoverageThreshold || tie) return std::nullopt;
    return slate[best_candidate]->name;
}

ParsedVote parse_vote_response(const std::string& raw,
                               const std::vector<const Candidate*>& slate) {
    ParsedVote out;
    const auto obj = extract_json_object(raw);
    if (!obj) return out;  // unparseable

    const auto vote_it = obj->find("vote");
    if (vote_it == obj->end() || !vote_it->is_string()) return out;  // unparseable

    if (const auto r = obj->find("reasoning"); r != obj->end() && r->is_string())
        out.reasoning = r->get<std::string>();
    if (const auto c = obj->find("confidence"); c != obj->end() && c->is_number())
        out.confidence = std::clamp(c->get<double>(), 0.0, 1.0);

    const std::string vote = normalize_whitespace(vote_it->get<std::string>());
    if (is_abstain_token(vote)) {
        out.status = ParsedVote::Status::abstained;
        out.vote = kAbstainVote;
        out.method = MatchMethod::abstained;
        return out;
    }
    for (const Candidate* c : slate) {
        if (vote == c->name) {
            out.status = ParsedVote::Status::matched;
            out.vote = c->name;
            out.method = MatchMethod::exact;
            return out;
        }
    }
    for (const Candidate* c : slate) {
        for (const auto& alias : c->aliases) {
            if (vote == alias) {
                out.status = ParsedVote::Status::matched;
                out.vote = c->name;
                out.method = MatchMethod::exact;
                return out;
            }
        }
    }
    if (const auto name = fuzzy_match_candidate(vote, slate)) {
        out.status = ParsedVote::Status::matched;
        out.vote = *name;
        out.method = MatchMethod::fuzzy;
        return out;
    }
    out.status = ParsedVote::Status::unmatched;
    return out;
}

// --------------------------------------------------------------------------- backends

void BackendConfig::validate() const {
    if (temperature < 0.0) throw ValidationError("backend temperature must be >= 0");
    if (request_parallelism < 1) throw ValidationError("request_parallelism must be >= 1");
    if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
    if (endpoint.empty()) throw ValidationError("backend endpoint is empty");
}

namespace {

class MockBackend final : public DecisionBackend {
public:
    explicit MockBackend(const BackendConfig& config)
        : policy_(config.mock), priors_(BeliefPriors::defaults()) {}

    std::string complete(const DecisionRequest& req) override {
        const int n = ++served_;
        if (policy_.fail_after_requests > 0 && n > policy_.fail_after_requests)
            throw BackendError("mock endpoint down after " +
                               std::to_string(policy_.fail_after_requests) + " requests");
        assert_prompt_structure(req);

        const AgentRecord& agent = *req.agent;
        if (policy_.force_unparseable.count(agent.agent_id))
            return "모의 응답 오류: 형식 없는 텍스트 출력 (JSON 아님)";

        Rng rng = Rng::stream(req.seed, {kTagMock, Rng::hash_str(req.model_id),
                                         static_cast<std::uint64_t>(agent.agent_id),
                                         static_cast<std::uint64_t>(req.attempt)});

        if (rng.uniform() < policy_.abstain_rate) {
            return json{{"reasoning", "마음에 드는 후보가 없어 투표하지 않기로 했다."},
                        {"vote", "기권"},
                        {"confidence", 0.3}}
                .dump();
        }

        const Candidate* choice = pick_candidate(agent, req, rng);
        std::string vote_text = choice->name;
        if (rng.uniform() < policy_.fuzzy_suffix_rate) vote_text += " 후보";

        std::string reasoning = std::string(sido_korean_name(agent.sido)) + "에 사는 " +
                                std::to_string(agent.age / 10 * 10) + "대 유권자로서 " + choice->name +
                                " 후보의 공약이 가장 와닿는다.";
        if (req.slate.size() > 1 && rng.uniform() < policy_.mention_considered_rate) {
            const Candidate* considered = pick_other(req.slate, choice, rng);
            reasoning += " " + considered->name + " 후보도 고려했지만 마음이 가지 않았다.";
        }
        const double confidence = std::round((0.55 + 0.4 * rng.uniform()) * 100.0) / 100.0;
        return json{{"reasoning", reasoning}, {"vote", vote_text}, {"confidence", confidence}}.dump();
    }

private:
    void assert_prompt_structure(const DecisionRequest& req) const {
        const bool full = req.system_prompt.find(kMarkerDemographics) != std::string::npos &&
                          req.system_prompt.find(kMarkerInstructions) != std::string::npos;
        const bool vanilla = req.system_prompt.find(kMarkerVanilla) != std::string::npos;
        if (!full && !vanilla)
            throw ValidationError("mock backend: system prompt has neither the full blocks nor "
                                  "the vanilla framing");
        if (req.user_prompt.find(kMarkerBallot) == std::string::npos ||
            req.user_prompt.find(kMarkerJson) == std::string::npos)
            throw ValidationError("mock backend: user prompt lacks ballot or response format");
        for (const Candidate* c : req.slate) {
            if (req.user_prompt.find(c->name) == std::string::npos)
                throw ValidationError("mock backend: user prompt does not list candidate " + c->name);
        }
    }

    const Candidate* first_with(const std::vector<const Candidate*>& slate, Orientation o) const {
        for (const Candidate* c : slate)
            if (c->orientation == o) return c;
        return nullptr;
    }

    // Softmax over closeness of the agent's beliefs to each candidate
    // orientation's prior means; used where simple bloc loyalty does not apply.
    const Candidate* belief_closeness_pick(const AgentRecord& agent,
                                           const std::vector<const Candidate*>& slate,
                                           const Candidate* exclude, Rng& rng) const {
        std::vector<const Candidate*> pool;
        std::vector<double> weights;
        for (const Candidate* c : slate) {
            if (c == exclude) continue;
            double dist = 0.0;
            for (int d = 0; d < 5; ++d)
                dist += std::abs(agent.beliefs[d] - priors_.at(c->orientation, d).mu);
            dist /= 5.0;
            pool.push_back(c);
            weights.push_back(std::exp(-dist / 0.1));
        }
        if (pool.empty()) return slate.front();
        double total = 0.0;
        for (double w : weights) total += w;
        double u = rng.uniform() * total;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return pool[i];
        }
        return pool.back();
    }

    const Candidate* pick_candidate(const AgentRecord& agent, const DecisionRequest& req, Rng& rng) {
        const auto& slate = req.slate;
        if (policy_.position_bonus > 0.0 && rng.uniform() < policy_.position_bonus)
            return slate.front();

        if (agent.orientation == Orientation::moderate) {
            const Candidate* cons = first_with(slate, Orientation::conservative);
            const Candidate* prog = first_with(slate, Orientation::progressive);
            const bool mitigated = req.system_prompt.find(kMarkerBalance) != std::string::npos;
            const double p_prog = mitigated ? policy_.moderate_progressive_rate
                                            : policy_.moderate_progressive_rate_unmitigated;
            if (cons && prog) return rng.uniform() < p_prog ? prog : cons;
            return belief_closeness_pick(agent, slate, nullptr, rng);
        }

        const Candidate* target = first_with(slate, agent.orientation);
        if (!target) return belief_closeness_pick(agent, slate, nullptr, rng);
        if (rng.uniform() < policy_.loyalty) return target;
        if (slate.size() == 1) return target;
        return belief_closeness_pick(agent, slate, target, rng);
    }

    const Candidate* pick_other(const std::vector<const Candidate*>& slate, const Candidate* voted,
                                Rng& rng) const {
        std::vector<const Candidate*> others;
        for (const Candidate* c : slate)
            if (c != voted) others.push_back(c);
        return others[rng.below(others.size())];
    }

    MockPolicy policy_;
    BeliefPriors priors_;
    std::atomic<int> served_{0};
};

class HttpBackend final : public DecisionBackend {
public:
    explicit HttpBackend(const BackendConfig& config) : config_(config) {
        std::string url = config.endpoint;
        if (url.rfind("http://", 0) != 0)
            throw ValidationError("backend endpoint must be MOCK or an http:// URL, got " + url);
        url = url.substr(7);
        const auto slash = url.find('/');
        host_part_ = url.substr(0, slash);
        path_ = slash == std::string::npos ? "" : url.substr(slash);
        if (path_.empty() || path_ == "/") path_ = "/v1/chat/completions";
        if (const char* key = std::getenv("PSEPHOS_API_KEY")) api_key_ = key;
    }

    std::string complete(const DecisionRequest& req) override {
        json body;
        body["model"] = req.model_id;
        body["messages"] = json::array({json{{"role", "system"}, {"content", req.system_prompt}},
                                        json{{"role", "user"}, {"content", req.user_prompt}}});
        body["temperature"] = config_.temperature;
        body["max_tokens"] = config_.max_tokens;
        if (config_.structured_output) body["response_format"] = {{"type", "json_object"}};

        httplib::Client client(host_part_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        client.set_connection_timeout(secs.count(), 0);
        client.set_read_timeout(secs.count(), 0);
        client.set_write_timeout(secs.count(), 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        const auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res)
            throw BackendError("endpoint unreachable: " + config_.endpoint + " (" +
                               httplib::to_string(res.error()) + ")");
        if (res->status != 200)
            throw BackendError("endpoint returned status " + std::to_string(res->status));
        try {
            const json j = json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
            throw BackendError(std::string("malformed completion response: ") + e.what());
        }
    }

private:
    BackendConfig config_;
    std::string host_part_;
    std::string path_;
    std::string api_key_;
};

}  // namespace

std::unique_ptr<DecisionBackend> make_backend(const BackendConfig& config) {
    config.validate();
    if (config.endpoint == "MOCK") return std::make_unique<MockBackend>(config);
    return std::make_unique<HttpBackend>(config);
}

// --------------------------------------------------------------------------- driver

std::string_view to_token(MatchMethod m) {
    switch (m) {
        case MatchMethod::exact: return "exact";
        case MatchMethod::fuzzy: return "fuzzy";
        case MatchMethod::abstained: return "abstained";
    }
    throw ValidationError("bad match method");
}

MatchMethod parse_match_method(std::string_view tok) {
    if (tok == "exact") return MatchMethod::exact;
    if (tok == "fuzzy") return MatchMethod::fuzzy;
    if (tok == "abstained") return MatchMethod::abstained;
    throw ParseError("unknown match method: '" + std::string(tok) + "'");
}

namespace {

VoteRecord decide_one(const AgentRecord& agent, const ElectionScenario& scenario,
                      const BackendConfig& config, DecisionBackend& backend, std::uint64_t seed) {
    DecisionRequest req;
    req.agent = &agent;
    req.slate = slate_for(scenario, agent.sido);
    req.system_prompt = build_system_prompt(agent, scenario.prompt_variant);
    req.user_prompt = build_user_prompt(agent, scenario);
    req.model_id = config.model_id;
    req.seed = seed;

    VoteRecord rec;
    rec.agent_id = agent.agent_id;
    rec.election_id = scenario.election_id;
    rec.model_id = config.model_id;

    std::string last_raw;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        req.attempt = attempt;
        std::string raw;
        try {
            raw = backend.complete(req);
        } catch (const BackendError&) {
            // Transport failures share the retry budget; exhausting it aborts
            // the run (the driver checkpoints completed records).
            if (attempt == config.max_retries) throw;
            continue;
        }
        last_raw = raw;
        const ParsedVote parsed = parse_vote_response(raw, req.slate);
        if (parsed.status == ParsedVote::Status::matched) {
            rec.vote = parsed.vote;
            rec.reasoning = parsed.reasoning;
            rec.confidence = parsed.confidence;
            rec.raw_response = raw;
            rec.match_method = parsed.method;
            return rec;
        }
        if (parsed.status == ParsedVote::Status::abstained) {
            rec.vote = kAbstainVote;
            rec.reasoning = parsed.reasoning;
            rec.confidence = parsed.confidence;
            rec.raw_response = raw;
            rec.match_method = MatchMethod::abstained;
            return rec;
        }
        // unparseable or unmatched: retry
    }
    rec.vote = kAbstainVote;
    rec.reasoning = "";
    rec.confidence = 0.0;
    rec.raw_response = last_raw;
    rec.match_method = MatchMethod::abstained;
    return rec;
}

}  // namespace

SimulationOutcome run_simulation_partial(const std::vector<AgentRecord>& agents,
                                         const ElectionScenario& scenario,
                                         const BackendConfig& config, std::uint64_t seed) {
    config.validate();
    scenario.validate();
    for (const auto& a : agents) {
        if (a.stage != Stage::full)
            throw ValidationError("simulation needs stage full agents; agent " +
                                  std::to_string(a.agent_id) + " is at stage " +
                                  std::string(to_token(a.stage)));
    }
    const auto backend = make_backend(config);

    std::vector<std::optional<VoteRecord>> slots(agents.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex error_mutex;
    std::string transport_error;
    std::exception_ptr fatal;

    auto worker = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= agents.size()) return;
            try {
                slots[i] = decide_one(agents[i], scenario, config, *backend, seed);
            } catch (const BackendError& e) {
                std::lock_guard lock(error_mutex);
                if (transport_error.empty()) transport_error = e.what();
                stop = true;
                return;
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!fatal) fatal = std::current_exception();
                stop = true;
                return;
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(config.request_parallelism,
                                                    static_cast<int>(agents.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    SimulationOutcome outcome;
    for (auto& slot : slots) {
        if (slot) outcome.records.push_back(std::move(*slot));
    }
    std::sort(outcome.records.begin(), outcome.records.end(),
              [](const VoteRecord& a, const VoteRecord& b) { return a.agent_id < b.agent_id; });
    if (!transport_error.empty()) {
        outcome.aborted = true;
        outcome.error = transport_error;
    }
    return outcome;
}

std::vector<VoteRecord> run_simulation(const std::vector<AgentRecord>& agents,
                                       const ElectionScenario& scenario,
                                       const BackendConfig& config, std::uint64_t seed) {
    auto outcome = run_simulation_partial(agents, scenario, config, seed);
    if (outcome.aborted)
        throw BackendError("simulation aborted after " + std::to_string(outcome.records.size()) +
                           " records: " + outcome.error);
    return std::move(outcome.records);
}

std::size_t simulate_to_file(const std::vector<AgentRecord>& agents,
                             const ElectionScenario& scenario, const BackendConfig& config,
                             std::uint64_t seed, const std::filesystem::path& out_path) {
    const auto part_path = std::filesystem::path(out_path.string() + ".part");

    std::map<std::int64_t, VoteRecord> done;
    for (const auto& path : {out_path, part_path}) {
        if (!std::filesystem::exists(path)) continue;
        for (auto& rec : read_votes(path)) {
            if (rec.election_id != scenario.election_id || rec.model_id != config.model_id)
                throw ValidationError(path.string() + " holds records for a different run (" +
                                      rec.election_id + "/" + rec.model_id + ")");
            done.emplace(rec.agent_id, std::move(rec));
        }
    }

    std::vector<AgentRecord> remaining;
    for (const auto& a : agents) {
        if (!done.count(a.agent_id)) remaining.push_back(a);
    }

    auto outcome = run_simulation_partial(remaining, scenario, config, seed);
    for (auto& rec : outcome.records) done.emplace(rec.agent_id, std::move(rec));

    std::vector<VoteRecord> merged;
    merged.reserve(done.size());
    for (auto& [id, rec] : done) merged.push_back(std::move(rec));

    if (outcome.aborted) {
        write_votes(part_path, merged);
        throw BackendError("simulation aborted (" + outcome.error + "); " +
                           std::to_string(merged.size()) + " records checkpointed to " +
                           part_path.string());
    }

    const auto tmp_path = std::filesystem::path(out_path.string() + ".tmp");
    write_votes(tmp_path, merged);
    std::filesystem::rename(tmp_path, out_path);
    std::error_code ec;
    std::filesystem::remove(part_path, ec);
    return outcome.records.size();
}

// --------------------------------------------------------------------------- JSONL io

namespace {

json vote_to_json(const VoteRecord& r) {
    return json{{"agent_id", r.agent_id},
                {"election_id", r.election_id},
                {"model_id", r.model_id},
                {"vote", r.vote},
                {"reasoning", r.reasoning},
                {"confidence", r.confidence},
                {"raw_response", r.raw_response},
                {"match_method", std::string(to_token(r.match_method))}};
}

VoteRecord vote_from_json(const json& j) {
    VoteRecord r;
    r.agent_id = j.at("agent_id").get<std::int64_t>();
    r.election_id = j.at("election_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.vote = j.at("vote").get<std::string>();
    r.reasoning = j.at("reasoning").get<std::string>();
    r.confidence = j.at("confidence").get<double>();
    r.raw_response = j.at("raw_response").get<std::string>();
    r.match_method = parse_match_method(j.at("match_method").get<std::string>());
    return r;
}

}  // namespace

void write_votes(const std::filesystem::path& path, const std::vector<VoteRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write votes file: " + path.string());
    out << json{{"schema_version", 1}, {"kind", "votes"}}.dump() << "\n";
    for (const auto& r : records) out << vote_to_json(r).dump() << "\n";
    if (!out) throw IoError("error writing votes file: " + path.string());
}

std::vector<VoteRecord> read_votes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open votes file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty votes file");
    json header;
    try {
        header = json::parse(line);
    } catch (const std::exception& e) {
        throw ParseError(path.string() + ": bad header line: " + e.what());
    }
    if (header.value("kind", "") != "votes" || header.value("schema_version", 0) != 1)
        throw ValidationError(path.string() + ": unsupported votes schema, migration required");

    std::vector<VoteRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(vote_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace psephos
