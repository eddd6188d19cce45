#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "psephos/population.hpp"

namespace psephos::test {

// Scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("psephos_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline AgentRecord make_full_agent(std::int64_t id, Orientation o, Sido sido = Sido::seoul,
                                   OrientationDetail detail = OrientationDetail::moderate) {
    AgentRecord a;
    a.agent_id = id;
    a.stage = Stage::full;
    a.age_bracket = AgeBracket::a35_39;
    a.age = 37;
    a.sex = id % 2 ? Sex::female : Sex::male;
    a.sido = sido;
    a.education = Education::university;
    a.marital = Marital::married;
    a.occupation = "사무직";
    a.income_level = IncomeLevel::mid;
    a.housing = "아파트";
    a.religion = "무교";
    a.media_source = "포털뉴스";
    a.regional_identity_strength = IdentityStrength::mid;
    a.orientation = o;
    a.orientation_detail = detail == OrientationDetail::moderate && o != Orientation::moderate
                               ? plain_detail(o)
                               : detail;
    a.beliefs = {0.5, 0.5, 0.5, 0.5, 0.5};
    return a;
}

}  // namespace psephos::test
