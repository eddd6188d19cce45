#include "psephos/common.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <cstring>
#include <cstdio>

namespace psephos {

namespace {

constexpr std::array<std::string_view, kAgeBracketCount> kAgeTokens = {
    "18-19", "20-24", "25-29", "30-34", "35-39", "40-44", "45-49",
    "50-54", "55-59", "60-64", "65-69", "70-74", "75-79", "80+",
};

constexpr std::array<std::string_view, kSexCount> kSexTokens = {"male", "female"};

constexpr std::array<std::string_view, kSidoCount> kSidoTokens = {
    "seoul",   "busan",    "daegu",    "incheon",  "gwangju", "daejeon",
    "ulsan",   "sejong",   "gyeonggi", "gangwon",  "chungbuk", "chungnam",
    "jeonbuk", "jeonnam",  "gyeongbuk", "gyeongnam", "jeju",
};

constexpr std::array<std::string_view, kEducationCount> kEduTokens = {
    "middle_or_less", "high_school", "university", "graduate",
};

constexpr std::array<std::string_view, kMaritalCount> kMaritalTokens = {
    "never_married", "married", "divorced", "widowed",
};

constexpr std::array<std::string_view, kRegionCount> kRegionTokens = {
    "capital", "gangwon", "chungcheong", "jeolla", "gyeongbuk", "gyeongnam", "jeju",
};

constexpr std::array<std::string_view, kOrientationCount> kOrientationTokens = {
    "conservative", "moderate", "progressive",
};

constexpr std::array<std::string_view, 5> kDetailTokens = {
    "very_conservative", "conservative", "moderate", "progressive", "very_progressive",
};

constexpr std::array<std::string_view, 5> kIncomeTokens = {
    "low", "mid_low", "mid", "mid_high", "high",
};

constexpr std::array<std::string_view, 3> kStrengthTokens = {"low", "mid", "high"};

template <typename E, std::size_t N>
E parse_enum(std::string_view tok, const std::array<std::string_view, N>& table,
             const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (table[i] == tok) return static_cast<E>(i);
    }
    throw ParseError(std::string("unknown ") + what + " token: '" + std::string(tok) + "'");
}

}  // namespace

std::string_view to_token(AgeBracket v) { return kAgeTokens[static_cast<int>(v)]; }
std::string_view to_token(Sex v) { return kSexTokens[static_cast<int>(v)]; }
std::string_view to_token(Sido v) { return kSidoTokens[static_cast<int>(v)]; }
std::string_view to_token(Education v) { return kEduTokens[static_cast<int>(v)]; }
std::string_view to_token(Marital v) { return kMaritalTokens[static_cast<int>(v)]; }
std::string_view to_token(Region v) { return kRegionTokens[static_cast<int>(v)]; }
std::string_view to_token(Orientation v) { return kOrientationTokens[static_cast<int>(v)]; }
std::string_view to_token(OrientationDetail v) { return kDetailTokens[static_cast<int>(v)]; }
std::string_view to_token(IncomeLevel v) { return kIncomeTokens[static_cast<int>(v)]; }
std::string_view to_token(IdentityStrength v) { return kStrengthTokens[static_cast<int>(v)]; }

AgeBracket parse_age_bracket(std::string_view t) { return parse_enum<AgeBracket>(t, kAgeTokens, "age_bracket"); }
Sex parse_sex(std::string_view t) { return parse_enum<Sex>(t, kSexTokens, "sex"); }
Sido parse_sido(std::string_view t) { return parse_enum<Sido>(t, kSidoTokens, "sido"); }
Education parse_education(std::string_view t) { return parse_enum<Education>(t, kEduTokens, "education"); }
Marital parse_marital(std::string_view t) { return parse_enum<Marital>(t, kMaritalTokens, "marital"); }
Region parse_region(std::string_view t) { return parse_enum<Region>(t, kRegionTokens, "region"); }
Orientation parse_orientation(std::string_view t) { return parse_enum<Orientation>(t, kOrientationTokens, "orientation"); }
OrientationDetail parse_orientation_detail(std::string_view t) { return parse_enum<OrientationDetail>(t, kDetailTokens, "orientation_detail"); }
IncomeLevel parse_income_level(std::string_view t) { return parse_enum<IncomeLevel>(t, kIncomeTokens, "income_level"); }
IdentityStrength parse_identity_strength(std::string_view t) { return parse_enum<IdentityStrength>(t, kStrengthTokens, "regional_identity_strength"); }

const char* sido_korean_name(Sido sido) {
    static constexpr std::array<const char*, kSidoCount> kNames = {
        "서울", "부산", "대구", "인천", "광주", "대전", "울산", "세종", "경기",
        "강원", "충북", "충남", "전북", "전남", "경북", "경남", "제주",
    };
    return kNames[static_cast<int>(sido)];
}

AgeRange age_bracket_range(AgeBracket b) {
    if (b == AgeBracket::a18_19) return {18, 19};
    if (b == AgeBracket::a80_plus) return {80, 99};
    const int i = static_cast<int>(b) - 1;  // a20_24 == 1
    return {20 + 5 * i, 24 + 5 * i};
}

AgeBracket bracket_for_age(int age) {
    if (age < 18) throw ValidationError("age below voting age: " + std::to_string(age));
    if (age <= 19) return AgeBracket::a18_19;
    if (age >= 80) return AgeBracket::a80_plus;
    return static_cast<AgeBracket>(1 + (age - 20) / 5);
}

Orientation orientation_of(OrientationDetail d) {
    switch (d) {
        case OrientationDetail::very_conservative:
        case OrientationDetail::conservative:
            return Orientation::conservative;
        case OrientationDetail::moderate:
            return Orientation::moderate;
        case OrientationDetail::progressive:
        case OrientationDetail::very_progressive:
            return Orientation::progressive;
    }
    throw ValidationError("bad orientation detail value");
}

OrientationDetail plain_detail(Orientation o) {
    switch (o) {
        case Orientation::conservative: return OrientationDetail::conservative;
        case Orientation::moderate: return OrientationDetail::moderate;
        case Orientation::progressive: return OrientationDetail::progressive;
    }
    throw ValidationError("bad orientation value");
}

bool is_very_detail(OrientationDetail d) {
    return d == OrientationDetail::very_conservative || d == OrientationDetail::very_progressive;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // leading whitespace dropped
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (c < 0x80) {
            cp = c;
        } else if ((c >> 5) == 0x6 && i + 1 < s.size()) {
            cp = static_cast<char32_t>((c & 0x1F) << 6 | (s[i + 1] & 0x3F));
            len = 2;
        } else if ((c >> 4) == 0xE && i + 2 < s.size()) {
            cp = static_cast<char32_t>((c & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F));
            len = 3;
        } else if ((c >> 3) == 0x1E && i + 3 < s.size()) {
            cp = static_cast<char32_t>((c & 0x07) << 18 | (s[i + 1] & 0x3F) << 12 |
                                       (s[i + 2] & 0x3F) << 6 | (s[i + 3] & 0x3F));
            len = 4;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string utf8_encode(const std::u32string& s) {
    std::string out;
    out.reserve(s.size() * 3);
    for (char32_t cp : s) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

std::string format_double(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string repr_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

}  // namespace psephos
