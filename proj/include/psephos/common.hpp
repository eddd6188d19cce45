#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace psephos {

// Error taxonomy. The CLI maps these onto distinct exit codes.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class DependencyError : public std::runtime_error {
public:
    explicit DependencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Core demographic domains. Enum order is load-bearing: it is the canonical
// tie-break order for allocation and the column order of serialized tables.

enum class AgeBracket : std::uint8_t {
    a18_19, a20_24, a25_29, a30_34, a35_39, a40_44, a45_49,
    a50_54, a55_59, a60_64, a65_69, a70_74, a75_79, a80_plus,
};
inline constexpr int kAgeBracketCount = 14;

enum class Sex : std::uint8_t { male, female };
inline constexpr int kSexCount = 2;

enum class Sido : std::uint8_t {
    seoul, busan, daegu, incheon, gwangju, daejeon, ulsan, sejong,
    gyeonggi, gangwon, chungbuk, chungnam, jeonbuk, jeonnam,
    gyeongbuk, gyeongnam, jeju,
};
inline constexpr int kSidoCount = 17;

enum class Education : std::uint8_t { middle_or_less, high_school, university, graduate };
inline constexpr int kEducationCount = 4;

enum class Marital : std::uint8_t { never_married, married, divorced, widowed };
inline constexpr int kMaritalCount = 4;

// Coarse survey regions the 17 sidos map onto.
enum class Region : std::uint8_t {
    capital, gangwon, chungcheong, jeolla, gyeongbuk, gyeongnam, jeju,
};
inline constexpr int kRegionCount = 7;

enum class Orientation : std::uint8_t { conservative, moderate, progressive };
inline constexpr int kOrientationCount = 3;

enum class OrientationDetail : std::uint8_t {
    very_conservative, conservative, moderate, progressive, very_progressive,
};

enum class IncomeLevel : std::uint8_t { low, mid_low, mid, mid_high, high };
enum class IdentityStrength : std::uint8_t { low, mid, high };

// ---------------------------------------------------------------------------
// Token tables. These are the exact strings used in CSV/JSON artifacts.

std::string_view to_token(AgeBracket v);
std::string_view to_token(Sex v);
std::string_view to_token(Sido v);
std::string_view to_token(Education v);
std::string_view to_token(Marital v);
std::string_view to_token(Region v);
std::string_view to_token(Orientation v);
std::string_view to_token(OrientationDetail v);
std::string_view to_token(IncomeLevel v);
std::string_view to_token(IdentityStrength v);

AgeBracket parse_age_bracket(std::string_view tok);
Sex parse_sex(std::string_view tok);
Sido parse_sido(std::string_view tok);
Education parse_education(std::string_view tok);
Marital parse_marital(std::string_view tok);
Region parse_region(std::string_view tok);
Orientation parse_orientation(std::string_view tok);
OrientationDetail parse_orientation_detail(std::string_view tok);
IncomeLevel parse_income_level(std::string_view tok);
IdentityStrength parse_identity_strength(std::string_view tok);

// Korean display name of a sido, used in prompts and fixture text.
const char* sido_korean_name(Sido sido);

// Inclusive integer age range of a bracket. The open-ended top bracket is
// capped at 99 so uniform age draws stay bounded.
struct AgeRange {
    int lo;
    int hi;
};
AgeRange age_bracket_range(AgeBracket b);
AgeBracket bracket_for_age(int age);

Orientation orientation_of(OrientationDetail d);
// Plain (non-"very") detail level of an orientation.
OrientationDetail plain_detail(Orientation o);
bool is_very_detail(OrientationDetail d);

// ---------------------------------------------------------------------------
// Small string helpers shared across parsers.

std::string trim(std::string_view s);
// Collapses whitespace runs to single spaces and trims the ends.
std::string normalize_whitespace(std::string_view s);
// Decodes UTF-8 into codepoints; invalid bytes decode as U+FFFD.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(const std::u32string& s);

std::string format_double(double v, int decimals);
// Shortest decimal representation that parses back to the same double.
std::string repr_double(double v);

}  // namespace psephos
