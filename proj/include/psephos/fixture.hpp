#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "psephos/common.hpp"

namespace psephos {

enum class FixtureScale { small, full };

// Writes a mutually consistent desk-scale input corpus: census table,
// conditional orientation counts (with one conservative-leaning and one
// progressive-leaning region planted), augmentation tables, turnout rates,
// region map, belief priors, and paired scenario / certified-result files.
// Byte-identical for equal seeds.
//
// The full-scale census carries exactly 5,790 non-empty cells of the 7,616
// cross-product; the small scale keeps 3 cells per (sido, age bracket).
std::vector<std::filesystem::path> generate_fixture_corpus(std::uint64_t seed, FixtureScale scale,
                                                           const std::filesystem::path& out_dir);

// Planted leanings, used by tests and the calibration regional check.
inline constexpr auto kFixtureConservativeRegion = Region::gyeongbuk;
inline constexpr auto kFixtureProgressiveRegion = Region::jeolla;

}  // namespace psephos
