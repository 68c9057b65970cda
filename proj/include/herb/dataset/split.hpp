#pragma once

#include <array>
#include <cstdint>

#include "herb/dataset/manifest.hpp"

namespace herb::dataset {

struct SplitSpec {
    // train, validation, test
    std::array<double, 3> ratios{0.75, 0.125, 0.125};
    std::uint64_t seed = 0;
};

struct SplitCounts {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
};

// Throws std::invalid_argument if ratios are negative or do not sum to 1 within 1e-9.
void check_split_spec(const SplitSpec& spec);

// Per-class allocation: validation and test get round(ratio * n) with exact
// halves rounded down; train receives the remainder.
SplitCounts split_counts(std::size_t n, const SplitSpec& spec);

// Assigns every record to exactly one split, class by class. Each class's
// records (in manifest order) are shuffled with Rng(spec.seed, stream_id(label))
// via Fisher-Yates, then the first `train` go to train, the next `validation`
// to validation, the rest to test.
DatasetManifest stratified_split(const DatasetManifest& manifest, const SplitSpec& spec);

SplitCounts tally(const DatasetManifest& manifest);

}  // namespace herb::dataset
