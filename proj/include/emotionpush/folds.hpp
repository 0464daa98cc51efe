#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace emotionpush {

// Seeded partition of 0..n-1 into k folds whose sizes differ by at most one.
// Throws InvalidArgument when k < 1 or k > n.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

// Like kfold_split, but positives (label > 0) and negatives are dealt
// separately so every fold keeps the class ratio. Returns the fold index of
// each sample.
std::vector<std::size_t> stratified_fold_assignment(std::span<const int> labels, std::size_t k, std::uint64_t seed);

}  // namespace emotionpush
