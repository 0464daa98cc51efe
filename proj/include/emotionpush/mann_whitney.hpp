#pragma once

#include <cstddef>
#include <span>

namespace emotionpush::service {

struct MannWhitneyResult {
  double u = 0.0;   // U statistic of the first sample: R_a - n_a (n_a + 1) / 2
  double p = 1.0;   // two-sided
  bool exact = false;
};

// Largest combined sample size for which the exact null distribution is
// enumerated (when there are no ties).
inline constexpr std::size_t kExactMannWhitneyLimit = 12;

// Two-sided Mann-Whitney U test. Exact p by enumerating the null
// distribution when |a| + |b| <= 12 and no ties; otherwise the normal
// approximation with tie and continuity corrections. Throws InvalidArgument
// on an empty sample.
MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b);

}  // namespace emotionpush::service
