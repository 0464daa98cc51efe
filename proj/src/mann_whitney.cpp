#include "emotionpush/mann_whitney.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "emotionpush/error.hpp"

namespace emotionpush::service {
namespace {

// counts[u] = number of arrangements of m first-sample and n second-sample
// items whose U statistic equals u.
std::vector<double> u_distribution(std::size_t m, std::size_t n) {
  // table[i][j] holds the distribution for sizes (i, j).
  std::vector<std::vector<std::vector<double>>> table(m + 1, std::vector<std::vector<double>>(n + 1));
  for (std::size_t i = 0; i <= m; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      auto& dist = table[i][j];
      dist.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        dist[0] = 1.0;
        continue;
      }
      // Largest item belongs to the first sample (beats all j others) or the second.
      const auto& from_first = table[i - 1][j];
      for (std::size_t u = 0; u < from_first.size(); ++u) dist[u + j] += from_first[u];
      const auto& from_second = table[i][j - 1];
      for (std::size_t u = 0; u < from_second.size(); ++u) dist[u] += from_second[u];
    }
  }
  return table[m][n];
}

}  // namespace

MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw InvalidArgument("mann_whitney: both samples must be non-empty");
  }
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  const std::size_t n = na + nb;

  std::vector<std::pair<double, bool>> pooled;  // (value, from a)
  pooled.reserve(n);
  for (double v : a) pooled.emplace_back(v, true);
  for (double v : b) pooled.emplace_back(v, false);
  std::sort(pooled.begin(), pooled.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    const auto t = static_cast<double>(j - i + 1);
    if (j > i) {
      ties = true;
      tie_term += t * t * t - t;
    }
    for (std::size_t k = i; k <= j; ++k) {
      if (pooled[k].second) rank_sum_a += midrank;
    }
    i = j + 1;
  }

  MannWhitneyResult result;
  result.u = rank_sum_a - static_cast<double>(na) * static_cast<double>(na + 1) / 2.0;

  if (!ties && n <= kExactMannWhitneyLimit) {
    const auto counts = u_distribution(na, nb);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u = static_cast<std::size_t>(std::llround(result.u));
    const double lower = std::accumulate(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(u + 1), 0.0);
    const double upper = std::accumulate(counts.begin() + static_cast<std::ptrdiff_t>(u), counts.end(), 0.0);
    result.p = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    result.exact = true;
    return result;
  }

  const double mean = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
  const double nn = static_cast<double>(n);
  const double variance =
      static_cast<double>(na) * static_cast<double>(nb) / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (!(variance > 0.0)) {
    result.p = 1.0;
    return result;
  }
  const double z = std::max(0.0, std::abs(result.u - mean) - 0.5) / std::sqrt(variance);
  result.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return result;
}

}  // namespace emotionpush::service
