#include "emotionpush/folds.hpp"

#include <numeric>
#include <string>

#include "emotionpush/error.hpp"
#include "emotionpush/random.hpp"

namespace emotionpush {

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > n) {
    throw InvalidArgument("kfold_split: need 1 <= k <= n, got k=" + std::to_string(k) + " n=" + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(derive_seed({seed, 0x6b666f6cULL}));
  shuffle(std::span(order), rng);

  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) {
    folds[i % k].push_back(order[i]);
  }
  return folds;
}

std::vector<std::size_t> stratified_fold_assignment(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > labels.size()) {
    throw InvalidArgument("stratified folds: need 1 <= k <= n");
  }
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] > 0 ? pos : neg).push_back(i);
  }
  CounterRng rng(derive_seed({seed, 0x7374726174ULL}));
  shuffle(std::span(pos), rng);
  shuffle(std::span(neg), rng);

  std::vector<std::size_t> fold(labels.size());
  std::size_t slot = 0;
  for (std::size_t i : pos) fold[i] = slot++ % k;
  for (std::size_t i : neg) fold[i] = slot++ % k;
  return fold;
}

}  // namespace emotionpush
