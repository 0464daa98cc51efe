#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emotionpush/corpus.hpp"

namespace emotionpush::eval {

// Per-label balanced sampling sizes. Defaults are the full-scale protocol
// (800 positives, 800 negatives, 200 held-out positives per label).
struct SamplingPlan {
  std::size_t n_pos = 800;
  std::size_t n_neg = 800;
  std::size_t heldout_per_label = 200;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SamplingPlan&, const SamplingPlan&) = default;
};

// Document indices. Held-out negatives match the held-out positive count.
struct BalancedSample {
  std::vector<std::size_t> train_pos;
  std::vector<std::size_t> train_neg;
  std::vector<std::size_t> heldout_pos;
  std::vector<std::size_t> heldout_neg;
};

// Seeded uniform sampling without replacement. `doc_labels[i]` is the label
// of document i under the active label set. Positives are documents of
// `label`; negatives come uniformly from every other document. Held-out
// picks never overlap training picks. Throws InvalidArgument naming the
// label and shortfall when there are too few documents.
BalancedSample balanced_sample(std::span<const std::string> doc_labels, const std::string& label,
                               const SamplingPlan& plan);
BalancedSample balanced_sample(const corpus::Corpus& corpus, const std::string& label, const SamplingPlan& plan);

}  // namespace emotionpush::eval
