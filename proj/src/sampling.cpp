#include "emotionpush/sampling.hpp"

#include "emotionpush/crc32.hpp"
#include "emotionpush/error.hpp"
#include "emotionpush/random.hpp"

namespace emotionpush::eval {

void SamplingPlan::validate() const {
  if (n_pos == 0 || n_neg == 0 || heldout_per_label == 0) {
    throw InvalidArgument("sampling plan: n_pos, n_neg and heldout_per_label must be positive");
  }
}

BalancedSample balanced_sample(std::span<const std::string> doc_labels, const std::string& label,
                               const SamplingPlan& plan) {
  plan.validate();
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < doc_labels.size(); ++i) {
    (doc_labels[i] == label ? pos : neg).push_back(i);
  }
  const std::size_t need_pos = plan.n_pos + plan.heldout_per_label;
  if (pos.size() < need_pos) {
    throw InvalidArgument("label " + label + ": need " + std::to_string(need_pos) + ", have " +
                          std::to_string(pos.size()));
  }
  const std::size_t need_neg = plan.n_neg + plan.heldout_per_label;
  if (neg.size() < need_neg) {
    throw InvalidArgument("label " + label + ": need " + std::to_string(need_neg) + " negatives, have " +
                          std::to_string(neg.size()));
  }

  // The stream depends on the label name, not its position, so a label's
  // sample does not change when other labels are added or removed.
  CounterRng rng(derive_seed({plan.seed, crc32(label), label.size()}));
  shuffle(std::span(pos), rng);
  shuffle(std::span(neg), rng);

  BalancedSample out;
  out.train_pos.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(plan.n_pos));
  out.heldout_pos.assign(pos.begin() + static_cast<std::ptrdiff_t>(plan.n_pos),
                         pos.begin() + static_cast<std::ptrdiff_t>(need_pos));
  out.train_neg.assign(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(plan.n_neg));
  out.heldout_neg.assign(neg.begin() + static_cast<std::ptrdiff_t>(plan.n_neg),
                         neg.begin() + static_cast<std::ptrdiff_t>(need_neg));
  return out;
}

BalancedSample balanced_sample(const corpus::Corpus& corpus, const std::string& label, const SamplingPlan& plan) {
  std::vector<std::string> labels;
  labels.reserve(corpus.size());
  for (const auto& doc : corpus.documents) labels.push_back(doc.fine_label);
  return balanced_sample(labels, label, plan);
}

}  // namespace emotionpush::eval
