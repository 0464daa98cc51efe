#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emotionpush/corpus.hpp"
#include "emotionpush/embedding.hpp"
#include "emotionpush/ensemble.hpp"
#include "emotionpush/folds.hpp"
#include "emotionpush/matrix.hpp"
#include "emotionpush/sampling.hpp"
#include "emotionpush/svm.hpp"

namespace emotionpush::eval {

using emotionpush::kfold_split;

// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
// (positive, negative) pairs ranked correctly, ties counted as one half.
// O(n log n) via midranks. Throws InvalidArgument on single-class input.
double auc(std::span<const double> scores, std::span<const int> labels);

struct GridSpec {
  std::vector<double> c_values;
  std::vector<double> gamma_values;
  std::size_t folds = 10;

  // C in {2^-3, 2^-1, 2, 2^3, 2^5}, gamma in {2^-7, 2^-5, 2^-3, 2^-1}, 10 folds.
  static GridSpec defaults();
  void validate() const;
};

GridSpec grid_spec_from_json(const nlohmann::json& doc);  // {"c": [...], "gamma": [...], "folds": k}

struct GridCell {
  double c = 0.0;
  double gamma = 0.0;
  double cv_auc = 0.0;
};

struct GridResult {
  double c = 0.0;
  double gamma = 0.0;
  double cv_auc = 0.0;
  std::vector<GridCell> cells;  // ascending C, then ascending gamma
};

// Stratified k-fold CV over every (C, gamma) cell: mean of per-fold AUCs of
// held-out decision values. The best cell wins; ties go to smaller C, then
// smaller gamma. `base` supplies kkt_eps, max_iter, cache size and seed.
GridResult grid_search(const FeatureMatrix& train_pos, const FeatureMatrix& train_neg, const GridSpec& grid,
                       const svm::TrainParams& base = {});

// Document-level variant: embeds the texts first.
GridResult grid_search(std::span<const std::string> pos_texts, std::span<const std::string> neg_texts,
                       const embedding::EmbeddingTable& table, const GridSpec& grid,
                       const svm::TrainParams& base = {});

struct HeldoutSet {
  std::string label;
  FeatureMatrix positives;
  FeatureMatrix negatives;
};

struct LabelScore {
  std::string label;
  double auc = 0.0;
  std::optional<double> c;
  std::optional<double> gamma;
};

struct EvalReport {
  ensemble::Mode mode = ensemble::Mode::kFine;
  std::vector<LabelScore> labels;
  double mean_auc = 0.0;
  bool heldout_disjoint = true;  // caller-asserted

  const LabelScore& score(const std::string& label) const;

  // {"mode":..., "mean_auc":..., "labels": {label: {"auc":..., "c":..., "gamma":...}}}
  nlohmann::ordered_json to_json() const;
  // Aligned columns, AUCs to four decimals.
  std::string to_text() const;
};

// Per-label held-out AUC of predict_proba scores and their unweighted mean.
EvalReport evaluate(const ensemble::EnsembleModel& model, std::span<const HeldoutSet> heldout);

struct ProtocolConfig {
  ensemble::Mode mode = ensemble::Mode::kFine;
  SamplingPlan sampling;
  GridSpec grid = GridSpec::defaults();
  svm::TrainParams base;
  std::size_t threads = 0;
};

// Balanced sampling, grid search and final training for every active label.
// The chosen parameters and the sampling plan are recorded in the model.
ensemble::EnsembleModel tune_and_train(const corpus::Corpus& corpus, const embedding::EmbeddingTable& table,
                                       const ensemble::TaxonomyConfig& config, const ProtocolConfig& protocol);

// Rebuilds each label's held-out set from the sampling plan recorded in the
// model and evaluates on it. Throws InvalidArgument if the model has none.
std::vector<HeldoutSet> heldout_sets(const ensemble::EnsembleModel& model, const corpus::Corpus& corpus,
                                     const embedding::EmbeddingTable& table);
EvalReport evaluate_heldout(const ensemble::EnsembleModel& model, const corpus::Corpus& corpus,
                            const embedding::EmbeddingTable& table);

}  // namespace emotionpush::eval
