#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emotionpush/corpus.hpp"
#include "emotionpush/embedding.hpp"
#include "emotionpush/sampling.hpp"
#include "emotionpush/svm.hpp"
#include "emotionpush/taxonomy.hpp"

namespace emotionpush::ensemble {

// coarse7 trains one classifier per coarse label, fine40 one per fine label.
enum class Mode { kCoarse, kFine };

std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view text);  // "coarse7" | "fine40"

// Hyper-parameters a classifier was trained with; cv_auc is set when they
// came out of a grid search.
struct LabelTraining {
  double c = 1.0;
  double gamma = 0.0;
  std::optional<double> cv_auc;

  friend bool operator==(const LabelTraining&, const LabelTraining&) = default;
};

struct TrainingRecord {
  eval::SamplingPlan sampling;
  std::map<std::string, LabelTraining> labels;

  friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

struct EnsembleModel {
  TaxonomyConfig config;
  Mode mode = Mode::kCoarse;
  std::vector<std::string> labels;             // active label set, taxonomy order
  std::vector<svm::SvmModel> classifiers;      // parallel to labels
  std::string embedding_table_id;
  std::string version = "1";
  std::optional<TrainingRecord> training;

  std::size_t dim() const noexcept { return classifiers.empty() ? 0 : classifiers.front().dim; }
  // Throws NotFound.
  const svm::SvmModel& classifier(std::string_view label) const;

  friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;
};

// Labels a mode trains: coarse labels in coarse mode, fine labels otherwise.
const std::vector<std::string>& active_labels(const Taxonomy& taxonomy, Mode mode);

// Label of every document under `mode` (compacted in coarse mode).
std::vector<std::string> document_labels(const corpus::Corpus& corpus, const Taxonomy& taxonomy, Mode mode);

struct ClassificationResult {
  std::vector<std::string> labels;       // active labels, taxonomy order
  std::vector<double> probabilities;     // independent per-label, not normalized
  std::vector<double> decision_values;
  std::string predicted;
  std::string coarse;                    // compaction of predicted (identity in coarse mode)
  std::string color;
  bool no_tokens = false;

  double probability(std::string_view label) const;
};

// Index of the largest value; the first one wins ties.
std::size_t argmax_first(std::span<const double> values);

ClassificationResult classify_features(const EnsembleModel& model, const embedding::FeatureVector& features);
// Throws InvalidArgument when the table dimension differs from the classifiers'.
ClassificationResult classify(const EnsembleModel& model, const embedding::EmbeddingTable& table,
                              std::string_view text);

// {"emotion", "color", "probabilities", "no_tokens"}: the body returned by
// the service's classify endpoint and the CLI classify subcommand.
nlohmann::ordered_json to_json(const ClassificationResult& result);

struct TrainPlan {
  eval::SamplingPlan sampling;
  svm::TrainParams defaults;
  std::map<std::string, svm::TrainParams> per_label;  // overrides defaults
  std::map<std::string, double> cv_auc;               // recorded, not used for training
  std::size_t threads = 0;                            // 0 = hardware concurrency

  const svm::TrainParams& params_for(const std::string& label) const;
};

// One balanced binary classifier per active label. Deterministic for fixed
// inputs regardless of thread count.
EnsembleModel train_ensemble(const corpus::Corpus& corpus, const embedding::EmbeddingTable& table,
                             const TaxonomyConfig& config, Mode mode, const TrainPlan& plan);

// Directory container: manifest.json plus one .epsvm file per classifier.
inline constexpr int kEnsembleFormatVersion = 1;
void save_ensemble(const EnsembleModel& model, const std::filesystem::path& dir);
EnsembleModel load_ensemble(const std::filesystem::path& dir);

// Manifest document written by save_ensemble (classifier files excluded).
nlohmann::ordered_json manifest_json(const EnsembleModel& model);

// File name used for a label's classifier blob.
std::string classifier_file_name(std::string_view label);

}  // namespace emotionpush::ensemble
