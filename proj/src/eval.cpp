#include "emotionpush/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "emotionpush/error.hpp"
#include "emotionpush/parallel.hpp"

namespace emotionpush::eval {
namespace {

FeatureMatrix stack_rows(const std::vector<embedding::FeatureVector>& features, std::span<const std::size_t> picks,
                         std::size_t dim) {
  FeatureMatrix out(0, dim);
  for (std::size_t i : picks) out.append_row(features[i].values);
  return out;
}

FeatureMatrix embed_texts(std::span<const std::string> texts, const embedding::EmbeddingTable& table) {
  FeatureMatrix out(0, table.dim());
  for (const auto& text : texts) out.append_row(embedding::embed_text(table, text).values);
  return out;
}

std::vector<double> sorted_unique(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw InvalidArgument("auc: scores and labels differ in length");
  }
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 1 && y != -1) throw InvalidArgument("auc: labels must be +1 or -1");
    n_pos += y == 1 ? 1 : 0;
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw InvalidArgument("auc: single-class input");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the positive rank sum, so midranks stay integral.
  std::uint64_t twice_rank_sum = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const std::uint64_t twice_midrank = (i + 1) + (j + 1);  // ranks are 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) twice_rank_sum += twice_midrank;
    }
    i = j + 1;
  }
  // U = R_pos - n_pos (n_pos + 1) / 2, scaled by two on both sides.
  const std::uint64_t twice_u = twice_rank_sum - static_cast<std::uint64_t>(n_pos) * (n_pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

GridSpec GridSpec::defaults() {
  return {{0.125, 0.5, 2.0, 8.0, 32.0}, {1.0 / 128.0, 1.0 / 32.0, 0.125, 0.5}, 10};
}

void GridSpec::validate() const {
  if (c_values.empty() || gamma_values.empty()) {
    throw InvalidArgument("grid: C and gamma lists must be non-empty");
  }
  if (folds < 2) {
    throw InvalidArgument("grid: folds must be >= 2");
  }
  for (double c : c_values) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("grid: C values must be positive");
  }
  for (double g : gamma_values) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("grid: gamma values must be non-negative");
  }
}

GridSpec grid_spec_from_json(const nlohmann::json& doc) {
  GridSpec grid = GridSpec::defaults();
  try {
    if (!doc.is_object()) throw ParseError("grid: expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "c") grid.c_values = value.get<std::vector<double>>();
      else if (key == "gamma") grid.gamma_values = value.get<std::vector<double>>();
      else if (key == "folds") grid.folds = value.get<std::size_t>();
      else throw ParseError("grid: unknown field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("grid: ") + e.what());
  }
  grid.validate();
  return grid;
}

GridResult grid_search(const FeatureMatrix& train_pos, const FeatureMatrix& train_neg, const GridSpec& grid,
                       const svm::TrainParams& base) {
  grid.validate();
  if (train_pos.empty() || train_neg.empty()) {
    throw InvalidArgument("grid_search: both positive and negative training sets must be non-empty");
  }
  if (train_pos.cols() != train_neg.cols()) {
    throw InvalidArgument("grid_search: positive and negative features differ in dimension");
  }
  if (train_pos.rows() < grid.folds || train_neg.rows() < grid.folds) {
    throw InvalidArgument("grid_search: each class needs at least " + std::to_string(grid.folds) +
                          " samples for " + std::to_string(grid.folds) + "-fold stratified CV");
  }

  FeatureMatrix x = train_pos;
  for (std::size_t i = 0; i < train_neg.rows(); ++i) x.append_row(train_neg.row(i));
  std::vector<int> y(train_pos.rows(), 1);
  y.resize(x.rows(), -1);
  const auto fold_of = stratified_fold_assignment(y, grid.folds, base.seed);

  struct Split {
    FeatureMatrix train_x;
    std::vector<int> train_y;
    std::vector<std::size_t> test;
  };
  std::vector<Split> splits(grid.folds);
  for (auto& s : splits) s.train_x = FeatureMatrix(0, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t f = 0; f < grid.folds; ++f) {
      if (fold_of[i] == f) {
        splits[f].test.push_back(i);
      } else {
        splits[f].train_x.append_row(x.row(i));
        splits[f].train_y.push_back(y[i]);
      }
    }
  }

  GridResult result;
  bool have_best = false;
  for (double c : sorted_unique(grid.c_values)) {
    for (double gamma : sorted_unique(grid.gamma_values)) {
      svm::TrainParams params = base;
      params.c = c;
      params.gamma = gamma;
      double sum = 0.0;
      for (const auto& split : splits) {
        const svm::SvmModel model = svm::train_uncalibrated(split.train_x, split.train_y, params);
        std::vector<double> scores;
        std::vector<int> labels;
        for (std::size_t i : split.test) {
          scores.push_back(svm::decision_value(model, x.row(i)));
          labels.push_back(y[i]);
        }
        sum += auc(scores, labels);
      }
      const double cv = sum / static_cast<double>(grid.folds);
      result.cells.push_back({c, gamma, cv});
      if (!have_best || cv > result.cv_auc) {
        result.c = c;
        result.gamma = gamma;
        result.cv_auc = cv;
        have_best = true;
      }
    }
  }
  return result;
}

GridResult grid_search(std::span<const std::string> pos_texts, std::span<const std::string> neg_texts,
                       const embedding::EmbeddingTable& table, const GridSpec& grid, const svm::TrainParams& base) {
  return grid_search(embed_texts(pos_texts, table), embed_texts(neg_texts, table), grid, base);
}

const LabelScore& EvalReport::score(const std::string& label) const {
  for (const auto& s : labels) {
    if (s.label == label) return s;
  }
  throw NotFound("no score for label '" + label + "'");
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["mode"] = ensemble::to_string(mode);
  doc["mean_auc"] = mean_auc;
  nlohmann::ordered_json per_label = nlohmann::ordered_json::object();
  for (const auto& s : labels) {
    nlohmann::ordered_json entry;
    entry["auc"] = s.auc;
    entry["c"] = s.c ? nlohmann::ordered_json(*s.c) : nlohmann::ordered_json(nullptr);
    entry["gamma"] = s.gamma ? nlohmann::ordered_json(*s.gamma) : nlohmann::ordered_json(nullptr);
    per_label[s.label] = std::move(entry);
  }
  doc["labels"] = std::move(per_label);
  doc["heldout_disjoint"] = heldout_disjoint;
  return doc;
}

std::string EvalReport::to_text() const {
  std::size_t width = 5;
  for (const auto& s : labels) width = std::max(width, s.label.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "label" << "  " << std::right << std::setw(6) << "AUC"
      << "  " << std::setw(10) << "C" << "  " << std::setw(10) << "gamma" << '\n';
  out << std::fixed;
  for (const auto& s : labels) {
    out << std::left << std::setw(static_cast<int>(width)) << s.label << "  " << std::right << std::setprecision(4)
        << std::setw(6) << s.auc << "  ";
    if (s.c) {
      out << std::setw(10) << std::setprecision(6) << *s.c;
    } else {
      out << std::setw(10) << "-";
    }
    out << "  ";
    if (s.gamma) {
      out << std::setw(10) << std::setprecision(6) << *s.gamma;
    } else {
      out << std::setw(10) << "-";
    }
    out << '\n';
  }
  out << std::left << std::setw(static_cast<int>(width)) << "mean" << "  " << std::right << std::setprecision(4)
      << std::setw(6) << mean_auc << "  (" << ensemble::to_string(mode) << ", " << labels.size() << " labels)\n";
  return out.str();
}

EvalReport evaluate(const ensemble::EnsembleModel& model, std::span<const HeldoutSet> heldout) {
  EvalReport report;
  report.mode = model.mode;
  for (const auto& set : heldout) {
    if (set.positives.empty() || set.negatives.empty()) {
      throw InvalidArgument("evaluate: held-out set for label '" + set.label + "' has a single class");
    }
    const auto& clf = model.classifier(set.label);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < set.positives.rows(); ++i) {
      scores.push_back(svm::predict_proba(clf, set.positives.row(i)));
      labels.push_back(1);
    }
    for (std::size_t i = 0; i < set.negatives.rows(); ++i) {
      scores.push_back(svm::predict_proba(clf, set.negatives.row(i)));
      labels.push_back(-1);
    }
    LabelScore score{set.label, auc(scores, labels), std::nullopt, std::nullopt};
    if (model.training) {
      if (auto it = model.training->labels.find(set.label); it != model.training->labels.end()) {
        score.c = it->second.c;
        score.gamma = it->second.gamma;
      }
    }
    report.labels.push_back(std::move(score));
  }
  if (!report.labels.empty()) {
    double sum = 0.0;
    for (const auto& s : report.labels) sum += s.auc;
    report.mean_auc = sum / static_cast<double>(report.labels.size());
  }
  return report;
}

ensemble::EnsembleModel tune_and_train(const corpus::Corpus& corpus, const embedding::EmbeddingTable& table,
                                       const ensemble::TaxonomyConfig& config, const ProtocolConfig& protocol) {
  protocol.grid.validate();
  const auto& labels = ensemble::active_labels(config.taxonomy, protocol.mode);
  const auto doc_labels = ensemble::document_labels(corpus, config.taxonomy, protocol.mode);

  std::vector<embedding::FeatureVector> features;
  features.reserve(corpus.size());
  for (const auto& doc : corpus.documents) features.push_back(embedding::embed_text(table, doc.text));

  std::vector<GridResult> tuned(labels.size());
  parallel_for(labels.size(), protocol.threads, [&](std::size_t li) {
    const auto sample = balanced_sample(doc_labels, labels[li], protocol.sampling);
    tuned[li] = grid_search(stack_rows(features, sample.train_pos, table.dim()),
                            stack_rows(features, sample.train_neg, table.dim()), protocol.grid, protocol.base);
  });

  ensemble::TrainPlan plan;
  plan.sampling = protocol.sampling;
  plan.defaults = protocol.base;
  plan.threads = protocol.threads;
  for (std::size_t li = 0; li < labels.size(); ++li) {
    svm::TrainParams params = protocol.base;
    params.c = tuned[li].c;
    params.gamma = tuned[li].gamma;
    plan.per_label[labels[li]] = params;
    plan.cv_auc[labels[li]] = tuned[li].cv_auc;
  }
  return ensemble::train_ensemble(corpus, table, config, protocol.mode, plan);
}

std::vector<HeldoutSet> heldout_sets(const ensemble::EnsembleModel& model, const corpus::Corpus& corpus,
                                     const embedding::EmbeddingTable& table) {
  if (!model.training) {
    throw InvalidArgument("evaluate: model carries no sampling record, cannot rebuild held-out sets");
  }
  if (table.dim() != model.dim()) {
    throw InvalidArgument("evaluate: embedding dimension " + std::to_string(table.dim()) +
                          " does not match model dimension " + std::to_string(model.dim()));
  }
  const auto doc_labels = ensemble::document_labels(corpus, model.config.taxonomy, model.mode);
  std::vector<embedding::FeatureVector> features;
  features.reserve(corpus.size());
  for (const auto& doc : corpus.documents) features.push_back(embedding::embed_text(table, doc.text));

  std::vector<HeldoutSet> sets;
  for (const auto& label : model.labels) {
    const auto sample = balanced_sample(doc_labels, label, model.training->sampling);
    sets.push_back({label, stack_rows(features, sample.heldout_pos, table.dim()),
                    stack_rows(features, sample.heldout_neg, table.dim())});
  }
  return sets;
}

EvalReport evaluate_heldout(const ensemble::EnsembleModel& model, const corpus::Corpus& corpus,
                            const embedding::EmbeddingTable& table) {
  const auto sets = heldout_sets(model, corpus, table);
  return evaluate(model, sets);
}

}  // namespace emotionpush::eval
