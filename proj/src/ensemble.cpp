#include "emotionpush/ensemble.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "emotionpush/error.hpp"
#include "emotionpush/parallel.hpp"

namespace emotionpush::ensemble {
namespace {

constexpr std::string_view kManifestName = "manifest.json";
constexpr std::string_view kFormatName = "emotionpush-ensemble";

FeatureMatrix embed_rows(const std::vector<embedding::FeatureVector>& features,
                         std::span<const std::size_t> picks, std::size_t dim) {
  FeatureMatrix out(0, dim);
  for (std::size_t i : picks) out.append_row(features[i].values);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw NotFound("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) {
    throw Error("cannot write " + path.string());
  }
}

nlohmann::ordered_json sampling_json(const eval::SamplingPlan& plan) {
  nlohmann::ordered_json doc;
  doc["n_pos"] = plan.n_pos;
  doc["n_neg"] = plan.n_neg;
  doc["heldout_per_label"] = plan.heldout_per_label;
  doc["seed"] = plan.seed;
  return doc;
}

}  // namespace

std::string_view to_string(Mode mode) noexcept { return mode == Mode::kCoarse ? "coarse7" : "fine40"; }

Mode parse_mode(std::string_view text) {
  if (text == "coarse7") return Mode::kCoarse;
  if (text == "fine40") return Mode::kFine;
  throw InvalidArgument("unknown mode '" + std::string(text) + "' (expected coarse7 or fine40)");
}

const svm::SvmModel& EnsembleModel::classifier(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return classifiers[i];
  }
  throw NotFound("no classifier for label '" + std::string(label) + "'");
}

const std::vector<std::string>& active_labels(const Taxonomy& taxonomy, Mode mode) {
  return mode == Mode::kCoarse ? taxonomy.coarse_labels() : taxonomy.fine_labels();
}

std::vector<std::string> document_labels(const corpus::Corpus& corpus, const Taxonomy& taxonomy, Mode mode) {
  std::vector<std::string> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus.documents) {
    out.push_back(mode == Mode::kCoarse ? taxonomy.compact(doc.fine_label) : doc.fine_label);
  }
  return out;
}

double ClassificationResult::probability(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return probabilities[i];
  }
  throw NotFound("no probability for label '" + std::string(label) + "'");
}

std::size_t argmax_first(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

ClassificationResult classify_features(const EnsembleModel& model, const embedding::FeatureVector& features) {
  if (model.classifiers.empty()) {
    throw InvalidArgument("classify: ensemble has no classifiers");
  }
  if (features.values.size() != model.dim()) {
    throw InvalidArgument("classify: feature dimension " + std::to_string(features.values.size()) +
                          " does not match classifier dimension " + std::to_string(model.dim()));
  }
  ClassificationResult result;
  result.labels = model.labels;
  result.no_tokens = features.token_count == 0;
  for (const auto& clf : model.classifiers) {
    const double f = svm::decision_value(clf, features.values);
    result.decision_values.push_back(f);
    result.probabilities.push_back(svm::platt_probability(clf.platt_a, clf.platt_b, f));
  }
  result.predicted = model.labels[argmax_first(result.probabilities)];
  result.coarse = model.mode == Mode::kCoarse ? result.predicted : model.config.taxonomy.compact(result.predicted);
  result.color = model.config.colors.color_of(result.coarse);
  return result;
}

ClassificationResult classify(const EnsembleModel& model, const embedding::EmbeddingTable& table,
                              std::string_view text) {
  if (table.dim() != model.dim()) {
    throw InvalidArgument("classify: embedding dimension " + std::to_string(table.dim()) +
                          " does not match classifier dimension " + std::to_string(model.dim()));
  }
  return classify_features(model, embedding::embed_text(table, text));
}

nlohmann::ordered_json to_json(const ClassificationResult& result) {
  nlohmann::ordered_json doc;
  doc["emotion"] = result.predicted;
  doc["color"] = result.color;
  nlohmann::ordered_json probs = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < result.labels.size(); ++i) probs[result.labels[i]] = result.probabilities[i];
  doc["probabilities"] = std::move(probs);
  doc["no_tokens"] = result.no_tokens;
  return doc;
}

const svm::TrainParams& TrainPlan::params_for(const std::string& label) const {
  auto it = per_label.find(label);
  return it == per_label.end() ? defaults : it->second;
}

EnsembleModel train_ensemble(const corpus::Corpus& corpus, const embedding::EmbeddingTable& table,
                             const TaxonomyConfig& config, Mode mode, const TrainPlan& plan) {
  for (const auto& doc : corpus.documents) {
    if (!config.taxonomy.has_fine(doc.fine_label)) {
      throw InvalidArgument("train: document '" + doc.id + "' has label '" + doc.fine_label +
                            "' outside taxonomy " + config.taxonomy.name());
    }
  }
  const auto& labels = active_labels(config.taxonomy, mode);
  const auto doc_labels = document_labels(corpus, config.taxonomy, mode);
  for (const auto& label : labels) {
    if (std::find(doc_labels.begin(), doc_labels.end(), label) == doc_labels.end()) {
      throw InvalidArgument("train: label '" + label + "' has no positive documents");
    }
  }

  std::vector<embedding::FeatureVector> features;
  features.reserve(corpus.size());
  for (const auto& doc : corpus.documents) features.push_back(embedding::embed_text(table, doc.text));

  EnsembleModel model;
  model.config = config;
  model.mode = mode;
  model.labels = labels;
  model.classifiers.resize(labels.size());
  model.embedding_table_id = table.fingerprint();
  TrainingRecord record;
  record.sampling = plan.sampling;

  parallel_for(labels.size(), plan.threads, [&](std::size_t li) {
    const auto& label = labels[li];
    const auto sample = eval::balanced_sample(doc_labels, label, plan.sampling);
    FeatureMatrix x = embed_rows(features, sample.train_pos, table.dim());
    for (std::size_t i : sample.train_neg) x.append_row(features[i].values);
    std::vector<int> y(sample.train_pos.size(), 1);
    y.resize(sample.train_pos.size() + sample.train_neg.size(), -1);
    model.classifiers[li] = svm::train_svc(x, y, plan.params_for(label));
  });

  for (std::size_t li = 0; li < labels.size(); ++li) {
    const auto& params = plan.params_for(labels[li]);
    LabelTraining info{params.c, model.classifiers[li].gamma, std::nullopt};
    if (auto it = plan.cv_auc.find(labels[li]); it != plan.cv_auc.end()) info.cv_auc = it->second;
    record.labels[labels[li]] = info;
  }
  model.training = std::move(record);
  return model;
}

std::string classifier_file_name(std::string_view label) {
  std::string name;
  for (char c : label) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                      c == '_' || c == '.';
    name.push_back(safe ? c : '_');
  }
  if (name.empty() || name.front() == '.') name.insert(name.begin(), '_');
  return name + ".epsvm";
}

nlohmann::ordered_json manifest_json(const EnsembleModel& model) {
  nlohmann::ordered_json doc;
  doc["format"] = kFormatName;
  doc["version"] = kEnsembleFormatVersion;
  doc["model_version"] = model.version;
  doc["mode"] = to_string(model.mode);
  doc["embedding_table_id"] = model.embedding_table_id;
  doc["dim"] = model.dim();
  doc["taxonomy"] = to_json(model.config);
  nlohmann::ordered_json classifiers = nlohmann::ordered_json::array();
  std::set<std::string> used;
  for (const auto& label : model.labels) {
    std::string file = classifier_file_name(label);
    for (int k = 2; !used.insert(file).second; ++k) {
      file = classifier_file_name(label + "-" + std::to_string(k));
    }
    classifiers.push_back({{"label", label}, {"file", file}});
  }
  doc["classifiers"] = std::move(classifiers);
  if (model.training) {
    nlohmann::ordered_json training;
    training["sampling"] = sampling_json(model.training->sampling);
    nlohmann::ordered_json labels = nlohmann::ordered_json::object();
    for (const auto& label : model.labels) {
      auto it = model.training->labels.find(label);
      if (it == model.training->labels.end()) continue;
      nlohmann::ordered_json entry;
      entry["c"] = it->second.c;
      entry["gamma"] = it->second.gamma;
      if (it->second.cv_auc) entry["cv_auc"] = *it->second.cv_auc;
      labels[label] = std::move(entry);
    }
    training["labels"] = std::move(labels);
    doc["training"] = std::move(training);
  }
  return doc;
}

void save_ensemble(const EnsembleModel& model, const std::filesystem::path& dir) {
  if (model.labels.size() != model.classifiers.size()) {
    throw InvalidArgument("save_ensemble: labels and classifiers differ in count");
  }
  std::filesystem::create_directories(dir);
  const auto manifest = manifest_json(model);
  const auto& entries = manifest.at("classifiers");
  for (std::size_t i = 0; i < model.labels.size(); ++i) {
    write_file(dir / entries[i].at("file").get<std::string>(), svm::save_model(model.classifiers[i]));
  }
  write_file(dir / kManifestName, manifest.dump(2) + "\n");
}

EnsembleModel load_ensemble(const std::filesystem::path& dir) {
  nlohmann::ordered_json manifest;
  try {
    manifest = nlohmann::ordered_json::parse(read_file(dir / kManifestName));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("ensemble manifest: " + std::string(e.what()));
  }
  try {
    if (manifest.value("format", std::string()) != kFormatName) {
      throw ParseError("ensemble manifest: not an emotionpush ensemble");
    }
    const int version = manifest.at("version").get<int>();
    if (version != kEnsembleFormatVersion) {
      throw VersionError("ensemble manifest: unsupported version " + std::to_string(version) + " (expected " +
                         std::to_string(kEnsembleFormatVersion) + ")");
    }
    EnsembleModel model;
    model.config = taxonomy_config_from_json(manifest.at("taxonomy"));
    model.mode = parse_mode(manifest.at("mode").get<std::string>());
    model.version = manifest.value("model_version", std::string("1"));
    model.embedding_table_id = manifest.value("embedding_table_id", std::string());

    std::map<std::string, std::string> files;
    for (const auto& entry : manifest.at("classifiers")) {
      const auto label = entry.at("label").get<std::string>();
      if (!files.emplace(label, entry.at("file").get<std::string>()).second) {
        throw ParseError("ensemble manifest: classifier '" + label + "' listed twice");
      }
    }
    const auto& labels = active_labels(model.config.taxonomy, model.mode);
    for (const auto& label : labels) {
      if (!files.contains(label)) {
        throw ParseError("ensemble manifest: no classifier listed for label '" + label + "'");
      }
    }
    if (files.size() != labels.size()) {
      throw ParseError("ensemble manifest: classifiers listed for labels outside the " +
                       std::string(to_string(model.mode)) + " label set");
    }

    model.labels = labels;
    for (const auto& label : labels) {
      const auto path = dir / files.at(label);
      if (!std::filesystem::exists(path)) {
        throw NotFound("ensemble: classifier file for label '" + label + "' is missing (" + path.string() + ")");
      }
      try {
        model.classifiers.push_back(svm::load_model(read_file(path)));
      } catch (const ChecksumError& e) {
        throw ChecksumError("ensemble: classifier for label '" + label + "': " + e.what());
      } catch (const VersionError& e) {
        throw VersionError("ensemble: classifier for label '" + label + "': " + e.what());
      } catch (const ParseError& e) {
        throw ParseError("ensemble: classifier for label '" + label + "': " + e.what());
      }
      if (model.classifiers.back().dim != model.classifiers.front().dim) {
        throw ParseError("ensemble: classifier for label '" + label + "' has a different dimension");
      }
    }

    if (manifest.contains("training")) {
      const auto& training = manifest.at("training");
      TrainingRecord record;
      const auto& sampling = training.at("sampling");
      record.sampling.n_pos = sampling.at("n_pos").get<std::size_t>();
      record.sampling.n_neg = sampling.at("n_neg").get<std::size_t>();
      record.sampling.heldout_per_label = sampling.at("heldout_per_label").get<std::size_t>();
      record.sampling.seed = sampling.at("seed").get<std::uint64_t>();
      for (const auto& [label, entry] : training.at("labels").items()) {
        LabelTraining info{entry.at("c").get<double>(), entry.at("gamma").get<double>(), std::nullopt};
        if (entry.contains("cv_auc")) info.cv_auc = entry.at("cv_auc").get<double>();
        record.labels[label] = info;
      }
      model.training = std::move(record);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("ensemble manifest: " + std::string(e.what()));
  }
}

}  // namespace emotionpush::ensemble
