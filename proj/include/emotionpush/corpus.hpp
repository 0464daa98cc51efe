#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "emotionpush/embedding.hpp"
#include "emotionpush/taxonomy.hpp"

namespace emotionpush::corpus {

struct Document {
  std::string id;
  std::string text;
  std::string fine_label;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  std::vector<Document> documents;
  std::string taxonomy_id;

  std::size_t size() const noexcept { return documents.size(); }
  std::map<std::string, std::size_t> label_counts() const;
  std::size_t count(const std::string& label) const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// JSONL, one {"text": ..., "emotion": ..., "id"?: ...} object per line.
// Throws ParseError naming the 1-based line for malformed JSON, missing
// fields, labels outside the taxonomy and duplicate ids.
Corpus parse_corpus(std::istream& in, const ensemble::Taxonomy& taxonomy);
Corpus load_corpus(const std::filesystem::path& path, const ensemble::Taxonomy& taxonomy);

void write_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct SynthConfig {
  std::size_t num_labels = 40;
  std::size_t docs_per_label = 25;
  std::size_t signature_tokens_per_label = 20;
  std::size_t noise_vocab_size = 2000;
  std::size_t tokens_per_doc = 20;
  std::size_t embedding_dim = 50;
  double noise_token_fraction = 0.5;
  std::uint64_t seed = 0;

  // Throws InvalidArgument when a count is zero, dim < 2 or the fraction is outside [0, 1].
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
SynthConfig synth_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SynthConfig& cfg);

struct SynthOutput {
  Corpus corpus;
  embedding::EmbeddingTable table;
  ensemble::TaxonomyConfig taxonomy;  // labels of the generated corpus
};

// Deterministic synthetic corpus. Every label owns signature tokens whose
// vectors cluster around a label direction; noise tokens are shared. Labels
// take the default fine label names while there are enough of them.
SynthOutput synth_corpus(const SynthConfig& cfg);

// Token names used by synth_corpus.
std::string signature_token(std::size_t label, std::size_t k);
std::string noise_token(std::size_t k);

}  // namespace emotionpush::corpus
