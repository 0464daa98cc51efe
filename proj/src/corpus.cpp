#include "emotionpush/corpus.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "emotionpush/error.hpp"
#include "emotionpush/random.hpp"

namespace emotionpush::corpus {
namespace {

// Spread of signature vectors around their label direction (total norm).
constexpr double kSignatureSpread = 0.35;

enum StreamTag : std::uint64_t { kDirection = 1, kSignature = 2, kNoise = 3, kDocument = 4 };

std::string line_prefix(std::size_t line) { return "corpus line " + std::to_string(line) + ": "; }

std::vector<double> random_unit(CounterRng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

std::map<std::string, std::size_t> Corpus::label_counts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : documents) ++counts[doc.fine_label];
  return counts;
}

std::size_t Corpus::count(const std::string& label) const {
  std::size_t n = 0;
  for (const auto& doc : documents) n += doc.fine_label == label ? 1 : 0;
  return n;
}

Corpus parse_corpus(std::istream& in, const ensemble::Taxonomy& taxonomy) {
  Corpus corpus;
  corpus.taxonomy_id = taxonomy.name();
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_prefix(line_no) + "malformed JSON (" + e.what() + ")");
    }
    if (!record.is_object()) {
      throw ParseError(line_prefix(line_no) + "expected a JSON object");
    }
    for (const char* key : {"text", "emotion"}) {
      if (!record.contains(key) || !record[key].is_string()) {
        throw ParseError(line_prefix(line_no) + "missing string field '" + key + "'");
      }
    }
    Document doc;
    doc.text = record["text"].get<std::string>();
    doc.fine_label = record["emotion"].get<std::string>();
    if (!taxonomy.has_fine(doc.fine_label)) {
      throw ParseError(line_prefix(line_no) + "unknown emotion label '" + doc.fine_label + "'");
    }
    if (record.contains("id")) {
      if (!record["id"].is_string()) {
        throw ParseError(line_prefix(line_no) + "field 'id' must be a string");
      }
      doc.id = record["id"].get<std::string>();
    } else {
      doc.id = "line-" + std::to_string(line_no);
    }
    if (!ids.insert(doc.id).second) {
      throw ParseError(line_prefix(line_no) + "duplicate id '" + doc.id + "'");
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const ensemble::Taxonomy& taxonomy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open corpus file " + path.string());
  }
  return parse_corpus(in, taxonomy);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents) {
    nlohmann::ordered_json record;
    record["id"] = doc.id;
    record["text"] = doc.text;
    record["emotion"] = doc.fine_label;
    out << record.dump() << '\n';
  }
  if (!out) {
    throw Error("corpus: write failed");
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  write_corpus(corpus, out);
}

void SynthConfig::validate() const {
  if (num_labels < 1 || docs_per_label < 1 || signature_tokens_per_label < 1 || noise_vocab_size < 1 ||
      tokens_per_doc < 1) {
    throw InvalidArgument("synth config: all counts must be >= 1");
  }
  if (embedding_dim < 2) {
    throw InvalidArgument("synth config: embedding_dim must be >= 2");
  }
  if (!(noise_token_fraction >= 0.0 && noise_token_fraction <= 1.0)) {
    throw InvalidArgument("synth config: noise_token_fraction must lie in [0, 1]");
  }
}

SynthConfig synth_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw ParseError("synth config: expected a JSON object");
  }
  SynthConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "num_labels") cfg.num_labels = value.get<std::size_t>();
      else if (key == "docs_per_label") cfg.docs_per_label = value.get<std::size_t>();
      else if (key == "signature_tokens_per_label") cfg.signature_tokens_per_label = value.get<std::size_t>();
      else if (key == "noise_vocab_size") cfg.noise_vocab_size = value.get<std::size_t>();
      else if (key == "tokens_per_doc") cfg.tokens_per_doc = value.get<std::size_t>();
      else if (key == "embedding_dim") cfg.embedding_dim = value.get<std::size_t>();
      else if (key == "noise_token_fraction") cfg.noise_token_fraction = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else throw ParseError("synth config: unknown field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synth config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const SynthConfig& cfg) {
  return {{"num_labels", cfg.num_labels},
          {"docs_per_label", cfg.docs_per_label},
          {"signature_tokens_per_label", cfg.signature_tokens_per_label},
          {"noise_vocab_size", cfg.noise_vocab_size},
          {"tokens_per_doc", cfg.tokens_per_doc},
          {"embedding_dim", cfg.embedding_dim},
          {"noise_token_fraction", cfg.noise_token_fraction},
          {"seed", cfg.seed}};
}

std::string signature_token(std::size_t label, std::size_t k) {
  return "sig" + std::to_string(label) + "_" + std::to_string(k);
}

std::string noise_token(std::size_t k) { return "w" + std::to_string(k); }

SynthOutput synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t dim = cfg.embedding_dim;
  const auto& defaults = ensemble::default_taxonomy_config();
  const auto& default_fine = defaults.taxonomy.fine_labels();

  std::vector<std::string> labels;
  for (std::size_t l = 0; l < cfg.num_labels; ++l) {
    labels.push_back(l < default_fine.size() ? default_fine[l] : "label" + std::to_string(l));
  }

  SynthOutput out{Corpus{}, embedding::EmbeddingTable(dim), {}};
  if (cfg.num_labels == default_fine.size()) {
    out.taxonomy = defaults;
  } else {
    out.taxonomy = ensemble::flat_taxonomy_config("synthetic-" + std::to_string(cfg.num_labels), labels);
  }
  out.corpus.taxonomy_id = out.taxonomy.taxonomy.name();
  out.table.reserve(cfg.num_labels * cfg.signature_tokens_per_label + cfg.noise_vocab_size);

  std::vector<float> vec(dim);
  const double spread = kSignatureSpread / std::sqrt(static_cast<double>(dim));
  for (std::size_t l = 0; l < cfg.num_labels; ++l) {
    CounterRng dir_rng(derive_seed({cfg.seed, kDirection, l}));
    const auto direction = random_unit(dir_rng, dim);
    for (std::size_t k = 0; k < cfg.signature_tokens_per_label; ++k) {
      CounterRng rng(derive_seed({cfg.seed, kSignature, l, k}));
      for (std::size_t d = 0; d < dim; ++d) {
        vec[d] = static_cast<float>(direction[d] + spread * rng.normal());
      }
      out.table.add(signature_token(l, k), vec);
    }
  }
  const double noise_scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t k = 0; k < cfg.noise_vocab_size; ++k) {
    CounterRng rng(derive_seed({cfg.seed, kNoise, k}));
    for (std::size_t d = 0; d < dim; ++d) {
      vec[d] = static_cast<float>(noise_scale * rng.normal());
    }
    out.table.add(noise_token(k), vec);
  }

  out.corpus.documents.reserve(cfg.num_labels * cfg.docs_per_label);
  for (std::size_t l = 0; l < cfg.num_labels; ++l) {
    for (std::size_t d = 0; d < cfg.docs_per_label; ++d) {
      CounterRng rng(derive_seed({cfg.seed, kDocument, l, d}));
      std::string text;
      for (std::size_t t = 0; t < cfg.tokens_per_doc; ++t) {
        if (t > 0) text.push_back(' ');
        if (rng.uniform() < cfg.noise_token_fraction) {
          text += noise_token(rng.below(cfg.noise_vocab_size));
        } else {
          text += signature_token(l, rng.below(cfg.signature_tokens_per_label));
        }
      }
      out.corpus.documents.push_back(
          {"synth-" + std::to_string(l) + "-" + std::to_string(d), std::move(text), labels[l]});
    }
  }
  return out;
}

}  // namespace emotionpush::corpus
