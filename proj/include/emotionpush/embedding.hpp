#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace emotionpush::embedding {

// Longest token accepted from a word2vec stream.
inline constexpr std::size_t kMaxTokenBytes = 100;

// Vocabulary -> dense vector map. Vectors are stored as the 32-bit floats
// they were parsed from; all arithmetic on them is done in double.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  // Throws InvalidArgument on a bad token (empty, whitespace, too long),
  // a duplicate token, or a vector whose length differs from dim().
  void add(std::string token, std::span<const float> vector);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t vocab_size() const noexcept { return tokens_.size(); }

  std::optional<std::span<const float>> find(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.contains(token); }

  // Entries in insertion order.
  const std::string& token(std::size_t i) const { return tokens_[i]; }
  std::span<const float> vector(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }

  // Stable identifier derived from the serialized table contents.
  std::string fingerprint() const;

  void reserve(std::size_t entries);

 private:
  std::size_t dim_;
  std::vector<std::string> tokens_;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Reads the word2vec binary layout: an ASCII header "<vocab_size> <dim>\n"
// then, per entry, the token bytes, one space, dim little-endian float32
// values and an optional '\n'. Throws ParseError on malformed input.
EmbeddingTable parse_word2vec(std::istream& in);
EmbeddingTable load_word2vec(const std::filesystem::path& path);

// Emits the layout parse_word2vec accepts with entries sorted by token bytes.
void write_word2vec(const EmbeddingTable& table, std::ostream& out);
void save_word2vec(const EmbeddingTable& table, const std::filesystem::path& path);

// Lowercases, splits on Unicode whitespace and trims every piece of leading
// and trailing characters that are not letters, digits or apostrophes.
std::vector<std::string> tokenize(std::string_view text);

struct FeatureVector {
  std::vector<double> values;
  std::size_t token_count = 0;  // in-vocabulary tokens averaged into values
};

// Arithmetic mean of the in-vocabulary token vectors; zero vector with
// token_count 0 when nothing is in vocabulary.
FeatureVector embed_text(const EmbeddingTable& table, std::string_view text);

}  // namespace emotionpush::embedding
