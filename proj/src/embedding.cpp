#include "emotionpush/embedding.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "emotionpush/crc32.hpp"
#include "emotionpush/error.hpp"

namespace emotionpush::embedding {
namespace {

constexpr std::size_t kMaxHeaderBytes = 64;
// Upper bound on entries pre-reserved from an untrusted header.
constexpr std::size_t kMaxReserveEntries = 1U << 20;

bool valid_token(std::string_view token) {
  if (token.empty() || token.size() > kMaxTokenBytes) {
    return false;
  }
  return token.find_first_of(" \n") == std::string_view::npos;
}

float float_from_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void float_to_le(float value, char* p) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  p[0] = static_cast<char>(bits & 0xFFU);
  p[1] = static_cast<char>((bits >> 8) & 0xFFU);
  p[2] = static_cast<char>((bits >> 16) & 0xFFU);
  p[3] = static_cast<char>((bits >> 24) & 0xFFU);
}

bool parse_count(std::string_view text, std::size_t& out) {
  if (text.empty()) {
    return false;
  }
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::pair<std::size_t, std::size_t> parse_header(std::istream& in) {
  std::string line;
  char c = 0;
  while (in.get(c) && c != '\n') {
    line.push_back(c);
    if (line.size() > kMaxHeaderBytes) {
      throw ParseError("word2vec: malformed header (too long)");
    }
  }
  if (!in && c != '\n') {
    throw ParseError("word2vec: malformed header (missing newline)");
  }
  while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) {
    line.pop_back();
  }
  const auto space = line.find(' ');
  std::size_t vocab = 0;
  std::size_t dim = 0;
  if (space == std::string::npos || !parse_count(std::string_view(line).substr(0, space), vocab) ||
      !parse_count(std::string_view(line).substr(space + 1), dim)) {
    throw ParseError("word2vec: malformed header '" + line + "'");
  }
  if (dim == 0) {
    throw ParseError("word2vec: malformed header (dimension must be positive)");
  }
  return {vocab, dim};
}

}  // namespace

void EmbeddingTable::add(std::string token, std::span<const float> vector) {
  if (!valid_token(token)) {
    throw InvalidArgument("embedding: invalid token '" + token + "'");
  }
  if (vector.size() != dim_) {
    throw InvalidArgument("embedding: vector for '" + token + "' has length " + std::to_string(vector.size()) +
                          ", expected " + std::to_string(dim_));
  }
  auto [it, inserted] = index_.emplace(token, tokens_.size());
  if (!inserted) {
    throw InvalidArgument("embedding: duplicate token '" + token + "'");
  }
  tokens_.push_back(std::move(token));
  values_.insert(values_.end(), vector.begin(), vector.end());
}

std::optional<std::span<const float>> EmbeddingTable::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) {
    return std::nullopt;
  }
  return vector(it->second);
}

void EmbeddingTable::reserve(std::size_t entries) {
  tokens_.reserve(entries);
  values_.reserve(entries * dim_);
  index_.reserve(entries);
}

std::string EmbeddingTable::fingerprint() const {
  std::ostringstream buffer;
  write_word2vec(*this, buffer);
  char hex[9];
  const std::uint32_t crc = crc32(buffer.view());
  std::snprintf(hex, sizeof hex, "%08x", crc);
  return "w2v-" + std::to_string(vocab_size()) + "x" + std::to_string(dim_) + "-" + hex;
}

EmbeddingTable parse_word2vec(std::istream& in) {
  const auto [vocab, dim] = parse_header(in);
  EmbeddingTable table(dim);
  table.reserve(std::min(vocab, kMaxReserveEntries));

  std::string token;
  std::vector<unsigned char> raw(dim * sizeof(float));
  std::vector<float> vec(dim);
  for (std::size_t entry = 1; entry <= vocab; ++entry) {
    const std::string where = " at entry " + std::to_string(entry);
    token.clear();
    char c = 0;
    bool terminated = false;
    while (in.get(c)) {
      if (c == ' ') {
        terminated = true;
        break;
      }
      if (c == '\n') {
        throw ParseError("word2vec: token containing newline" + where);
      }
      token.push_back(c);
      if (token.size() > kMaxTokenBytes) {
        throw ParseError("word2vec: token longer than " + std::to_string(kMaxTokenBytes) + " bytes" + where);
      }
    }
    if (!terminated) {
      throw ParseError("word2vec: truncated" + where);
    }
    if (token.empty()) {
      throw ParseError("word2vec: empty token" + where);
    }
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw ParseError("word2vec: truncated" + where);
    }
    for (std::size_t k = 0; k < dim; ++k) {
      vec[k] = float_from_le(raw.data() + k * sizeof(float));
    }
    if (in.peek() == '\n') {
      in.get();
    }
    if (table.contains(token)) {
      throw ParseError("word2vec: duplicate token '" + token + "'" + where);
    }
    table.add(token, vec);
  }
  return table;
}

EmbeddingTable load_word2vec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open embeddings file " + path.string());
  }
  return parse_word2vec(in);
}

void write_word2vec(const EmbeddingTable& table, std::ostream& out) {
  std::vector<std::size_t> order(table.vocab_size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return table.token(a) < table.token(b); });

  out << table.vocab_size() << ' ' << table.dim() << '\n';
  std::vector<char> payload(table.dim() * sizeof(float));
  for (std::size_t i : order) {
    const auto vec = table.vector(i);
    for (std::size_t k = 0; k < vec.size(); ++k) {
      float_to_le(vec[k], payload.data() + k * sizeof(float));
    }
    out << table.token(i) << ' ';
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out << '\n';
  }
  if (!out) {
    throw Error("word2vec: write failed");
  }
}

void save_word2vec(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  write_word2vec(table, out);
  out.flush();
  if (!out) {
    throw Error("word2vec: write failed for " + path.string());
  }
}

FeatureVector embed_text(const EmbeddingTable& table, std::string_view text) {
  FeatureVector result;
  result.values.assign(table.dim(), 0.0);
  for (const auto& token : tokenize(text)) {
    const auto vec = table.find(token);
    if (!vec) {
      continue;
    }
    for (std::size_t k = 0; k < vec->size(); ++k) {
      result.values[k] += static_cast<double>((*vec)[k]);
    }
    ++result.token_count;
  }
  if (result.token_count > 0) {
    const auto n = static_cast<double>(result.token_count);
    for (double& v : result.values) {
      v /= n;
    }
  }
  return result;
}

}  // namespace emotionpush::embedding
