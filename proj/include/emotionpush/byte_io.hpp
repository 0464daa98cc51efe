#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "emotionpush/error.hpp"

namespace emotionpush {

// Little-endian append-only encoder.
class ByteWriter {
 public:
  void put_u16(std::uint16_t v) { put_le(v, 2); }
  void put_u32(std::uint32_t v) { put_le(v, 4); }
  void put_u64(std::uint64_t v) { put_le(v, 8); }
  void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void put_raw(std::string_view bytes) { buffer_.append(bytes); }

  const std::string& bytes() const noexcept { return buffer_; }
  std::string take() noexcept { return std::move(buffer_); }

 private:
  void put_le(std::uint64_t v, int width) {
    for (int k = 0; k < width; ++k) {
      buffer_.push_back(static_cast<char>((v >> (8 * k)) & 0xFFU));
    }
  }

  std::string buffer_;
};

// Little-endian decoder over a borrowed buffer. Reading past the end throws
// ChecksumError, since a consistent payload never runs short.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) noexcept : bytes_(bytes) {}

  std::uint16_t get_u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t get_u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t get_u64() { return get_le(8); }
  double get_f64() { return std::bit_cast<double>(get_le(8)); }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::uint64_t get_le(int width) {
    if (remaining() < static_cast<std::size_t>(width)) {
      throw ChecksumError("payload truncated");
    }
    std::uint64_t v = 0;
    for (int k = 0; k < width; ++k) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace emotionpush
