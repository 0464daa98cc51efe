#include "emotionpush/crc32.hpp"

#include <zlib.h>

#include <algorithm>
#include <limits>

namespace emotionpush {

std::uint32_t crc32(std::span<const std::byte> bytes, std::uint32_t crc) noexcept {
  uLong value = crc;
  const auto* data = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t remaining = bytes.size();
  while (remaining > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(remaining, std::numeric_limits<uInt>::max()));
    value = ::crc32(value, data, chunk);
    data += chunk;
    remaining -= chunk;
  }
  return static_cast<std::uint32_t>(value);
}

std::uint32_t crc32(std::string_view bytes, std::uint32_t crc) noexcept {
  return crc32(std::as_bytes(std::span(bytes.data(), bytes.size())), crc);
}

}  // namespace emotionpush
