#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace emotionpush {

// IEEE 802.3 CRC-32 (zlib polynomial), chainable through `crc`.
std::uint32_t crc32(std::span<const std::byte> bytes, std::uint32_t crc = 0) noexcept;
std::uint32_t crc32(std::string_view bytes, std::uint32_t crc = 0) noexcept;

}  // namespace emotionpush
