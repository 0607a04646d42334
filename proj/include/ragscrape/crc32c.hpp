#pragma once

#include <cstdint>
#include <span>

namespace ragscrape {

// CRC-32C (Castagnoli, reflected polynomial 0x82F63B78).
std::uint32_t crc32c(std::span<const std::uint8_t> data, std::uint32_t crc = 0) noexcept;

}  // namespace ragscrape
