#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace rapidraid {

/// CRC32C (Castagnoli), table-driven, init/final-xor 0xFFFFFFFF.
uint32_t crc32c(std::span<const uint8_t> data);

/// Incremental form: crc32c(x) == crc32c_finish(crc32c_update(crc32c_init(), x)).
uint32_t crc32c_init();
uint32_t crc32c_update(uint32_t state, std::span<const uint8_t> data);
uint32_t crc32c_finish(uint32_t state);

/// 128-bit FNV-1a style digest (two independent 64-bit lanes). Used to
/// fingerprint code specs in block headers; not a cryptographic hash.
std::array<uint8_t, 16> digest128(std::span<const uint8_t> data);

}  // namespace rapidraid
