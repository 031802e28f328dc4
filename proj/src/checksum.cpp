#include "rapidraid/checksum.hpp"

namespace rapidraid {

namespace {

struct Crc32cTable {
    uint32_t t[256];
    Crc32cTable() {
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int b = 0; b < 8; ++b)
                c = (c & 1) ? (c >> 1) ^ 0x82F63B78u : c >> 1;
            t[i] = c;
        }
    }
};

}  // namespace

uint32_t crc32c_init() { return 0xFFFFFFFFu; }

uint32_t crc32c_update(uint32_t state, std::span<const uint8_t> data) {
    static const Crc32cTable table;
    for (uint8_t byte : data)
        state = table.t[(state ^ byte) & 0xFF] ^ (state >> 8);
    return state;
}

uint32_t crc32c_finish(uint32_t state) { return state ^ 0xFFFFFFFFu; }

uint32_t crc32c(std::span<const uint8_t> data) {
    return crc32c_finish(crc32c_update(crc32c_init(), data));
}

std::array<uint8_t, 16> digest128(std::span<const uint8_t> data) {
    constexpr uint64_t prime = 0x100000001B3ull;
    uint64_t a = 0xCBF29CE484222325ull;         // standard FNV offset
    uint64_t b = 0x6C62272E07BB0142ull;         // second lane offset
    for (uint8_t byte : data) {
        a = (a ^ byte) * prime;
        b = (b ^ (byte ^ 0x5A)) * prime;
    }
    std::array<uint8_t, 16> out{};
    for (int i = 0; i < 8; ++i) {
        out[i] = static_cast<uint8_t>(a >> (8 * i));
        out[8 + i] = static_cast<uint8_t>(b >> (8 * i));
    }
    return out;
}

}  // namespace rapidraid
