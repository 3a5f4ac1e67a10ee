#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chainlens {

void sha256(std::span<const uint8_t> data, uint8_t out[32]);
void ripemd160(std::span<const uint8_t> data, uint8_t out[20]);

// 32-byte identifier in internal (little-endian wire) order.  The display
// form reverses the bytes, which is how block explorers and the reference
// client print hashes.
struct Hash256 {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Hash256&) const = default;

    bool is_zero() const {
        for (uint8_t b : bytes)
            if (b) return false;
        return true;
    }

    std::string display_hex() const;
    static std::optional<Hash256> from_display_hex(const std::string& hex);
};

Hash256 double_sha256(std::span<const uint8_t> data);

// RIPEMD160(SHA256(data)), the script-hash primitive behind addresses.
std::array<uint8_t, 20> hash160(std::span<const uint8_t> data);

struct Hash256Hasher {
    size_t operator()(const Hash256& h) const {
        // already a crypto hash; any 8 bytes are uniform
        size_t v;
        std::memcpy(&v, h.bytes.data(), sizeof(v));
        return v;
    }
};

std::string hex_encode(std::span<const uint8_t> data);
std::optional<std::vector<uint8_t>> hex_decode(const std::string& hex);

} // namespace chainlens
