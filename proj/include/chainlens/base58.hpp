#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>

namespace chainlens {

// Checksummed base-58 of version byte + 20-byte payload, the printable
// address form.  Alphabet excludes 0, O, I and l.
std::string base58check_encode(uint8_t version,
                               const std::array<uint8_t, 20>& payload);

// Throws Error{invalid_address} on bad alphabet characters, wrong length
// or checksum mismatch.
std::pair<uint8_t, std::array<uint8_t, 20>> base58check_decode(
    const std::string& encoded);

} // namespace chainlens
