#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chainlens {

enum class AddressKind { p2pkh, p2pk, p2sh, unknown };

struct BtcAddress {
    std::string encoded;
    AddressKind kind = AddressKind::unknown;

    bool operator==(const BtcAddress&) const = default;
};

// Template-matches the three standard output scripts and derives the
// printable address.  Non-matching scripts are data, not errors: they
// yield an empty list.
std::vector<BtcAddress> extract_addresses(std::span<const uint8_t> pk_script);

// Script builders used by the generator and by tests.
std::vector<uint8_t> make_p2pkh_script(const std::array<uint8_t, 20>& hash20);
std::vector<uint8_t> make_p2pk_script(std::span<const uint8_t> pubkey);
std::vector<uint8_t> make_p2sh_script(const std::array<uint8_t, 20>& hash20);

// Splits a script into its sequence of direct pushes (opcodes 0x01..0x4b).
// Returns nullopt as soon as any other opcode or a truncated push appears.
std::optional<std::vector<std::vector<uint8_t>>> parse_pushes(
    std::span<const uint8_t> script);

} // namespace chainlens
