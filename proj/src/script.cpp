#include "chainlens/script.hpp"

#include "chainlens/base58.hpp"
#include "chainlens/hash.hpp"

#include <cstring>

namespace chainlens {

namespace {

constexpr uint8_t OP_DUP = 0x76;
constexpr uint8_t OP_HASH160 = 0xA9;
constexpr uint8_t OP_EQUAL = 0x87;
constexpr uint8_t OP_EQUALVERIFY = 0x88;
constexpr uint8_t OP_CHECKSIG = 0xAC;

std::array<uint8_t, 20> slice20(std::span<const uint8_t> s, size_t at) {
    std::array<uint8_t, 20> a;
    std::memcpy(a.data(), s.data() + at, 20);
    return a;
}

} // namespace

std::vector<BtcAddress> extract_addresses(std::span<const uint8_t> s) {
    std::vector<BtcAddress> out;

    // OP_DUP OP_HASH160 <20> OP_EQUALVERIFY OP_CHECKSIG
    if (s.size() == 25 && s[0] == OP_DUP && s[1] == OP_HASH160 && s[2] == 20 &&
        s[23] == OP_EQUALVERIFY && s[24] == OP_CHECKSIG) {
        out.push_back({base58check_encode(0x00, slice20(s, 3)),
                       AddressKind::p2pkh});
        return out;
    }

    // <push 33|65 pubkey> OP_CHECKSIG
    if ((s.size() == 67 && s[0] == 65 && s[66] == OP_CHECKSIG) ||
        (s.size() == 35 && s[0] == 33 && s[34] == OP_CHECKSIG)) {
        auto h = hash160(s.subspan(1, s[0]));
        out.push_back({base58check_encode(0x00, h), AddressKind::p2pk});
        return out;
    }

    // OP_HASH160 <20> OP_EQUAL
    if (s.size() == 23 && s[0] == OP_HASH160 && s[1] == 20 && s[22] == OP_EQUAL) {
        out.push_back({base58check_encode(0x05, slice20(s, 2)),
                       AddressKind::p2sh});
        return out;
    }

    return out;
}

std::vector<uint8_t> make_p2pkh_script(const std::array<uint8_t, 20>& h) {
    std::vector<uint8_t> s;
    s.reserve(25);
    s.push_back(OP_DUP);
    s.push_back(OP_HASH160);
    s.push_back(20);
    s.insert(s.end(), h.begin(), h.end());
    s.push_back(OP_EQUALVERIFY);
    s.push_back(OP_CHECKSIG);
    return s;
}

std::vector<uint8_t> make_p2pk_script(std::span<const uint8_t> pubkey) {
    std::vector<uint8_t> s;
    s.reserve(pubkey.size() + 2);
    s.push_back(uint8_t(pubkey.size()));
    s.insert(s.end(), pubkey.begin(), pubkey.end());
    s.push_back(OP_CHECKSIG);
    return s;
}

std::vector<uint8_t> make_p2sh_script(const std::array<uint8_t, 20>& h) {
    std::vector<uint8_t> s;
    s.reserve(23);
    s.push_back(OP_HASH160);
    s.push_back(20);
    s.insert(s.end(), h.begin(), h.end());
    s.push_back(OP_EQUAL);
    return s;
}

std::optional<std::vector<std::vector<uint8_t>>> parse_pushes(
    std::span<const uint8_t> script) {
    std::vector<std::vector<uint8_t>> pushes;
    size_t pos = 0;
    while (pos < script.size()) {
        uint8_t op = script[pos++];
        if (op < 0x01 || op > 0x4B) return std::nullopt;
        if (pos + op > script.size()) return std::nullopt;
        pushes.emplace_back(script.begin() + pos, script.begin() + pos + op);
        pos += op;
    }
    return pushes;
}

} // namespace chainlens
