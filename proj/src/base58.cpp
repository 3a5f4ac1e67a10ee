#include "chainlens/base58.hpp"

#include "chainlens/errors.hpp"
#include "chainlens/hash.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

namespace chainlens {

namespace {

const char* kAlphabet = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

int alphabet_index(char c) {
    const char* p = std::strchr(kAlphabet, c);
    if (!p || c == '\0') return -1;
    return int(p - kAlphabet);
}

} // namespace

std::string base58check_encode(uint8_t version,
                               const std::array<uint8_t, 20>& payload) {
    uint8_t raw[25];
    raw[0] = version;
    std::memcpy(raw + 1, payload.data(), 20);
    Hash256 check = double_sha256(std::span<const uint8_t>(raw, 21));
    std::memcpy(raw + 21, check.bytes.data(), 4);

    // 25 bytes as 7 big-endian u32 limbs; divide out two base-58 digits
    // (58^2 = 3364) per round
    uint32_t limbs[7] = {};
    for (int i = 0; i < 25; ++i)
        limbs[(i + 3) / 4] = limbs[(i + 3) / 4] << 8 | raw[i];

    char digits[40];
    int n_digits = 0;
    int first = 0;
    while (first < 7) {
        uint64_t rem = 0;
        for (int i = first; i < 7; ++i) {
            uint64_t acc = rem << 32 | limbs[i];
            limbs[i] = uint32_t(acc / 3364);
            rem = acc % 3364;
        }
        digits[n_digits++] = char(rem % 58);
        digits[n_digits++] = char(rem / 58);
        while (first < 7 && limbs[first] == 0) ++first;
    }
    while (n_digits > 1 && digits[n_digits - 1] == 0) --n_digits;

    std::string out;
    out.reserve(36);
    for (uint8_t b : raw) {
        if (b != 0) break;
        out.push_back('1');
    }
    for (int i = n_digits; i-- > 0;) out.push_back(kAlphabet[uint8_t(digits[i])]);
    return out;
}

std::pair<uint8_t, std::array<uint8_t, 20>> base58check_decode(
    const std::string& encoded) {
    if (encoded.empty() || encoded.size() > 64)
        throw Error(Errc::invalid_address, "base58: bad length");

    std::vector<uint8_t> num; // big-endian base-256 accumulator
    for (char c : encoded) {
        int d = alphabet_index(c);
        if (d < 0)
            throw Error(Errc::invalid_address,
                        std::string("base58: invalid character '") + c + "'");
        uint32_t carry = uint32_t(d);
        for (auto it = num.rbegin(); it != num.rend(); ++it) {
            uint32_t acc = uint32_t(*it) * 58 + carry;
            *it = uint8_t(acc & 0xFF);
            carry = acc >> 8;
        }
        while (carry) {
            num.insert(num.begin(), uint8_t(carry & 0xFF));
            carry >>= 8;
        }
    }
    size_t leading = 0;
    while (leading < encoded.size() && encoded[leading] == '1') ++leading;
    std::vector<uint8_t> raw(leading, 0);
    raw.insert(raw.end(), num.begin(), num.end());

    if (raw.size() != 25)
        throw Error(Errc::invalid_address, "base58: payload is not 21 bytes");

    Hash256 check = double_sha256(std::span<const uint8_t>(raw.data(), 21));
    if (std::memcmp(check.bytes.data(), raw.data() + 21, 4) != 0)
        throw Error(Errc::invalid_address, "base58: checksum mismatch");

    std::array<uint8_t, 20> payload;
    std::memcpy(payload.data(), raw.data() + 1, 20);
    return {raw[0], payload};
}

} // namespace chainlens
