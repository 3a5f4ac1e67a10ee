#pragma once

#include "chainlens/errors.hpp"
#include "chainlens/hash.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace chainlens {

inline constexpr uint8_t kMagic[4] = {0xF9, 0xBE, 0xB4, 0xD9};
inline constexpr uint64_t kMaxMoney = 2'100'000'000'000'000ULL; // 21M BTC in satoshis
inline constexpr uint64_t kCoin = 100'000'000ULL;

struct ParsedVarint {
    uint64_t value = 0;
    int consumed = 0;   // 1, 3, 5 or 9
    bool canonical = true;
};

// Decodes the variable-length integer at `offset`: <0xFD inline, 0xFD u16,
// 0xFE u32, 0xFF u64, all little-endian.  Accepts non-canonical (oversized)
// encodings but reports them via `canonical`.
ParsedVarint parse_varint(std::span<const uint8_t> bytes, size_t offset);
void encode_varint(uint64_t value, std::vector<uint8_t>& out);

struct BlockHeader {
    int32_t version = 0;
    Hash256 prev_hash;
    Hash256 merkle_root;
    uint32_t timestamp = 0;
    uint32_t bits = 0;
    uint32_t nonce = 0;

    bool operator==(const BlockHeader&) const = default;
};

struct TxIn {
    Hash256 prev_txid;
    uint32_t prev_vout = 0;
    std::vector<uint8_t> script_sig;
    uint32_t sequence = 0;

    bool is_coinbase() const {
        return prev_vout == 0xFFFFFFFF && prev_txid.is_zero();
    }
    bool operator==(const TxIn&) const = default;
};

struct TxOut {
    uint64_t value = 0; // satoshis
    std::vector<uint8_t> pk_script;

    bool operator==(const TxOut&) const = default;
};

struct ByteSpan {
    uint64_t offset = 0; // within the source file
    uint64_t length = 0;
};

struct TxRecord {
    int32_t version = 0;
    std::vector<TxIn> inputs;
    std::vector<TxOut> outputs;
    uint32_t locktime = 0;
    Hash256 txid; // derived
    ByteSpan byte_span;

    // provenance excluded: equality is wire content plus derived id
    bool operator==(const TxRecord& o) const {
        return version == o.version && inputs == o.inputs &&
               outputs == o.outputs && locktime == o.locktime && txid == o.txid;
    }
};

struct BlockRecord {
    BlockHeader header;
    std::vector<TxRecord> txs;
    Hash256 block_hash; // derived
    uint32_t file_index = 0;
    uint64_t byte_offset = 0;
    int64_t height = -1;           // assigned by the chain graph
    bool canonical_varints = true; // false when any count/length was oversized

    bool operator==(const BlockRecord& o) const {
        return header == o.header && txs == o.txs && block_hash == o.block_hash;
    }
};

Hash256 block_hash(const BlockHeader& header);
Hash256 txid(const TxRecord& tx);

std::vector<uint8_t> serialize_header(const BlockHeader& header); // 80 bytes
std::vector<uint8_t> serialize_tx(const TxRecord& tx);
// Full framing: magic, u32 payload size, payload.
std::vector<uint8_t> serialize_block(const BlockRecord& block);

// `bytes` starts at the magic; `offset` is that position in the file.
// Validates structure, coinbase placement, merkle root and money range.
// On return *consumed, when given, is 8 + declared payload size.
BlockRecord parse_block(std::span<const uint8_t> bytes, uint32_t file_index,
                        uint64_t offset, size_t* consumed = nullptr);

// Root of the pairwise double-SHA256 tree, duplicating the last entry of
// odd levels.  Throws Error{malformed_block} when the list is empty.
Hash256 merkle_root(std::span<const Hash256> txids);

// Walks a concatenation of framed blocks.  A zero byte where the next
// magic should start is treated as the padding tail and ends the scan.
// Anything else unparseable throws Error{corrupt_file} whose offset() is
// the end of the last good block.
class BlockFileScanner {
public:
    BlockFileScanner(std::span<const uint8_t> data, uint32_t file_index)
        : data_(data), file_index_(file_index) {}

    std::optional<BlockRecord> next();
    uint64_t position() const { return pos_; }

private:
    std::span<const uint8_t> data_;
    uint32_t file_index_;
    uint64_t pos_ = 0;
};

std::vector<BlockRecord> scan_file(std::span<const uint8_t> data,
                                   uint32_t file_index);

} // namespace chainlens
