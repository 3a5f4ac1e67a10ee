#include "chainlens/wire.hpp"

#include <bit>
#include <cstring>

namespace chainlens {

namespace {

// Sequential little-endian reader with truncation checks.  Offsets in
// thrown errors are absolute file positions.
class ByteReader {
public:
    ByteReader(std::span<const uint8_t> data, uint64_t base_offset)
        : data_(data), base_(base_offset) {}

    size_t pos() const { return pos_; }
    uint64_t file_pos() const { return base_ + pos_; }

    void need(size_t n) const {
        if (pos_ + n > data_.size())
            throw Error(Errc::truncated_data, "unexpected end of data",
                        file_pos());
    }

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    uint16_t u16le() {
        need(2);
        uint16_t v;
        std::memcpy(&v, data_.data() + pos_, 2);
        pos_ += 2;
        return le16(v);
    }
    uint32_t u32le() {
        need(4);
        uint32_t v;
        std::memcpy(&v, data_.data() + pos_, 4);
        pos_ += 4;
        return le32(v);
    }
    uint64_t u64le() {
        need(8);
        uint64_t v;
        std::memcpy(&v, data_.data() + pos_, 8);
        pos_ += 8;
        return le64(v);
    }
    int32_t i32le() { return int32_t(u32le()); }

    std::span<const uint8_t> take(size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    ParsedVarint varint() {
        ParsedVarint v = parse_varint(data_, pos_);
        pos_ += v.consumed;
        return v;
    }

    static uint16_t le16(uint16_t v) {
        if constexpr (std::endian::native == std::endian::little) return v;
        return uint16_t(v << 8 | v >> 8);
    }
    static uint32_t le32(uint32_t v) {
        if constexpr (std::endian::native == std::endian::little) return v;
        return __builtin_bswap32(v);
    }
    static uint64_t le64(uint64_t v) {
        if constexpr (std::endian::native == std::endian::little) return v;
        return __builtin_bswap64(v);
    }

private:
    std::span<const uint8_t> data_;
    uint64_t base_;
    size_t pos_ = 0;
};

class ByteWriter {
public:
    explicit ByteWriter(std::vector<uint8_t>& out) : out_(out) {}

    void u8(uint8_t v) { out_.push_back(v); }
    void u16le(uint16_t v) {
        u8(uint8_t(v));
        u8(uint8_t(v >> 8));
    }
    void u32le(uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(uint8_t(v >> (8 * i)));
    }
    void u64le(uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(uint8_t(v >> (8 * i)));
    }
    void i32le(int32_t v) { u32le(uint32_t(v)); }
    void bytes(std::span<const uint8_t> b) {
        out_.insert(out_.end(), b.begin(), b.end());
    }
    void varint(uint64_t v) { encode_varint(v, out_); }

private:
    std::vector<uint8_t>& out_;
};

Hash256 read_hash(ByteReader& r) {
    Hash256 h;
    auto s = r.take(32);
    std::memcpy(h.bytes.data(), s.data(), 32);
    return h;
}

TxRecord parse_tx(ByteReader& r, bool& canonical) {
    TxRecord tx;
    tx.version = r.i32le();

    ParsedVarint in_count = r.varint();
    canonical = canonical && in_count.canonical;
    if (in_count.value == 0)
        throw Error(Errc::malformed_block, "transaction with no inputs",
                    r.file_pos());
    if (in_count.value > (1u << 24))
        throw Error(Errc::malformed_block, "absurd input count", r.file_pos());
    tx.inputs.reserve(in_count.value);
    for (uint64_t i = 0; i < in_count.value; ++i) {
        TxIn in;
        in.prev_txid = read_hash(r);
        in.prev_vout = r.u32le();
        ParsedVarint len = r.varint();
        canonical = canonical && len.canonical;
        auto s = r.take(len.value);
        in.script_sig.assign(s.begin(), s.end());
        in.sequence = r.u32le();
        tx.inputs.push_back(std::move(in));
    }

    ParsedVarint out_count = r.varint();
    canonical = canonical && out_count.canonical;
    if (out_count.value == 0)
        throw Error(Errc::malformed_block, "transaction with no outputs",
                    r.file_pos());
    if (out_count.value > (1u << 24))
        throw Error(Errc::malformed_block, "absurd output count", r.file_pos());
    tx.outputs.reserve(out_count.value);
    for (uint64_t i = 0; i < out_count.value; ++i) {
        TxOut out;
        out.value = r.u64le();
        if (out.value > kMaxMoney)
            throw Error(Errc::malformed_block, "output exceeds money range",
                        r.file_pos());
        ParsedVarint len = r.varint();
        canonical = canonical && len.canonical;
        auto s = r.take(len.value);
        out.pk_script.assign(s.begin(), s.end());
        tx.outputs.push_back(std::move(out));
    }

    tx.locktime = r.u32le();
    return tx;
}

} // namespace

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::truncated_data: return "TruncatedData";
        case Errc::bad_magic: return "BadMagic";
        case Errc::malformed_block: return "MalformedBlock";
        case Errc::invalid_address: return "InvalidAddress";
        case Errc::corrupt_file: return "CorruptFile";
        case Errc::duplicate_block: return "DuplicateBlock";
        case Errc::fork_detected: return "ForkDetected";
        case Errc::orphan_block: return "OrphanBlock";
        case Errc::bad_height: return "BadHeight";
        case Errc::insufficient_data: return "InsufficientData";
        case Errc::infeasible_scenario: return "InfeasibleScenario";
    }
    return "Unknown";
}

ParsedVarint parse_varint(std::span<const uint8_t> bytes, size_t offset) {
    if (offset >= bytes.size())
        throw Error(Errc::truncated_data, "varint past end of data", offset);
    uint8_t prefix = bytes[offset];
    ParsedVarint v;
    if (prefix < 0xFD) {
        v.value = prefix;
        v.consumed = 1;
        return v;
    }
    int extra = prefix == 0xFD ? 2 : prefix == 0xFE ? 4 : 8;
    if (offset + 1 + extra > bytes.size())
        throw Error(Errc::truncated_data, "truncated varint", offset);
    uint64_t value = 0;
    for (int i = 0; i < extra; ++i)
        value |= uint64_t(bytes[offset + 1 + i]) << (8 * i);
    v.value = value;
    v.consumed = 1 + extra;
    v.canonical = (prefix == 0xFD && value >= 0xFD) ||
                  (prefix == 0xFE && value > 0xFFFF) ||
                  (prefix == 0xFF && value > 0xFFFFFFFF);
    return v;
}

void encode_varint(uint64_t value, std::vector<uint8_t>& out) {
    if (value < 0xFD) {
        out.push_back(uint8_t(value));
    } else if (value <= 0xFFFF) {
        out.push_back(0xFD);
        out.push_back(uint8_t(value));
        out.push_back(uint8_t(value >> 8));
    } else if (value <= 0xFFFFFFFF) {
        out.push_back(0xFE);
        for (int i = 0; i < 4; ++i) out.push_back(uint8_t(value >> (8 * i)));
    } else {
        out.push_back(0xFF);
        for (int i = 0; i < 8; ++i) out.push_back(uint8_t(value >> (8 * i)));
    }
}

std::vector<uint8_t> serialize_header(const BlockHeader& h) {
    std::vector<uint8_t> out;
    out.reserve(80);
    ByteWriter w(out);
    w.i32le(h.version);
    w.bytes(h.prev_hash.bytes);
    w.bytes(h.merkle_root.bytes);
    w.u32le(h.timestamp);
    w.u32le(h.bits);
    w.u32le(h.nonce);
    return out;
}

std::vector<uint8_t> serialize_tx(const TxRecord& tx) {
    std::vector<uint8_t> out;
    ByteWriter w(out);
    w.i32le(tx.version);
    w.varint(tx.inputs.size());
    for (const TxIn& in : tx.inputs) {
        w.bytes(in.prev_txid.bytes);
        w.u32le(in.prev_vout);
        w.varint(in.script_sig.size());
        w.bytes(in.script_sig);
        w.u32le(in.sequence);
    }
    w.varint(tx.outputs.size());
    for (const TxOut& o : tx.outputs) {
        w.u64le(o.value);
        w.varint(o.pk_script.size());
        w.bytes(o.pk_script);
    }
    w.u32le(tx.locktime);
    return out;
}

std::vector<uint8_t> serialize_block(const BlockRecord& block) {
    std::vector<uint8_t> out;
    ByteWriter w(out);
    w.bytes(std::span<const uint8_t>(kMagic, 4));
    w.u32le(0); // payload size, patched once known
    auto header = serialize_header(block.header);
    w.bytes(header);
    w.varint(block.txs.size());
    for (const TxRecord& tx : block.txs) {
        auto bytes = serialize_tx(tx);
        w.bytes(bytes);
    }
    uint32_t payload = uint32_t(out.size() - 8);
    for (int i = 0; i < 4; ++i) out[4 + i] = uint8_t(payload >> (8 * i));
    return out;
}

Hash256 block_hash(const BlockHeader& header) {
    auto bytes = serialize_header(header);
    return double_sha256(bytes);
}

Hash256 txid(const TxRecord& tx) {
    auto bytes = serialize_tx(tx);
    return double_sha256(bytes);
}

Hash256 merkle_root(std::span<const Hash256> txids) {
    if (txids.empty())
        throw Error(Errc::malformed_block, "merkle root of empty set");
    std::vector<Hash256> level(txids.begin(), txids.end());
    uint8_t pair[64];
    while (level.size() > 1) {
        std::vector<Hash256> next;
        next.reserve((level.size() + 1) / 2);
        for (size_t i = 0; i < level.size(); i += 2) {
            const Hash256& a = level[i];
            const Hash256& b = (i + 1 < level.size()) ? level[i + 1] : level[i];
            std::memcpy(pair, a.bytes.data(), 32);
            std::memcpy(pair + 32, b.bytes.data(), 32);
            next.push_back(double_sha256(std::span<const uint8_t>(pair, 64)));
        }
        level = std::move(next);
    }
    return level[0];
}

BlockRecord parse_block(std::span<const uint8_t> bytes, uint32_t file_index,
                        uint64_t offset, size_t* consumed) {
    ByteReader r(bytes, offset);
    auto magic = r.take(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw Error(Errc::bad_magic, "bad block magic", offset);
    uint32_t payload_size = r.u32le();
    r.need(payload_size);

    BlockRecord block;
    block.file_index = file_index;
    block.byte_offset = offset;

    size_t payload_start = r.pos();
    block.header.version = r.i32le();
    block.header.prev_hash = read_hash(r);
    block.header.merkle_root = read_hash(r);
    block.header.timestamp = r.u32le();
    block.header.bits = r.u32le();
    block.header.nonce = r.u32le();
    block.block_hash =
        double_sha256(bytes.subspan(payload_start, 80));

    ParsedVarint tx_count = r.varint();
    block.canonical_varints = tx_count.canonical;
    if (tx_count.value == 0)
        throw Error(Errc::malformed_block, "block with no transactions",
                    offset);
    if (tx_count.value > payload_size)
        throw Error(Errc::malformed_block, "absurd transaction count", offset);

    block.txs.reserve(tx_count.value);
    std::vector<Hash256> txids;
    txids.reserve(tx_count.value);
    for (uint64_t i = 0; i < tx_count.value; ++i) {
        size_t tx_start = r.pos();
        TxRecord tx = parse_tx(r, block.canonical_varints);
        tx.byte_span.offset = offset + tx_start;
        tx.byte_span.length = r.pos() - tx_start;
        tx.txid = double_sha256(bytes.subspan(tx_start, r.pos() - tx_start));

        bool has_coinbase_input = false;
        for (const TxIn& in : tx.inputs)
            if (in.is_coinbase()) has_coinbase_input = true;
        if (i == 0) {
            if (tx.inputs.size() != 1 || !tx.inputs[0].is_coinbase())
                throw Error(Errc::malformed_block,
                            "first transaction is not a coinbase", offset);
        } else if (has_coinbase_input) {
            throw Error(Errc::malformed_block,
                        "coinbase input outside first transaction", offset);
        }

        txids.push_back(tx.txid);
        block.txs.push_back(std::move(tx));
    }

    if (r.pos() - payload_start != payload_size)
        throw Error(Errc::malformed_block,
                    "declared payload size does not match content", offset);

    if (merkle_root(txids) != block.header.merkle_root)
        throw Error(Errc::malformed_block, "merkle root mismatch", offset);

    if (consumed) *consumed = r.pos();
    return block;
}

std::optional<BlockRecord> BlockFileScanner::next() {
    if (pos_ >= data_.size()) return std::nullopt;
    // zero byte where a magic should start: padding tail, stop cleanly
    if (data_[pos_] == 0x00) {
        pos_ = data_.size();
        return std::nullopt;
    }
    try {
        size_t consumed = 0;
        BlockRecord rec =
            parse_block(data_.subspan(pos_), file_index_, pos_, &consumed);
        pos_ += consumed;
        return rec;
    } catch (const Error& e) {
        throw Error(Errc::corrupt_file,
                    std::string("corrupt block file: ") + e.what(), pos_);
    }
}

std::vector<BlockRecord> scan_file(std::span<const uint8_t> data,
                                   uint32_t file_index) {
    std::vector<BlockRecord> records;
    BlockFileScanner scanner(data, file_index);
    while (auto rec = scanner.next()) records.push_back(std::move(*rec));
    return records;
}

} // namespace chainlens
