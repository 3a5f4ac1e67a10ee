#pragma once

#include "chainlens/script.hpp"
#include "chainlens/wire.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace chainlens {

struct Outpoint {
    Hash256 txid;
    uint32_t vout = 0;

    bool operator==(const Outpoint&) const = default;
};

struct OutpointHasher {
    size_t operator()(const Outpoint& o) const {
        size_t v;
        std::memcpy(&v, o.txid.bytes.data(), sizeof(v));
        return v ^ (size_t(o.vout) * 0x9E3779B97F4A7C15ULL);
    }
};

struct SpendLink {
    Hash256 spender_txid;
    uint32_t input_index = 0;
    Outpoint source;
    uint32_t source_height = 0;
    uint64_t amount = 0;
};

struct TxLocator {
    uint32_t height = 0;
    uint32_t position = 0; // index within the block
};

struct OutputEntry {
    uint64_t value = 0;
    uint32_t height = 0;   // creation height
    uint32_t position = 0; // creating tx's index within its block
    std::optional<SpendLink> spent_by;
};

struct DanglingInput {
    Hash256 spender_txid;
    uint32_t input_index = 0;
};

// One entry per transaction input of a block, resolved to its source.
struct InputOrigin {
    uint64_t amount = 0;
    int64_t source_height = -1;
    bool same_block = false;
    bool coinbase = false;
    bool resolved = false; // false for coinbase and dangling inputs
};

// Table-2-shaped vertex counts.
struct GraphStats {
    uint64_t blocks = 0;
    uint64_t transactions = 0;
    uint64_t inputs = 0;
    uint64_t outputs = 0;
    uint64_t addresses = 0;
    uint64_t raw_bytes = 0;

    bool operator==(const GraphStats&) const = default;
};

enum class ViolationKind {
    linkage,
    height_gap,
    coinbase_rule,
    merkle_mismatch,
    hash_mismatch,
    double_spend,
    spend_order,
    conservation,
    dangling_mismatch,
    money_range,
};

struct Violation {
    ViolationKind kind;
    int64_t height = -1;
    std::string detail;
};

struct VerifyReport {
    std::vector<Violation> violations;
    std::vector<uint64_t> block_fees; // per height, non-coinbase fee total
    bool ok() const { return violations.empty(); }
};

class ChainGraph {
public:
    // Accepts records in any order; links them into a single chain by
    // prev_hash and indexes every output, spend and address.
    // Blocks above max_height (when >= 0) are dropped after linking.
    static ChainGraph build(std::vector<BlockRecord> records,
                            int64_t max_height = -1);

    const std::vector<BlockRecord>& blocks() const { return blocks_; }
    uint32_t tip_height() const { return uint32_t(blocks_.size()) - 1; }

    const BlockRecord& block_at(uint32_t height) const;
    const TxRecord& tx_at(const TxLocator& loc) const;
    std::optional<TxLocator> find_tx(const Hash256& txid) const;

    const OutputEntry* find_output(const Outpoint& op) const;
    const std::vector<DanglingInput>& dangling_inputs() const {
        return dangling_;
    }
    const std::vector<SpendLink>& conflicting_spends() const {
        return conflicting_spends_;
    }
    const std::unordered_map<std::string, std::vector<Outpoint>>&
    address_index() const {
        return address_index_;
    }

    // One InputOrigin per input of every transaction in the block,
    // in (tx, input) order.  Throws Error{bad_height} out of range.
    std::vector<InputOrigin> inputs_with_source_height(uint32_t height) const;

    // Minimum height at which any output of block h's coinbase is spent.
    std::optional<uint32_t> first_spend_height(uint32_t coinbase_height) const;

    GraphStats stats() const;

    // Re-checks every structural invariant plus per-transaction value
    // conservation.  Returns findings; never throws.
    VerifyReport verify() const;

private:
    std::vector<BlockRecord> blocks_;
    std::unordered_map<Hash256, TxLocator, Hash256Hasher> tx_index_;
    std::unordered_map<Outpoint, OutputEntry, OutpointHasher> outpoint_index_;
    std::unordered_map<std::string, std::vector<Outpoint>> address_index_;
    std::vector<DanglingInput> dangling_;
    std::vector<SpendLink> conflicting_spends_;
    uint64_t raw_bytes_ = 0;
};

void write_stats_csv(const GraphStats& stats, std::string& out);

} // namespace chainlens
