#include "chainlens/chaingraph.hpp"

#include <algorithm>

namespace chainlens {

ChainGraph ChainGraph::build(std::vector<BlockRecord> records,
                             int64_t max_height) {
    ChainGraph g;
    if (records.empty()) return g;

    std::unordered_map<Hash256, size_t, Hash256Hasher> by_hash;
    by_hash.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        auto [it, fresh] = by_hash.emplace(records[i].block_hash, i);
        if (!fresh)
            throw Error(Errc::duplicate_block,
                        "duplicate block " + records[i].block_hash.display_hex());
    }

    // children keyed by parent hash; more than one child is a fork
    std::unordered_map<Hash256, size_t, Hash256Hasher> child_of;
    child_of.reserve(records.size());
    size_t root = records.size();
    for (size_t i = 0; i < records.size(); ++i) {
        const Hash256& prev = records[i].header.prev_hash;
        if (!by_hash.count(prev)) {
            if (root != records.size())
                throw Error(Errc::orphan_block,
                            "multiple chain roots; missing parent for " +
                                records[i].block_hash.display_hex());
            root = i;
            continue;
        }
        auto [it, fresh] = child_of.emplace(prev, i);
        if (!fresh)
            throw Error(Errc::fork_detected,
                        "two children of " + prev.display_hex());
    }
    if (root == records.size())
        throw Error(Errc::orphan_block, "no chain root found");

    std::vector<size_t> order;
    order.reserve(records.size());
    size_t cur = root;
    while (true) {
        order.push_back(cur);
        auto it = child_of.find(records[cur].block_hash);
        if (it == child_of.end()) break;
        cur = it->second;
    }
    if (order.size() != records.size())
        throw Error(Errc::orphan_block, "blocks disconnected from the chain");

    g.blocks_.reserve(order.size());
    for (size_t i : order) {
        int64_t h = int64_t(g.blocks_.size());
        if (max_height >= 0 && h > max_height) break;
        records[i].height = h;
        g.blocks_.push_back(std::move(records[i]));
    }

    size_t tx_total = 0, out_total = 0;
    for (const BlockRecord& b : g.blocks_) {
        tx_total += b.txs.size();
        for (const TxRecord& tx : b.txs) out_total += tx.outputs.size();
    }
    g.tx_index_.reserve(tx_total);
    g.outpoint_index_.reserve(out_total);
    g.address_index_.reserve(out_total);

    for (const BlockRecord& b : g.blocks_) {
        uint32_t height = uint32_t(b.height);
        g.raw_bytes_ += 8 + 80; // framing + header
        {
            std::vector<uint8_t> tmp;
            encode_varint(b.txs.size(), tmp);
            g.raw_bytes_ += tmp.size();
        }
        for (uint32_t pos = 0; pos < b.txs.size(); ++pos) {
            const TxRecord& tx = b.txs[pos];
            g.raw_bytes_ += tx.byte_span.length;

            // resolve inputs before indexing this tx's outputs, so an
            // intra-block spend can only point at an earlier transaction
            for (uint32_t i = 0; i < tx.inputs.size(); ++i) {
                const TxIn& in = tx.inputs[i];
                if (in.is_coinbase()) continue;
                Outpoint op{in.prev_txid, in.prev_vout};
                auto it = g.outpoint_index_.find(op);
                if (it == g.outpoint_index_.end()) {
                    g.dangling_.push_back({tx.txid, i});
                    continue;
                }
                SpendLink link{tx.txid, i, op, it->second.height,
                               it->second.value};
                if (it->second.spent_by) {
                    g.conflicting_spends_.push_back(link);
                } else {
                    it->second.spent_by = link;
                }
            }

            g.tx_index_.emplace(tx.txid, TxLocator{height, pos});
            for (uint32_t v = 0; v < tx.outputs.size(); ++v) {
                const TxOut& out = tx.outputs[v];
                Outpoint op{tx.txid, v};
                g.outpoint_index_.emplace(
                    op, OutputEntry{out.value, height, pos, std::nullopt});
                for (const BtcAddress& a : extract_addresses(out.pk_script))
                    g.address_index_[a.encoded].push_back(op);
            }
        }
    }
    return g;
}

const BlockRecord& ChainGraph::block_at(uint32_t height) const {
    if (height >= blocks_.size())
        throw Error(Errc::bad_height, "height out of range");
    return blocks_[height];
}

const TxRecord& ChainGraph::tx_at(const TxLocator& loc) const {
    return block_at(loc.height).txs.at(loc.position);
}

std::optional<TxLocator> ChainGraph::find_tx(const Hash256& txid) const {
    auto it = tx_index_.find(txid);
    if (it == tx_index_.end()) return std::nullopt;
    return it->second;
}

const OutputEntry* ChainGraph::find_output(const Outpoint& op) const {
    auto it = outpoint_index_.find(op);
    return it == outpoint_index_.end() ? nullptr : &it->second;
}

std::vector<InputOrigin> ChainGraph::inputs_with_source_height(
    uint32_t height) const {
    const BlockRecord& b = block_at(height);
    std::vector<InputOrigin> out;
    for (const TxRecord& tx : b.txs) {
        for (const TxIn& in : tx.inputs) {
            InputOrigin o;
            if (in.is_coinbase()) {
                o.coinbase = true;
                out.push_back(o);
                continue;
            }
            const OutputEntry* src = find_output({in.prev_txid, in.prev_vout});
            if (!src) {
                out.push_back(o); // dangling, unresolved
                continue;
            }
            o.amount = src->value;
            o.source_height = src->height;
            o.same_block = (src->height == height);
            o.resolved = true;
            out.push_back(o);
        }
    }
    return out;
}

std::optional<uint32_t> ChainGraph::first_spend_height(
    uint32_t coinbase_height) const {
    const BlockRecord& b = block_at(coinbase_height);
    const TxRecord& coinbase = b.txs.front();
    std::optional<uint32_t> best;
    for (uint32_t v = 0; v < coinbase.outputs.size(); ++v) {
        const OutputEntry* e = find_output({coinbase.txid, v});
        if (!e || !e->spent_by) continue;
        auto loc = find_tx(e->spent_by->spender_txid);
        if (!loc) continue;
        if (!best || loc->height < *best) best = loc->height;
    }
    return best;
}

GraphStats ChainGraph::stats() const {
    GraphStats s;
    s.blocks = blocks_.size();
    for (const BlockRecord& b : blocks_) {
        s.transactions += b.txs.size();
        for (const TxRecord& tx : b.txs) {
            s.inputs += tx.inputs.size();
            s.outputs += tx.outputs.size();
        }
    }
    s.addresses = address_index_.size();
    s.raw_bytes = raw_bytes_;
    return s;
}

VerifyReport ChainGraph::verify() const {
    VerifyReport rep;
    rep.block_fees.assign(blocks_.size(), 0);

    auto flag = [&](ViolationKind k, int64_t h, std::string detail) {
        rep.violations.push_back({k, h, std::move(detail)});
    };

    size_t dangling_seen = 0;
    for (size_t h = 0; h < blocks_.size(); ++h) {
        const BlockRecord& b = blocks_[h];
        if (b.height != int64_t(h))
            flag(ViolationKind::height_gap, int64_t(h), "height not contiguous");
        if (h == 0) {
            // the first block's parent is outside the ingested range
        } else if (b.header.prev_hash != blocks_[h - 1].block_hash) {
            flag(ViolationKind::linkage, int64_t(h),
                 "prev_hash does not match block at height-1");
        }
        if (block_hash(b.header) != b.block_hash)
            flag(ViolationKind::hash_mismatch, int64_t(h),
                 "stored block hash does not match header");

        std::vector<Hash256> ids;
        ids.reserve(b.txs.size());
        for (const TxRecord& tx : b.txs) ids.push_back(tx.txid);
        if (b.txs.empty() || merkle_root(ids) != b.header.merkle_root)
            flag(ViolationKind::merkle_mismatch, int64_t(h),
                 "merkle root does not match transaction set");

        for (size_t pos = 0; pos < b.txs.size(); ++pos) {
            const TxRecord& tx = b.txs[pos];
            bool is_cb_tx = (pos == 0);
            if (is_cb_tx &&
                (tx.inputs.size() != 1 || !tx.inputs[0].is_coinbase()))
                flag(ViolationKind::coinbase_rule, int64_t(h),
                     "first transaction is not a coinbase");

            uint64_t in_sum = 0, out_sum = 0;
            bool all_resolved = true;
            for (uint32_t i = 0; i < tx.inputs.size(); ++i) {
                const TxIn& in = tx.inputs[i];
                if (in.is_coinbase()) {
                    if (!is_cb_tx)
                        flag(ViolationKind::coinbase_rule, int64_t(h),
                             "coinbase input outside first transaction");
                    continue;
                }
                const OutputEntry* src =
                    find_output({in.prev_txid, in.prev_vout});
                if (!src) {
                    ++dangling_seen;
                    all_resolved = false;
                    continue;
                }
                in_sum += src->value;
                if (src->height > h ||
                    (src->height == uint32_t(h) && src->position >= pos))
                    flag(ViolationKind::spend_order, int64_t(h),
                         "spend link does not point strictly backwards");
            }
            for (const TxOut& o : tx.outputs) {
                out_sum += o.value;
                if (o.value > kMaxMoney)
                    flag(ViolationKind::money_range, int64_t(h),
                         "output exceeds money range");
            }
            if (!is_cb_tx && all_resolved) {
                if (in_sum < out_sum)
                    flag(ViolationKind::conservation, int64_t(h),
                         "transaction " + tx.txid.display_hex() +
                             " creates value");
                else
                    rep.block_fees[h] += in_sum - out_sum;
            }
        }
    }

    for (const SpendLink& s : conflicting_spends_)
        flag(ViolationKind::double_spend, int64_t(s.source_height),
             "output " + s.source.txid.display_hex() + ":" +
                 std::to_string(s.source.vout) + " spent more than once");

    if (dangling_seen != dangling_.size())
        flag(ViolationKind::dangling_mismatch, -1,
             "dangling input list does not match unresolved inputs");

    return rep;
}

void write_stats_csv(const GraphStats& s, std::string& out) {
    out += "metric,value\n";
    out += "Blocks," + std::to_string(s.blocks) + "\n";
    out += "Transactions," + std::to_string(s.transactions) + "\n";
    out += "Inputs," + std::to_string(s.inputs) + "\n";
    out += "Outputs," + std::to_string(s.outputs) + "\n";
    out += "Addresses," + std::to_string(s.addresses) + "\n";
    out += "RawBytes," + std::to_string(s.raw_bytes) + "\n";
}

} // namespace chainlens
