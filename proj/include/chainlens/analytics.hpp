#pragma once

#include "chainlens/chaingraph.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace chainlens {

// Fraction of the value entering dst_height that originates from
// src_height.  Strictly upper triangular: src < dst always.
struct FlowCell {
    uint32_t src_height = 0;
    uint32_t dst_height = 0;
    double fraction = 0.0;

    bool operator==(const FlowCell&) const = default;
};

// Amount-weighted mean age, in blocks, of the value spent in a block.
struct DwellPoint {
    uint32_t height = 0;
    double dwell = 0.0;
    uint64_t included_satoshis = 0;
};

struct TrendFit {
    double slope = 0.0;     // blocks per block
    double intercept = 0.0; // blocks
    size_t n_points = 0;
};

struct ExtranonceSample {
    uint32_t height = 0;
    std::optional<uint32_t> extranonce;
    std::optional<uint32_t> spend_height;
};

struct MinerRun {
    uint32_t start_height = 0;
    uint32_t end_height = 0;
    double slope = 0.0; // extranonce units per block
    double residual = 0.0;
    uint32_t members = 0;
};

struct DegreeBin {
    uint32_t height = 0;
    int32_t signed_degree = 0; // +inputs / -outputs
    uint32_t count = 0;

    bool operator==(const DegreeBin&) const = default;
};

enum class Direction { inbound, outbound };
const char* direction_name(Direction d); // "in" / "out"

struct SpamEpisode {
    Direction direction = Direction::outbound;
    uint32_t signature_degree = 0;
    uint32_t start_height = 0;
    uint32_t end_height = 0;
    uint64_t tx_count = 0;

    bool operator==(const SpamEpisode&) const = default;
};

// Inter-block value flow.  Coinbase and same-block inputs are excluded;
// per destination the fractions of the remaining inputs sum to 1.
// Ordered by (dst_height, src_height).
std::vector<FlowCell> flow_matrix(const ChainGraph& graph);

// Amount-weighted mean age of the value spent in a block, over all
// inputs with a source block.  Coinbase inputs have no source and are
// excluded; same-block inputs count at distance zero.  Absent when no
// qualifying input carries value.
std::optional<DwellPoint> dwell_time(const ChainGraph& graph, uint32_t height);
std::vector<DwellPoint> dwell_series(const ChainGraph& graph);

// Ordinary least squares of dwell on height.  Throws
// Error{insufficient_data} for fewer than two points.
TrendFit dwell_trend(std::span<const DwellPoint> points);

// Coinbase scriptSig schema: first push exactly 4 bytes, second push of
// 1..4 bytes read little-endian.  Anything else is absent.
std::optional<uint32_t> extranonce_from_coinbase(
    std::span<const uint8_t> script_sig);

// One sample per block, joined with the height at which the block's
// coinbase was first spent.
std::vector<ExtranonceSample> extranonce_series(const ChainGraph& graph);

struct MinerRunParams {
    double reset_threshold = 0.5;
    double max_residual = 8.0; // rms gate separating lines from noise
};

// Greedy segmentation of the extranonce clock signal.  A run grows while
// values are non-decreasing; a drop below reset_threshold x previous
// value is a counter reset and starts the next run; smaller dips are
// treated as interlopers and skipped.  Runs need >= 3 members and an rms
// fit residual within max_residual to be reported.
std::vector<MinerRun> miner_runs(std::span<const ExtranonceSample> samples,
                                 const MinerRunParams& params = {});

// Per block, transaction count by input degree (positive) and output
// degree (negative).  Ordered by (height, signed_degree).
std::vector<DegreeBin> degree_spectrogram(const ChainGraph& graph);

struct SpamParams {
    uint32_t min_degree = 10;
    uint32_t min_count = 5;
    uint32_t max_gap = 10;
};

// Maximal height intervals, per anomalous degree, where the per-block
// count stays at or above min_count, bridging gaps of up to max_gap
// blocks.  Ordered by (start_height, direction, signature_degree).
std::vector<SpamEpisode> spam_episodes(std::span<const DegreeBin> bins,
                                       const SpamParams& params = {});

} // namespace chainlens
